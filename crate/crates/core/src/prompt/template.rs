//! Minimal `{{name}}` templating.
//!
//! - `{{name}}` is replaced by the bound text; an unbound name is an error.
//! - `{{#name}}…{{/name}}` renders its body only when `name` is bound to
//!   non-empty text. Sections may nest but not overlap.
//!
//! Nothing else is special; there is no escaping.

use std::collections::BTreeMap;

use super::PromptError;

#[derive(Debug, Clone, Default)]
pub struct Vars(BTreeMap<String, String>);

impl Vars {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, name: &str, value: impl Into<String>) -> &mut Self {
        self.0.insert(name.to_string(), value.into());
        self
    }

    /// Bind `name` only when `value` is present.
    pub fn set_opt(&mut self, name: &str, value: Option<impl Into<String>>) -> &mut Self {
        if let Some(v) = value {
            self.set(name, v);
        }
        self
    }

    fn truthy(&self, name: &str) -> bool {
        self.0.get(name).is_some_and(|v| !v.is_empty())
    }
}

#[derive(Debug, PartialEq)]
enum Node<'a> {
    Text(&'a str),
    Var(&'a str),
    Section(&'a str, Vec<Node<'a>>),
}

fn parse(src: &str) -> Result<Vec<Node<'_>>, PromptError> {
    let mut stack: Vec<(&str, Vec<Node>)> = vec![("", Vec::new())];
    let mut rest = src;
    while let Some(open) = rest.find("{{") {
        if open > 0 {
            stack.last_mut().unwrap().1.push(Node::Text(&rest[..open]));
        }
        let after = &rest[open + 2..];
        let close = after
            .find("}}")
            .ok_or_else(|| PromptError::Template(format!("unclosed tag near {:?}", &rest[open..])))?;
        let tag = after[..close].trim();
        rest = &after[close + 2..];
        if let Some(name) = tag.strip_prefix('#') {
            stack.push((name.trim(), Vec::new()));
        } else if let Some(name) = tag.strip_prefix('/') {
            let (open_name, body) = stack.pop().filter(|_| !stack.is_empty()).ok_or_else(|| {
                PromptError::Template(format!("section end {name:?} without start"))
            })?;
            if open_name != name.trim() {
                return Err(PromptError::Template(format!(
                    "section {open_name:?} closed by {name:?}"
                )));
            }
            stack.last_mut().unwrap().1.push(Node::Section(open_name, body));
        } else if tag.is_empty() {
            return Err(PromptError::Template("empty tag".into()));
        } else {
            stack.last_mut().unwrap().1.push(Node::Var(tag));
        }
    }
    if !rest.is_empty() {
        stack.last_mut().unwrap().1.push(Node::Text(rest));
    }
    if stack.len() != 1 {
        return Err(PromptError::Template(format!("section {:?} never closed", stack.last().unwrap().0)));
    }
    Ok(stack.pop().unwrap().1)
}

fn emit(nodes: &[Node], vars: &Vars, out: &mut String) -> Result<(), PromptError> {
    for node in nodes {
        match node {
            Node::Text(t) => out.push_str(t),
            Node::Var(name) => {
                let v = vars
                    .0
                    .get(*name)
                    .ok_or_else(|| PromptError::Template(format!("unresolved placeholder {{{{{name}}}}}")))?;
                out.push_str(v);
            }
            Node::Section(name, body) => {
                if vars.truthy(name) {
                    emit(body, vars, out)?;
                }
            }
        }
    }
    Ok(())
}

pub fn render(src: &str, vars: &Vars) -> Result<String, PromptError> {
    let nodes = parse(src)?;
    let mut out = String::with_capacity(src.len() * 2);
    emit(&nodes, vars, &mut out)?;
    Ok(out)
}

/// Template source as embedded: a single trailing newline from the file
/// is not part of the template.
pub(crate) fn source(raw: &'static str) -> &'static str {
    raw.strip_suffix('\n').unwrap_or(raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substitutes_and_sections() {
        let mut v = Vars::new();
        v.set("a", "x").set("flag", "1").set("empty", "");
        assert_eq!(render("{{a}}-{{#flag}}[{{a}}]{{/flag}}{{#empty}}no{{/empty}}{{#missing}}no{{/missing}}", &v).unwrap(), "x-[x]");
        assert_eq!(render("plain", &v).unwrap(), "plain");
        assert_eq!(render("{{#flag}}{{#empty}}in{{/empty}}out{{/flag}}", &v).unwrap(), "out");
    }

    #[test]
    fn rejects_unresolved_and_malformed() {
        let v = Vars::new();
        assert!(matches!(render("{{nope}}", &v), Err(PromptError::Template(_))));
        assert!(render("{{#a}}x", &v).is_err());
        assert!(render("x{{/a}}", &v).is_err());
        assert!(render("{{#a}}{{/b}}", &v).is_err());
        assert!(render("{{a", &v).is_err());
    }

    #[test]
    fn value_text_is_not_reinterpreted() {
        let mut v = Vars::new();
        v.set("a", "{{b}}");
        assert_eq!(render("{{a}}", &v).unwrap(), "{{b}}");
    }
}
