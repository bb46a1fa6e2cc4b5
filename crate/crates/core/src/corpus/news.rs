use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{CorpusError, Result};
use crate::timefmt;

/// A news record normalized to UTC.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewsItem {
    pub id: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub summary: Option<String>,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub url: Option<String>,
    pub published_at: DateTime<Utc>,
    pub region: String,
}

impl NewsItem {
    /// `url` when present, otherwise a digest of title and publication time.
    pub fn dedupe_key(&self) -> String {
        match self.url.as_deref().filter(|u| !u.trim().is_empty()) {
            Some(url) => format!("url:{}", url.trim()),
            None => format!("hash:{}", content_digest(&self.title, &self.published_at)),
        }
    }
}

fn content_digest(title: &str, published_at: &DateTime<Utc>) -> String {
    let mut hasher = Sha256::new();
    hasher.update(title.as_bytes());
    hasher.update(b"\x1f");
    hasher.update(published_at.to_rfc3339().as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NewsFormat {
    LineJson,
    Csv,
}

impl NewsFormat {
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => NewsFormat::Csv,
            _ => NewsFormat::LineJson,
        }
    }
}

/// Wire shape of one news record; every field optional so missing ones
/// can be reported by name.
#[derive(Debug, Default, Deserialize)]
struct RawNews {
    id: Option<String>,
    title: Option<String>,
    summary: Option<String>,
    content: Option<String>,
    category: Option<String>,
    url: Option<String>,
    published_at: Option<String>,
    region: Option<String>,
}

fn non_empty(v: Option<String>) -> Option<String> {
    v.filter(|s| !s.trim().is_empty())
}

impl RawNews {
    fn into_item(self) -> std::result::Result<NewsItem, String> {
        let title = non_empty(self.title).ok_or("missing required field `title`")?;
        let content = self.content.ok_or("missing required field `content`")?;
        let published = non_empty(self.published_at).ok_or("missing required field `published_at`")?;
        let region = non_empty(self.region).ok_or("missing required field `region`")?;
        let published_at = timefmt::parse_timestamp(&published)
            .ok_or_else(|| format!("unparseable published_at {published:?}"))?;
        let mut item = NewsItem {
            id: String::new(),
            title: title.trim().to_string(),
            summary: non_empty(self.summary),
            content,
            category: non_empty(self.category),
            url: non_empty(self.url),
            published_at,
            region: region.trim().to_string(),
        };
        item.id = match non_empty(self.id) {
            Some(id) => id,
            None => {
                let key = item.dedupe_key();
                let mut hasher = Sha256::new();
                hasher.update(key.as_bytes());
                format!("n{}", &hex::encode(hasher.finalize())[..12])
            }
        };
        Ok(item)
    }
}

/// Items kept plus the number of records dropped as duplicates.
#[derive(Debug, Clone)]
pub struct NewsIngest {
    pub items: Vec<NewsItem>,
    pub duplicates: usize,
}

/// Read news, deduplicate on [`NewsItem::dedupe_key`] (first record wins)
/// and sort by publication time.
pub fn ingest_news(path: &Path, format: NewsFormat) -> Result<Vec<NewsItem>> {
    ingest_news_detailed(path, format).map(|r| r.items)
}

pub fn ingest_news_detailed(path: &Path, format: NewsFormat) -> Result<NewsIngest> {
    let raw = match format {
        NewsFormat::LineJson => read_line_json(path)?,
        NewsFormat::Csv => read_csv(path)?,
    };
    let mut seen = HashSet::new();
    let mut items = Vec::with_capacity(raw.len());
    let mut duplicates = 0;
    for item in raw {
        if seen.insert(item.dedupe_key()) {
            items.push(item);
        } else {
            duplicates += 1;
        }
    }
    sort_chronologically(&mut items);
    Ok(NewsIngest { items, duplicates })
}

pub(crate) fn sort_chronologically(items: &mut [NewsItem]) {
    items.sort_by(|a, b| a.published_at.cmp(&b.published_at).then_with(|| a.id.cmp(&b.id)));
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CorpusError {
    CorpusError::Io(format!("{}: {e}", path.display()))
}

fn read_line_json(path: &Path) -> Result<Vec<NewsItem>> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawNews = serde_json::from_str(&line).map_err(|e| CorpusError::Ingest {
            line: line_no,
            reason: e.to_string(),
        })?;
        out.push(raw.into_item().map_err(|reason| CorpusError::Ingest { line: line_no, reason })?);
    }
    Ok(out)
}

fn read_csv(path: &Path) -> Result<Vec<NewsItem>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| io_err(path, e))?;
    let headers = reader.headers().map_err(|e| io_err(path, e))?.clone();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CorpusError::Ingest {
            line: e.position().map(|p| p.line() as usize).unwrap_or(0),
            reason: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let raw: RawNews = record
            .deserialize(Some(&headers))
            .map_err(|e| CorpusError::Ingest { line, reason: e.to_string() })?;
        out.push(raw.into_item().map_err(|reason| CorpusError::Ingest { line, reason })?);
    }
    Ok(out)
}

/// Chronologically sorted news with lookup by id. Read-only after
/// construction.
#[derive(Debug, Clone, Default)]
pub struct NewsCorpus {
    items: Vec<NewsItem>,
    by_id: HashMap<String, usize>,
}

impl NewsCorpus {
    pub fn new(mut items: Vec<NewsItem>) -> Self {
        sort_chronologically(&mut items);
        let by_id = items.iter().enumerate().map(|(i, n)| (n.id.clone(), i)).collect();
        Self { items, by_id }
    }

    pub fn items(&self) -> &[NewsItem] {
        &self.items
    }

    pub fn get(&self, id: &str) -> Option<&NewsItem> {
        self.by_id.get(id).map(|&i| &self.items[i])
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Items with `from <= published_at < until`, in order.
    pub fn published_between(&self, from: DateTime<Utc>, until: DateTime<Utc>) -> &[NewsItem] {
        let lo = self.items.partition_point(|n| n.published_at < from);
        let hi = self.items.partition_point(|n| n.published_at < until);
        &self.items[lo..hi.max(lo)]
    }
}
