//! Formats shared with the external fine-tuning process: the chat wire
//! contract, dataset line-json and the transcript.

use newscast::agent::{read_transcript, wire_reply, wire_request, AgentClient, ScriptedChat};
use newscast::forecast::{emit_dataset, read_dataset, write_dataset};
use newscast::prompt::{Message, PromptBundle, Purpose, TrainingExample};
use serde_json::{json, Value};

#[test]
fn wire_request_shape() {
    let body = wire_request("m-1", &[Message::system("s"), Message::user("u"), Message::assistant("a")], 0.2);
    assert_eq!(
        body,
        json!({
            "model": "m-1",
            "messages": [
                {"role": "system", "content": "s"},
                {"role": "user", "content": "u"},
                {"role": "assistant", "content": "a"}
            ],
            "temperature": 0.2
        })
    );
}

#[test]
fn wire_reply_extracts_first_choice() {
    let body = json!({"choices": [{"message": {"role": "assistant", "content": "1.0,2.0"}}, {"message": {"content": "x"}}]});
    assert_eq!(wire_reply(&body).unwrap(), "1.0,2.0");
    assert!(wire_reply(&json!({"choices": []})).is_err());
    assert!(wire_reply(&json!({"error": "boom"})).is_err());
}

#[test]
fn dataset_lines_have_exactly_three_keys() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("d.jsonl");
    let examples = vec![
        TrainingExample { instruction: "i \"q\"".into(), input: "a\nb".into(), output: "1.0,2.0".into() },
        TrainingExample { instruction: "j".into(), input: "".into(), output: "3.0".into() },
    ];
    write_dataset(&examples, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    for line in text.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["input", "instruction", "output"]);
    }
    assert_eq!(read_dataset(&path).unwrap(), examples);

    let mut sink = Vec::new();
    let bad = TrainingExample { instruction: "i".into(), input: "x".into(), output: String::new() };
    assert!(emit_dataset(&[examples[0].clone(), bad], &mut sink).is_err());
}

#[test]
fn transcript_records_every_call() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("t.jsonl");
    let client = AgentClient::new(ScriptedChat::new(["one", "two"]), 0).with_transcript(&path).unwrap();
    let a = PromptBundle { purpose: Purpose::Reasoning, messages: vec![Message::user("first")] };
    let b = PromptBundle { purpose: Purpose::Evaluation, messages: vec![Message::user("second")] };
    client.send(&a).unwrap();
    client.send(&b).unwrap();
    let records = read_transcript(&path).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].reply, "one");
    assert_eq!(records[0].bundle_hash, a.hash());
    assert_eq!(records[1].purpose, Purpose::Evaluation);
    assert_eq!(records[1].messages, b.messages);
    let line: Value = serde_json::from_str(std::fs::read_to_string(&path).unwrap().lines().next().unwrap()).unwrap();
    for key in ["bundle_hash", "purpose", "messages", "reply", "timestamp"] {
        assert!(line.get(key).is_some(), "missing {key}");
    }
}
