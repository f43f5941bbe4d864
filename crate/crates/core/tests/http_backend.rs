use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use simulrag::gateway::{
    Backend, BackendTag, ChatRequest, Gateway, GatewayError, HttpBackend, RetryPolicy, TemplateId, API_KEY_ENV,
};

struct Seen {
    path: String,
    headers: Vec<(String, String)>,
    body: serde_json::Value,
}

impl Seen {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers.iter().find(|(k, _)| k.eq_ignore_ascii_case(name)).map(|(_, v)| v.as_str())
    }
}

/// Serves one canned (status, extra headers, body) per connection, in order.
fn stub(replies: Vec<(u16, &'static str, String)>) -> (String, Arc<Mutex<Vec<Seen>>>, JoinHandle<()>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/v1", listener.local_addr().unwrap());
    let seen = Arc::new(Mutex::new(Vec::new()));
    let log = seen.clone();
    let handle = std::thread::spawn(move || {
        for (status, extra, body) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let path = line.split_whitespace().nth(1).unwrap_or_default().to_string();
            let mut headers = Vec::new();
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                let h = h.trim_end();
                if h.is_empty() {
                    break;
                }
                let (k, v) = h.split_once(':').unwrap();
                headers.push((k.trim().to_string(), v.trim().to_string()));
            }
            let len: usize = headers
                .iter()
                .find(|(k, _)| k.eq_ignore_ascii_case("content-length"))
                .map_or(0, |(_, v)| v.parse().unwrap());
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            log.lock().unwrap().push(Seen {
                path,
                headers,
                body: serde_json::from_slice(&buf).unwrap_or(serde_json::Value::Null),
            });
            let reply = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n{extra}\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (url, seen, handle)
}

fn ok_body(text: &str) -> String {
    serde_json::json!({
        "choices": [{"message": {"role": "assistant", "content": text}}],
        "usage": {"prompt_tokens": 11, "completion_tokens": 3}
    })
    .to_string()
}

fn fast() -> RetryPolicy {
    RetryPolicy {
        max_attempts: 3,
        base_delay: Duration::from_millis(1),
    }
}

fn request() -> ChatRequest {
    ChatRequest::new(TemplateId::VerbalizedConf)
        .bind("question", "How warm will Oslo be?")
        .bind("claim", "Oslo will warm.")
}

#[test]
fn key_variable_name() {
    assert_eq!(API_KEY_ENV, "SIMULRAG_API_KEY");
}

#[test]
fn posts_prompt_with_bearer_token() {
    let (url, seen, h) = stub(vec![(200, "", ok_body("0.7"))]);
    let backend = HttpBackend::with_key(&url, Some("sk-test".into())).unwrap().with_retry(fast());
    let req = request();
    let prompt = req.prompt().unwrap();
    let c = backend.complete(&prompt, "gpt-4o", &req).unwrap();
    h.join().unwrap();
    assert_eq!(c.text, "0.7");
    assert_eq!(c.backend_tag, BackendTag::Http);
    assert_eq!(c.usage.unwrap().prompt_tokens, 11);
    let seen = seen.lock().unwrap();
    assert_eq!(seen[0].path, "/v1/chat/completions");
    assert_eq!(seen[0].header("authorization"), Some("Bearer sk-test"));
    assert_eq!(seen[0].body["model"], "gpt-4o");
    assert_eq!(seen[0].body["messages"][0]["content"], prompt.as_str());
    assert_eq!(seen[0].body["max_tokens"], 1024);
}

#[test]
fn no_key_no_header() {
    let (url, seen, h) = stub(vec![(200, "", ok_body("x"))]);
    let backend = HttpBackend::with_key(&url, None).unwrap().with_retry(fast());
    let req = request();
    backend.complete("p", "m", &req).unwrap();
    h.join().unwrap();
    assert!(seen.lock().unwrap()[0].header("authorization").is_none());
}

#[test]
fn retries_server_errors() {
    let (url, seen, h) = stub(vec![(503, "", "{}".into()), (502, "", "{}".into()), (200, "", ok_body("done"))]);
    let backend = HttpBackend::with_key(&url, None).unwrap().with_retry(fast());
    let c = backend.complete("p", "m", &request()).unwrap();
    h.join().unwrap();
    assert_eq!(c.text, "done");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn rate_limit_exhausts_attempts() {
    let r = || (429u16, "retry-after: 0\r\n", "{}".to_string());
    let (url, seen, h) = stub(vec![r(), r(), r()]);
    let backend = HttpBackend::with_key(&url, None).unwrap().with_retry(fast());
    let err = backend.complete("p", "m", &request()).unwrap_err();
    h.join().unwrap();
    assert!(matches!(err, GatewayError::RateLimited { retry_after: Some(d) } if d == Duration::ZERO), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 3);
}

#[test]
fn client_errors_are_not_retried() {
    let (url, seen, h) = stub(vec![(400, "", r#"{"error":"bad"}"#.into())]);
    let backend = HttpBackend::with_key(&url, None).unwrap().with_retry(fast());
    let err = backend.complete("p", "m", &request()).unwrap_err();
    h.join().unwrap();
    assert!(matches!(err, GatewayError::Transport { attempts: 1, .. }), "{err:?}");
    assert_eq!(seen.lock().unwrap().len(), 1);
}

#[test]
fn gateway_parses_http_output() {
    let (url, _, h) = stub(vec![(200, "", ok_body("Confidence: 0.35"))]);
    let backend = HttpBackend::with_key(&url, None).unwrap().with_retry(fast());
    let gw = Gateway::new(Arc::new(backend), "gpt-4o");
    let c = gw.complete(&request()).unwrap();
    h.join().unwrap();
    assert_eq!(c.text, "Confidence: 0.35");
}
