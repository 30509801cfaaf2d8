//! Both HTTP adapters against a one-shot local server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::thread;

use crowdwrite_core::brainwrite::{GenerationBackend, HttpChatBackend, SamplingParams};
use crowdwrite_core::embedding::{EmbeddingProvider, HttpEmbeddingProvider};

struct Captured {
    request_line: String,
    headers: Vec<(String, String)>,
    body: serde_json::Value,
}

impl Captured {
    fn header(&self, name: &str) -> Option<&str> {
        self.headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

/// Serves one request with `status` and `body`, returning the base URL and
/// a channel that yields what the client sent.
fn serve_once(status: u16, body: &'static str) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut request_line = String::new();
        reader.read_line(&mut request_line).unwrap();
        let mut headers = Vec::new();
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let line = line.trim_end();
            if line.is_empty() {
                break;
            }
            let (k, v) = line.split_once(':').unwrap();
            headers.push((k.trim().to_string(), v.trim().to_string()));
        }
        let len: usize = headers
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case("content-length"))
            .map(|(_, v)| v.parse().unwrap())
            .unwrap_or(0);
        let mut buf = vec![0u8; len];
        reader.read_exact(&mut buf).unwrap();
        let reason = if status == 200 { "OK" } else { "Error" };
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        )
        .unwrap();
        stream.flush().unwrap();
        tx.send(Captured {
            request_line: request_line.trim_end().to_string(),
            headers,
            body: serde_json::from_slice(&buf).unwrap_or(serde_json::Value::Null),
        })
        .unwrap();
    });
    (url, rx)
}

#[test]
fn embeddings_request_and_response() {
    let (url, rx) = serve_once(200, r#"{"data":[{"embedding":[0.5,-0.25,1.0],"index":0}]}"#);
    let provider = HttpEmbeddingProvider::new("local", format!("{url}/v1/"), Some("sk-test".into()), "embed-small");
    let v = provider.embed("an idea").unwrap();
    assert_eq!(v, vec![0.5, -0.25, 1.0]);
    let seen = rx.recv().unwrap();
    assert_eq!(seen.request_line, "POST /v1/embeddings HTTP/1.1");
    assert_eq!(seen.header("authorization"), Some("Bearer sk-test"));
    assert_eq!(seen.body["model"], "embed-small");
    assert_eq!(seen.body["input"], "an idea");
}

#[test]
fn embeddings_server_error_is_provider_error() {
    let (url, _rx) = serve_once(500, r#"{"error":"boom"}"#);
    let provider = HttpEmbeddingProvider::new("local", url, None, "m");
    assert!(provider.embed("x").is_err());
}

#[test]
fn embeddings_without_key_send_no_auth() {
    let (url, rx) = serve_once(200, r#"{"data":[{"embedding":[1.0]}]}"#);
    HttpEmbeddingProvider::new("local", url, None, "m").embed("x").unwrap();
    assert!(rx.recv().unwrap().header("authorization").is_none());
}

#[test]
fn chat_completion_request_and_response() {
    let (url, rx) = serve_once(
        200,
        r#"{"choices":[{"index":0,"message":{"role":"assistant","content":"Use tidal buoys."}}]}"#,
    );
    let backend = HttpChatBackend::new(url, Some("k".into()));
    let params = SamplingParams::new("flash", 7);
    assert_eq!(backend.generate("prompt text", &params).unwrap(), "Use tidal buoys.");
    let seen = rx.recv().unwrap();
    assert_eq!(seen.request_line, "POST /chat/completions HTTP/1.1");
    assert_eq!(seen.header("authorization"), Some("Bearer k"));
    assert_eq!(seen.body["model"], "flash");
    assert_eq!(seen.body["seed"], 7);
    assert_eq!(seen.body["messages"][0]["content"], "prompt text");
}

#[test]
fn chat_empty_choices_is_error() {
    let (url, _rx) = serve_once(200, r#"{"choices":[]}"#);
    let backend = HttpChatBackend::new(url, None);
    assert!(backend.generate("p", &SamplingParams::new("m", 0)).is_err());
}
