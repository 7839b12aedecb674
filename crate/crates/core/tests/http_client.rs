use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::time::Duration;

use luxner::llm_bench::{ClientError, CompletionRequest, Decoding, HttpClient, ModelClient};

/// Serves one canned HTTP response and hands back the request it received.
fn serve_once(status: &str, body: &str) -> (String, std::thread::JoinHandle<(String, String)>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let reply = format!(
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
    let handle = std::thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut head = String::new();
        let mut len = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            if line.to_ascii_lowercase().starts_with("content-length:") {
                len = line[15..].trim().parse().unwrap();
            }
            if line == "\r\n" {
                break;
            }
            head.push_str(&line);
        }
        let mut body = vec![0; len];
        reader.read_exact(&mut body).unwrap();
        let mut stream = stream;
        stream.write_all(reply.as_bytes()).unwrap();
        (head, String::from_utf8(body).unwrap())
    });
    (url, handle)
}

fn request(prompt: &str) -> CompletionRequest<'_> {
    CompletionRequest {
        model_id: "llama-3.1-8b-instruct",
        prompt,
        decoding: Decoding::default(),
    }
}

#[test]
fn sends_one_user_message_at_temperature_zero() {
    let (url, server) = serve_once("200 OK", r#"{"choices":[{"message":{"role":"assistant","content":"[]"}}]}"#);
    let client = HttpClient::new(format!("{url}/v1/"), Some("secret".into()), Duration::from_secs(5));
    assert_eq!(client.complete(&request("hello")).unwrap(), "[]");
    let (head, body) = server.join().unwrap();
    assert!(head.starts_with("POST /v1/chat/completions "));
    assert!(head.to_ascii_lowercase().contains("authorization: bearer secret"));
    let body: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(body["model"], "llama-3.1-8b-instruct");
    assert_eq!(body["messages"], serde_json::json!([{"role": "user", "content": "hello"}]));
    assert_eq!(body["temperature"], 0.0);
    assert_eq!(body["max_tokens"], 1024);
}

#[test]
fn server_errors_are_retryable_client_errors_are_not() {
    let (url, server) = serve_once("503 Service Unavailable", "{}");
    let err = HttpClient::new(url, None, Duration::from_secs(5)).complete(&request("x")).unwrap_err();
    server.join().unwrap();
    assert!(matches!(err, ClientError::Transport { retryable: true, .. }));

    let (url, server) = serve_once("401 Unauthorized", r#"{"error":"bad key"}"#);
    let err = HttpClient::new(url, None, Duration::from_secs(5)).complete(&request("x")).unwrap_err();
    server.join().unwrap();
    assert!(matches!(err, ClientError::Transport { retryable: false, .. }));
}
