use std::io::{Read, Write};
use std::net::TcpStream;
use std::sync::Arc;

use bga_service::{server, Service};

fn request(addr: &str, raw: &str) -> String {
    let mut stream = TcpStream::connect(addr).unwrap();
    stream.write_all(raw.as_bytes()).unwrap();
    let mut out = String::new();
    stream.read_to_string(&mut out).unwrap();
    out
}

#[test]
fn serves_over_http_with_etag() {
    let dir = tempfile::tempdir().unwrap();
    let service = Arc::new(Service::open(dir.path()).unwrap());
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let listener = rt
        .block_on(tokio::net::TcpListener::bind("127.0.0.1:0"))
        .unwrap();
    let addr = listener.local_addr().unwrap().to_string();
    rt.spawn(async move { axum::serve(listener, server::router(service)).await });

    let body = r#"{"csv":"period,L,output\n1,2,3\n"}"#;
    let resp = request(
        &addr,
        &format!(
            "POST /datasets HTTP/1.1\r\nHost: x\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
            body.len()
        ),
    );
    assert!(resp.starts_with("HTTP/1.1 201"), "{resp}");
    let json_start = resp.find("\r\n\r\n").unwrap() + 4;
    let v: serde_json::Value = serde_json::from_str(&resp[json_start..]).unwrap();
    let id = v["id"].as_str().unwrap();

    let resp = request(
        &addr,
        &format!("GET /datasets/{id} HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n"),
    );
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.to_ascii_lowercase().contains("content-type: application/json"));

    let resp = request(
        &addr,
        "GET /scenarios/missing HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n",
    );
    assert!(resp.starts_with("HTTP/1.1 404"), "{resp}");
    assert!(resp.contains("\"code\":\"NotFound\""));
}
