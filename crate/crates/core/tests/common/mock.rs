//! Instrumented chat-completion endpoint for client tests.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use base64::Engine;
use serde_json::{json, Value};

/// What the mock saw for one request.
#[derive(Debug, Clone)]
pub struct Hit {
    pub image: String,
    pub prompt: String,
    pub started: Instant,
    pub finished: Instant,
}

pub struct Reply {
    pub status: u16,
    pub body: String,
}

impl Reply {
    pub fn content(text: &str) -> Self {
        Reply { status: 200, body: json!({"choices": [{"message": {"role": "assistant", "content": text}}]}).to_string() }
    }

    pub fn status(status: u16) -> Self {
        Reply { status, body: format!("{{\"error\": \"status {status}\"}}") }
    }
}

pub struct MockServer {
    pub url: String,
    hits: Arc<Mutex<Vec<Hit>>>,
    max_in_flight: Arc<AtomicUsize>,
}

impl MockServer {
    /// Serves every request on its own thread. `reply` receives the decoded
    /// image payload and the request's arrival index.
    pub fn start(delay: Duration, reply: impl Fn(&str, usize) -> Reply + Send + Sync + 'static) -> Self {
        let server = Arc::new(tiny_http::Server::http("127.0.0.1:0").unwrap());
        let url = format!("http://{}", server.server_addr().to_ip().unwrap());
        let hits = Arc::new(Mutex::new(Vec::new()));
        let in_flight = Arc::new(AtomicUsize::new(0));
        let max_in_flight = Arc::new(AtomicUsize::new(0));
        let arrivals = Arc::new(AtomicUsize::new(0));
        let reply = Arc::new(reply);
        {
            let (hits, max_in_flight) = (hits.clone(), max_in_flight.clone());
            thread::spawn(move || {
                for mut request in server.incoming_requests() {
                    let (hits, in_flight, max_in_flight, arrivals, reply) =
                        (hits.clone(), in_flight.clone(), max_in_flight.clone(), arrivals.clone(), reply.clone());
                    thread::spawn(move || {
                        let started = Instant::now();
                        let now = in_flight.fetch_add(1, Ordering::SeqCst) + 1;
                        max_in_flight.fetch_max(now, Ordering::SeqCst);
                        let index = arrivals.fetch_add(1, Ordering::SeqCst);

                        let mut body = String::new();
                        request.as_reader().read_to_string(&mut body).unwrap();
                        let v: Value = serde_json::from_str(&body).unwrap();
                        let parts = &v["messages"][0]["content"];
                        let prompt = parts[0]["text"].as_str().unwrap_or_default().to_string();
                        let url = parts[1]["image_url"]["url"].as_str().unwrap_or_default();
                        let data = url.split_once("base64,").map(|x| x.1).unwrap_or_default();
                        let bytes = base64::engine::general_purpose::STANDARD.decode(data).unwrap_or_default();
                        let image = String::from_utf8_lossy(&bytes).into_owned();

                        thread::sleep(delay);
                        let r = reply(&image, index);
                        in_flight.fetch_sub(1, Ordering::SeqCst);
                        hits.lock().unwrap().push(Hit { image, prompt, started, finished: Instant::now() });
                        let header = tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                        let response = tiny_http::Response::from_string(r.body).with_status_code(r.status).with_header(header);
                        let _ = request.respond(response);
                    });
                }
            });
        }
        MockServer { url, hits, max_in_flight }
    }

    pub fn hits(&self) -> Vec<Hit> {
        let mut hits = self.hits.lock().unwrap().clone();
        hits.sort_by_key(|h| h.started);
        hits
    }

    pub fn max_in_flight(&self) -> usize {
        self.max_in_flight.load(Ordering::SeqCst)
    }
}
