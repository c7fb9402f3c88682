//! Contract tests for the external classifier wire protocol, against a mock
//! sidecar (and a real one when `PSC2CODE_SIDECAR_URL` is set).

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::Duration;

use base64::Engine;
use image::{GenericImageView, Rgb, RgbImage};
use psc2code_core::classify::{
    classify_frames, Backend, ClassifierConfig, ClassifyError, ClassifyRequest, ClassifyResponse, ExternalClassifier,
};
use psc2code_core::ingest::FrameOrigin;
use psc2code_core::layout::LayoutConfig;
use psc2code_core::Frame;

#[derive(Clone, Copy, PartialEq)]
enum Mode {
    Honest,
    WrongEcho,
    BadConfidence,
    ServerError,
    Garbage,
}

#[derive(Default)]
struct Stats {
    requests: AtomicUsize,
    in_flight: AtomicUsize,
    peak: AtomicUsize,
    max_edge: AtomicUsize,
}

/// Bright frames are "valid"; later frames answer faster so that concurrent
/// requests complete out of order.
fn judge(req: &ClassifyRequest, mode: Mode, stats: &Stats) -> ClassifyResponse {
    let png = base64::engine::general_purpose::STANDARD.decode(&req.png_base64).unwrap();
    let img = image::load_from_memory(&png).unwrap();
    let (w, h) = img.dimensions();
    stats.max_edge.fetch_max(w.max(h) as usize, Ordering::SeqCst);
    let luma = img.to_luma8();
    let mean = luma.pixels().map(|p| p.0[0] as f64).sum::<f64>() / (w * h) as f64;
    ClassifyResponse {
        t: if mode == Mode::WrongEcho { req.t + 1 } else { req.t },
        valid: mean > 128.0,
        confidence: if mode == Mode::BadConfidence { 1.5 } else { mean / 255.0 },
    }
}

fn respond(mut stream: TcpStream, mode: Mode, stats: &Stats) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    reader.read_line(&mut request_line).unwrap();
    let mut len = 0;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line).unwrap();
        if line == "\r\n" || line.is_empty() {
            break;
        }
        if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
            len = v.trim().parse().unwrap();
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).unwrap();

    let now = stats.in_flight.fetch_add(1, Ordering::SeqCst) + 1;
    stats.peak.fetch_max(now, Ordering::SeqCst);
    stats.requests.fetch_add(1, Ordering::SeqCst);
    let path = request_line.split_whitespace().nth(1).unwrap_or("").to_string();
    let (status, payload) = match (mode, path.as_str()) {
        (Mode::ServerError, _) => ("500 Internal Server Error", "{}".to_string()),
        (Mode::Garbage, _) => ("200 OK", "not json".to_string()),
        (_, "/classify") => {
            let req: ClassifyRequest = serde_json::from_slice(&body).unwrap();
            std::thread::sleep(Duration::from_millis(40u64.saturating_sub(req.t as u64 * 5)));
            ("200 OK", serde_json::to_string(&judge(&req, mode, stats)).unwrap())
        }
        (_, "/classify_batch") => {
            let reqs: Vec<ClassifyRequest> = serde_json::from_slice(&body).unwrap();
            // answered in reverse; the client must match on t
            let resps: Vec<ClassifyResponse> = reqs.iter().rev().map(|r| judge(r, mode, stats)).collect();
            ("200 OK", serde_json::to_string(&resps).unwrap())
        }
        _ => ("404 Not Found", "{}".to_string()),
    };
    stats.in_flight.fetch_sub(1, Ordering::SeqCst);
    let _ = write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
        payload.len()
    );
}

fn mock(mode: Mode) -> (String, Arc<Stats>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let stats = Arc::new(Stats::default());
    let s = stats.clone();
    std::thread::spawn(move || {
        for stream in listener.incoming().flatten() {
            let s = s.clone();
            std::thread::spawn(move || respond(stream, mode, &s));
        }
    });
    (url, stats)
}

/// Even t bright, odd t dark, at a size that needs rescaling.
fn frames(n: u32) -> Vec<Frame> {
    (0..n)
        .map(|t| {
            let v = if t % 2 == 0 { 230 } else { 30 };
            Frame::new(t, RgbImage::from_pixel(640, 360, Rgb([v, v, v])), FrameOrigin::Preextracted)
        })
        .collect()
}

fn config(url: &str, concurrency: usize, batch: bool) -> ClassifierConfig {
    ClassifierConfig {
        backend: Backend::External,
        endpoint: Some(url.to_string()),
        concurrency,
        batch,
        timeout_s: 5,
        ..Default::default()
    }
}

#[test]
fn per_frame_requests_keep_input_order_under_concurrency() {
    let (url, stats) = mock(Mode::Honest);
    let fs = frames(8);
    let verdicts = classify_frames(&fs, &config(&url, 4, false), &LayoutConfig::default()).unwrap();
    let ts: Vec<u32> = verdicts.iter().map(|v| v.t).collect();
    assert_eq!(ts, (0..8).collect::<Vec<_>>());
    for v in &verdicts {
        assert_eq!(v.valid, v.t % 2 == 0);
        assert_eq!(v.backend, Backend::External);
        assert!((0.0..=1.0).contains(&v.confidence));
    }
    assert_eq!(stats.requests.load(Ordering::SeqCst), 8);
    let peak = stats.peak.load(Ordering::SeqCst);
    assert!((2..=4).contains(&peak), "peak in flight {peak}");
    // frames are rescaled so the longer edge is 300 px
    assert_eq!(stats.max_edge.load(Ordering::SeqCst), 300);
}

#[test]
fn batch_endpoint_is_matched_by_t() {
    let (url, stats) = mock(Mode::Honest);
    let fs = frames(5);
    let verdicts = classify_frames(&fs, &config(&url, 4, true), &LayoutConfig::default()).unwrap();
    assert_eq!(verdicts.iter().map(|v| v.t).collect::<Vec<_>>(), [0, 1, 2, 3, 4]);
    assert_eq!(verdicts.iter().map(|v| v.valid).collect::<Vec<_>>(), [true, false, true, false, true]);
    assert_eq!(stats.requests.load(Ordering::SeqCst), 1);
}

#[test]
fn echo_mismatch_is_a_protocol_error() {
    let (url, _) = mock(Mode::WrongEcho);
    let c = ExternalClassifier::new(&config(&url, 1, false)).unwrap();
    let err = c.classify_one(&frames(1)[0]).unwrap_err();
    assert!(matches!(err, ClassifyError::Protocol { .. }), "{err}");
    assert!(err.to_string().contains("echoed t=1"), "{err}");
    // in a batch the stray t leaves frame 0 without a verdict
    let err = c.classify_batch(&frames(1)).unwrap_err();
    assert!(matches!(err, ClassifyError::Protocol { .. }), "{err}");
}

#[test]
fn confidence_outside_unit_interval_is_rejected() {
    let (url, _) = mock(Mode::BadConfidence);
    let err = classify_frames(&frames(3), &config(&url, 2, false), &LayoutConfig::default()).unwrap_err();
    assert!(err.to_string().contains("outside [0, 1]"), "{err}");
}

#[test]
fn malformed_body_and_server_errors_are_reported() {
    let (url, _) = mock(Mode::Garbage);
    let err = classify_frames(&frames(2), &config(&url, 2, false), &LayoutConfig::default()).unwrap_err();
    assert!(matches!(err, ClassifyError::Protocol { .. }), "{err}");

    let (url, _) = mock(Mode::ServerError);
    let err = classify_frames(&frames(2), &config(&url, 2, false), &LayoutConfig::default()).unwrap_err();
    assert!(matches!(err, ClassifyError::ExternalUnavailable { .. }), "{err}");
    assert!(err.to_string().contains("--classifier heuristic"), "{err}");
}

#[test]
fn unreachable_sidecar_suggests_fallbacks() {
    // bind then drop, so the port is very likely closed
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = classify_frames(
        &frames(1),
        &config(&format!("http://127.0.0.1:{port}"), 1, false),
        &LayoutConfig::default(),
    )
    .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("--classifier heuristic") && msg.contains("--labels"), "{msg}");
}

/// Replays the schema checks against a live sidecar when one is configured.
#[test]
fn live_sidecar_conforms() {
    let Ok(url) = std::env::var("PSC2CODE_SIDECAR_URL") else {
        eprintln!("PSC2CODE_SIDECAR_URL not set; live sidecar checks skipped");
        return;
    };
    let fs = frames(3);
    let one = classify_frames(&fs, &config(&url, 2, false), &LayoutConfig::default()).unwrap();
    let batch = classify_frames(&fs, &config(&url, 2, true), &LayoutConfig::default()).unwrap();
    assert_eq!(one.iter().map(|v| v.t).collect::<Vec<_>>(), [0, 1, 2]);
    assert_eq!(batch.iter().map(|v| v.t).collect::<Vec<_>>(), [0, 1, 2]);
    // a fixed model is deterministic
    for (a, b) in one.iter().zip(&batch) {
        assert_eq!(a.valid, b.valid);
    }
}
