use std::collections::HashSet;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use fracture_core::deck::{render_deck, DeckMeta, Loading, SimulationKind, Target, GENERIC_MATERIAL};
use fracture_core::MaterialRegistry;
use fracture_learn::embed::{embed, fallback_embed, progression_token, EmbedError, Embedder, Provider, FALLBACK_TOKENS};

/// Serves `n` requests, answering each with `status` and `body`; returns the
/// request bodies it saw.
fn mock_server(n: usize, status: u16, body: String) -> (String, thread::JoinHandle<Vec<String>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let h = thread::spawn(move || {
        let mut seen = Vec::new();
        for _ in 0..n {
            let (stream, _) = listener.accept().unwrap();
            let mut r = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            let mut first = String::new();
            r.read_line(&mut first).unwrap();
            assert!(first.starts_with("POST /embed "), "{first}");
            loop {
                let mut line = String::new();
                r.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut req = vec![0u8; len];
            r.read_exact(&mut req).unwrap();
            seen.push(String::from_utf8(req).unwrap());
            let mut s = stream;
            write!(
                s,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
        }
        seen
    });
    (url, h)
}

fn all_decks() -> Vec<String> {
    let reg = MaterialRegistry::with_defaults();
    let mut materials: Vec<String> = reg.names().iter().map(|s| s.to_string()).collect();
    materials.push(GENERIC_MATERIAL.to_string());
    let mut out = Vec::new();
    for sim in SimulationKind::ALL {
        for mat in &materials {
            for b in Loading::ALL {
                for t in Target::ALL {
                    let mut m = DeckMeta::new(sim, mat, b, t);
                    if t == Target::DynamicTrajectory {
                        m.progression = Some(0.3);
                    }
                    out.push(render_deck(&m).unwrap());
                }
            }
        }
    }
    out
}

#[test]
fn fallback_is_deterministic_and_normalised() {
    let text = "A simulation using the rule-based method on generic material under axial loading, aiming to predict the final fracture pattern.";
    let a = fallback_embed(text, 256);
    let b = fallback_embed(text, 256);
    assert_eq!(a, b);
    assert_eq!((a.tokens, a.dim), (FALLBACK_TOKENS, 256));
    for t in 0..a.tokens {
        let r = a.row(t);
        let mean = r.iter().map(|v| *v as f64).sum::<f64>() / 256.0;
        let var = r.iter().map(|v| (*v as f64 - mean).powi(2)).sum::<f64>() / 256.0;
        assert!(mean.abs() < 0.1 && (var - 1.0).abs() < 0.1, "token {t}: {mean} {var}");
    }
}

#[test]
fn every_deck_combination_embeds_distinctly() {
    let decks = all_decks();
    let texts: HashSet<&String> = decks.iter().collect();
    let mut seen = HashSet::new();
    for t in &texts {
        let e = fallback_embed(t, 256);
        let bits: Vec<u32> = e.data.iter().map(|v| v.to_bits()).collect();
        assert!(seen.insert(bits), "collision for {t}");
    }
    assert_eq!(seen.len(), texts.len());
    assert!(texts.len() >= 3 * 8 * 2 * 3);
}

#[test]
fn remote_returns_the_served_matrix() {
    let data: Vec<f64> = (0..12).map(|k| k as f64 / 8.0 - 0.5).collect();
    let body = serde_json::json!({"dim": 4, "tokens": 3, "data": data}).to_string();
    let (url, h) = mock_server(1, 200, body);
    let p = Provider::Remote {
        url,
        layer: 7,
        timeout_secs: 5.0,
    };
    let e = embed("some deck", &p).unwrap();
    assert_eq!((e.tokens, e.dim), (3, 4));
    assert_eq!(e.data.iter().map(|v| *v as f64).collect::<Vec<_>>(), data);
    let req: serde_json::Value = serde_json::from_str(&h.join().unwrap()[0]).unwrap();
    assert_eq!(req, serde_json::json!({"text": "some deck", "layer": 7}));
}

#[test]
fn remote_errors_are_typed() {
    let (url, h) = mock_server(1, 400, r#"{"error": "layer 99 >= depth 12"}"#.into());
    let p = Provider::Remote {
        url,
        layer: 99,
        timeout_secs: 5.0,
    };
    match embed("x", &p) {
        Err(EmbedError::Remote { status: 400, message }) => assert!(message.contains("depth 12")),
        other => panic!("{other:?}"),
    }
    h.join().unwrap();

    let (url, h) = mock_server(1, 200, r#"{"dim": 4, "tokens": 3, "data": [1.0]}"#.into());
    let p = Provider::Remote {
        url,
        layer: 0,
        timeout_secs: 5.0,
    };
    assert!(matches!(embed("x", &p), Err(EmbedError::Protocol(_))));
    h.join().unwrap();

    // Bind and drop a listener to get a port nobody answers on.
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let p = Provider::Remote {
        url: format!("http://127.0.0.1:{port}"),
        layer: 0,
        timeout_secs: 2.0,
    };
    assert!(matches!(embed("x", &p), Err(EmbedError::Transport { .. })));
}

#[test]
fn cache_is_transparent_and_dims_are_checked() {
    let dir = tempfile::tempdir().unwrap();
    let text = "A simulation using the phase-field method on steel under axial loading, aiming to predict the final fracture pattern.";
    let cold = Embedder::fallback(64).with_cache(dir.path()).embed(text).unwrap();
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    let warm = Embedder::fallback(64).with_cache(dir.path()).embed(text).unwrap();
    assert_eq!(cold, warm);
    assert_eq!(cold, Embedder::fallback(64).embed(text).unwrap());

    let mut e = Embedder::fallback(64);
    e.expected_dim = 128;
    assert!(matches!(e.embed(text), Err(EmbedError::DimMismatch { expected: 128, got: 64 })));
    assert!(matches!(Embedder::fallback(64).embed("  "), Err(EmbedError::EmptyText)));
}

#[test]
fn progression_tokens() {
    let a = progression_token(0.3, 256).unwrap();
    let b = progression_token(1.0, 256).unwrap();
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!(dot / (na * nb) < 1.0);
    assert_eq!(progression_token(0.65, 256).unwrap(), progression_token(0.65, 256).unwrap());
    let pts = fracture_core::deck::progression_points();
    assert!((pts[4] - 0.6111).abs() < 5e-5);
    let toks: Vec<Vec<u64>> = pts.iter().map(|p| progression_token(*p, 256).unwrap().iter().map(|v| v.to_bits()).collect()).collect();
    assert_eq!(toks.iter().collect::<HashSet<_>>().len(), 10);
    assert!(matches!(progression_token(0.29, 256), Err(EmbedError::Progression(_))));
    assert!(progression_token(1.01, 256).is_err());
}
