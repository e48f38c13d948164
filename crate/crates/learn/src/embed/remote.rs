use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{text_hash, ContextEmbedding, EmbedError};

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub text: String,
    pub layer: i64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub tokens: usize,
    pub data: Vec<f64>,
}

#[derive(Deserialize)]
struct ErrorBody {
    error: String,
}

/// POSTs `text` to `{base_url}/embed`.
pub fn remote_embed(base_url: &str, text: &str, layer: i64, timeout: Duration) -> Result<ContextEmbedding, EmbedError> {
    let url = format!("{}/embed", base_url.trim_end_matches('/'));
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let transport = |e: ureq::Error| EmbedError::Transport {
        url: url.clone(),
        reason: e.to_string(),
    };
    let mut resp = agent
        .post(&url)
        .send_json(&EmbedRequest {
            text: text.to_string(),
            layer,
        })
        .map_err(transport)?;
    let status = resp.status().as_u16();
    let body = resp.body_mut().read_to_string().map_err(transport)?;
    if status != 200 {
        let message = serde_json::from_str::<ErrorBody>(&body).map(|e| e.error).unwrap_or(body);
        return Err(EmbedError::Remote { status, message });
    }
    let r: EmbedResponse = serde_json::from_str(&body).map_err(|e| EmbedError::Protocol(e.to_string()))?;
    if r.tokens == 0 || r.dim == 0 {
        return Err(EmbedError::Protocol(format!("empty matrix {}x{}", r.tokens, r.dim)));
    }
    if r.tokens * r.dim != r.data.len() {
        return Err(EmbedError::Protocol(format!(
            "tokens * dim = {} * {} but data has {} values",
            r.tokens,
            r.dim,
            r.data.len()
        )));
    }
    if r.data.iter().any(|v| !v.is_finite()) {
        return Err(EmbedError::Protocol("non-finite value in data".into()));
    }
    Ok(ContextEmbedding {
        tokens: r.tokens,
        dim: r.dim,
        data: r.data.iter().map(|v| *v as f32).collect(),
        provider: format!("remote:{base_url}#layer={layer}"),
        text_hash: text_hash(text),
    })
}
