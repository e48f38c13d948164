use super::ModelError;

/// Band frequencies geometric from 1 to `max_freq`.
pub fn frequencies(bands: usize, max_freq: f64) -> Vec<f64> {
    if bands == 1 {
        return vec![1.0];
    }
    (0..bands).map(|k| max_freq.powf(k as f64 / (bands - 1) as f64)).collect()
}

/// Fourier features of normalised coordinates, one row per point laid out as
/// `[sin(pi f x).., cos(pi f x).., sin(pi f y).., cos(pi f y).., x, y]`.
pub fn positional_encoding(coords: &[[f64; 2]], bands: usize, max_freq: f64) -> Result<Vec<f64>, ModelError> {
    let freqs = frequencies(bands, max_freq);
    let width = 4 * bands + 2;
    let mut out = vec![0.0; coords.len() * width];
    for (i, c) in coords.iter().enumerate() {
        if !c.iter().all(|v| v.is_finite() && (-1e-9..=1.0 + 1e-9).contains(v)) {
            return Err(ModelError::Coordinate { index: i, value: *c });
        }
        let row = &mut out[i * width..(i + 1) * width];
        for (axis, &x) in c.iter().enumerate() {
            let base = axis * 2 * bands;
            for (k, f) in freqs.iter().enumerate() {
                let a = std::f64::consts::PI * f * x;
                row[base + k] = a.sin();
                row[base + bands + k] = a.cos();
            }
        }
        row[width - 2] = c[0];
        row[width - 1] = c[1];
    }
    Ok(out)
}
