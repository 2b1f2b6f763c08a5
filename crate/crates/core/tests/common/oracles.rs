//! Straightforward reference implementations used to cross-check the library.

/// Two-pass population standard deviation of the first `k` scores over `p`.
pub fn nqc(scores: &[f64], k: usize, p: f64, eps: f64) -> f64 {
    let top = &scores[..k.min(scores.len())];
    if top.is_empty() {
        return 0.0;
    }
    let n = top.len() as f64;
    let mean = top.iter().sum::<f64>() / n;
    let var = top.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    var.sqrt() / p.max(eps)
}

/// AP from precision-at-k recomputed from scratch at every relevant rank.
pub fn average_precision(relevant: &[bool], total_relevant: usize) -> f64 {
    if total_relevant == 0 {
        return 0.0;
    }
    let mut sum = 0.0;
    for k in 0..relevant.len() {
        if relevant[k] {
            let hits = relevant[..=k].iter().filter(|&&r| r).count();
            sum += hits as f64 / (k + 1) as f64;
        }
    }
    sum / total_relevant as f64
}

/// Tau-b by enumerating all pairs. `None` when either side is all ties.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
    let n = x.len() as i64;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i] - x[j];
            let dy = y[i] - y[j];
            if dx == 0.0 {
                tx += 1;
            }
            if dy == 0.0 {
                ty += 1;
            }
            if dx != 0.0 && dy != 0.0 {
                if (dx > 0.0) == (dy > 0.0) {
                    c += 1;
                } else {
                    d += 1;
                }
            }
        }
    }
    let n0 = n * (n - 1) / 2;
    let denom = (((n0 - tx) * (n0 - ty)) as f64).sqrt();
    (denom > 0.0).then(|| (c - d) as f64 / denom)
}

pub fn pearson_r(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}
