//! Reference implementations shared by the integration tests.

/// Time-domain block LMS with the structure of the GJBF adaptive branch:
/// `u` is the blocking-branch input, `d` the delayed fixed branch, one update
/// per `taps` samples. Returns the taps in force before every block followed
/// by the final taps.
pub fn block_lms(u: &[f64], d: &[f64], taps: usize, blocks: usize, mu: f64) -> Vec<Vec<f64>> {
    let u_at = |n: isize| {
        if n >= 0 && (n as usize) < u.len() {
            u[n as usize]
        } else {
            0.0
        }
    };
    let mut w = vec![0.0; taps];
    let mut history = Vec::with_capacity(blocks + 1);
    for j in 0..blocks {
        history.push(w.clone());
        let mut grad = vec![0.0; taps];
        for i in 0..taps {
            let n = (j * taps + i) as isize;
            let y: f64 = (0..taps).map(|k| w[k] * u_at(n - k as isize)).sum();
            let e = d[n as usize] - y;
            for (k, g) in grad.iter_mut().enumerate() {
                *g += e * u_at(n - k as isize);
            }
        }
        for (wk, g) in w.iter_mut().zip(&grad) {
            *wk += mu * g;
        }
    }
    history.push(w);
    history
}

/// `||a - b|| / ||b||`, or `||a - b||` when `b` is zero.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (p - q).powi(2))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = b.iter().map(|q| q * q).sum::<f64>().sqrt();
    if norm > 0.0 {
        diff / norm
    } else {
        diff
    }
}
