//! FFT-based linear convolution and correlation.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Full linear convolution, `signal.len() + kernel.len() - 1` samples long.
pub fn fft_convolve(signal: &[f64], kernel: &[f64]) -> Result<Vec<f64>> {
    if kernel.is_empty() {
        return Err(Error::EmptyKernel);
    }
    if signal.is_empty() {
        return Ok(Vec::new());
    }
    let out_len = signal.len() + kernel.len() - 1;
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);

    let mut a = padded(signal, n);
    let mut b = padded(kernel, n);
    fwd.process(&mut a);
    fwd.process(&mut b);
    a.iter_mut().zip(&b).for_each(|(x, y)| *x *= y);
    inv.process(&mut a);
    Ok(a[..out_len].iter().map(|c| c.re / n as f64).collect())
}

/// `r[lag] = sum_n a[n + lag] * b[n]` for `lag` in `-max_lag..=max_lag`,
/// returned with index `lag + max_lag`.
pub fn cross_correlation(a: &[f64], b: &[f64], max_lag: usize) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return vec![0.0; 2 * max_lag + 1];
    }
    let reversed: Vec<f64> = b.iter().rev().copied().collect();
    // full[k] = sum_n a[n] b[n - k + len_b - 1], so lag = k - (len_b - 1)
    let full = fft_convolve(a, &reversed).expect("non-empty kernel");
    let zero = b.len() as isize - 1;
    (-(max_lag as isize)..=max_lag as isize)
        .map(|lag| {
            let k = zero + lag;
            if k >= 0 && (k as usize) < full.len() {
                full[k as usize]
            } else {
                0.0
            }
        })
        .collect()
}

fn padded(x: &[f64], n: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::new(0.0, 0.0); n];
    for (slot, &s) in v.iter_mut().zip(x) {
        slot.re = s;
    }
    v
}
