//! FFT helpers on uniform periodic grids.

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

fn forward(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    buf
}

fn inverse_real(mut buf: Vec<Complex64>) -> Vec<f64> {
    let n = buf.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

/// Signed wavenumber index of FFT bin `k` for a length-`n` transform.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Spectral derivative of order `order` (1 or 2 in practice).
pub fn derivative(values: &[f64], period: f64, order: u32) -> Vec<f64> {
    let n = values.len();
    let mut hat = forward(values);
    for (k, c) in hat.iter_mut().enumerate() {
        let idx = signed_index(k, n);
        if n % 2 == 0 && k == n / 2 && order % 2 == 1 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let xi = 2.0 * PI * idx as f64 / period;
        *c *= Complex64::new(0.0, xi).powu(order);
    }
    inverse_real(hat)
}

/// Trigonometric interpolant evaluated on the grid shifted by `shift` (in length units).
pub fn shifted(values: &[f64], period: f64, shift: f64) -> Vec<f64> {
    let n = values.len();
    let mut hat = forward(values);
    for (k, c) in hat.iter_mut().enumerate() {
        if n % 2 == 0 && k == n / 2 {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let xi = 2.0 * PI * signed_index(k, n) as f64 / period;
        *c *= Complex64::from_polar(1.0, xi * shift);
    }
    inverse_real(hat)
        .into_iter()
        .zip(nyquist_shift_part(values, period, shift))
        .map(|(a, b)| a + b)
        .collect()
}

// The real interpolant keeps the Nyquist mode as a cosine; shifting it gives cos(pi*(j + s/dx)).
fn nyquist_shift_part(values: &[f64], period: f64, shift: f64) -> Vec<f64> {
    let n = values.len();
    if n % 2 != 0 {
        return vec![0.0; n];
    }
    let amp: f64 = values
        .iter()
        .enumerate()
        .map(|(j, v)| if j % 2 == 0 { *v } else { -*v })
        .sum::<f64>()
        / n as f64;
    let dx = period / n as f64;
    (0..n)
        .map(|j| amp * (PI * (j as f64 + shift / dx)).cos())
        .collect()
}

/// Evaluate the trigonometric interpolant of periodic samples at arbitrary points.
pub fn interpolate_at(values: &[f64], period: f64, points: &[f64]) -> Vec<f64> {
    let n = values.len();
    let hat = forward(values);
    let half = n / 2;
    points
        .iter()
        .map(|&x| {
            let mut acc = hat[0].re;
            for k in 1..n.div_ceil(2) {
                let xi = 2.0 * PI * k as f64 / period;
                let e = Complex64::from_polar(1.0, xi * x);
                acc += 2.0 * (hat[k] * e).re;
            }
            if n % 2 == 0 {
                let xi = 2.0 * PI * half as f64 / period;
                acc += hat[half].re * (xi * x).cos();
            }
            acc / n as f64
        })
        .collect()
}

/// Cosine coefficient a_k of `values ≈ Σ a_k cos(ξ_k x) + ...` for integer mode `k`.
pub fn cosine_coefficient(values: &[f64], k: usize) -> f64 {
    let n = values.len();
    let s: f64 = values
        .iter()
        .enumerate()
        .map(|(j, v)| v * (2.0 * PI * (k * j) as f64 / n as f64).cos())
        .sum();
    if k == 0 || (n % 2 == 0 && k == n / 2) {
        s / n as f64
    } else {
        2.0 * s / n as f64
    }
}

/// Periodic antiderivative with zero mean of zero-mean samples (mean is discarded).
pub fn antiderivative(values: &[f64], period: f64) -> Vec<f64> {
    let n = values.len();
    let mut hat = forward(values);
    for (k, c) in hat.iter_mut().enumerate() {
        let idx = signed_index(k, n);
        if idx == 0 || (n % 2 == 0 && k == n / 2) {
            *c = Complex64::new(0.0, 0.0);
            continue;
        }
        let xi = 2.0 * PI * idx as f64 / period;
        *c /= Complex64::new(0.0, xi);
    }
    inverse_real(hat)
}
