//! Centered discrete Fourier transforms.
//!
//! All transforms here relate samples on an axis `x_j = start + j*step`
//! to samples on the centered dual axis `ξ_k = (k - n/2) * 2π/(n*step)`,
//! so that `Σ_j f(x_j) e^{-i x_j ξ_k}` is computed exactly by a standard
//! FFT after phase pre/post twiddles. `n` must be even.

use crate::grid::Axis;
use crate::C64;
use rustfft::FftPlanner;
use std::f64::consts::PI;

/// `out[k] = Σ_j data[j] e^{-i x_j ξ_k}` on the centered dual axis (no
/// quadrature weight applied).
pub fn forward_phase(data: &[C64], axis: &Axis) -> Vec<C64> {
    let n = axis.len;
    assert_eq!(data.len(), n);
    assert!(n % 2 == 0, "centered transforms need an even length");
    let mut buf: Vec<C64> = data
        .iter()
        .enumerate()
        .map(|(j, &v)| if j % 2 == 0 { v } else { -v })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dual = axis.dual();
    for (k, v) in buf.iter_mut().enumerate() {
        let xi = dual.coord(k);
        let ph = C64::from_polar(1.0, -axis.start * xi);
        *v *= ph;
    }
    buf
}

/// Inverse of [`forward_phase`]: `out[j] = (1/n) Σ_k data[k] e^{+i x_j ξ_k}`.
pub fn inverse_phase(data: &[C64], axis: &Axis) -> Vec<C64> {
    let n = axis.len;
    assert_eq!(data.len(), n);
    assert!(n % 2 == 0, "centered transforms need an even length");
    let dual = axis.dual();
    let mut buf: Vec<C64> = data
        .iter()
        .enumerate()
        .map(|(k, &v)| v * C64::from_polar(1.0, axis.start * dual.coord(k)))
        .collect();
    FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
    let inv_n = 1.0 / n as f64;
    for (j, v) in buf.iter_mut().enumerate() {
        let s = if j % 2 == 0 { inv_n } else { -inv_n };
        *v *= s;
    }
    buf
}

/// Circular convolution with quadrature weight: `(f*g)[i] = step^d Σ_j f[i-j]g[j]`
/// over one axis.
pub fn circular_convolve_1d(f: &[C64], g: &[C64], step: f64) -> Vec<C64> {
    let n = f.len();
    assert_eq!(g.len(), n);
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut fa = f.to_vec();
    let mut ga = g.to_vec();
    fwd.process(&mut fa);
    fwd.process(&mut ga);
    for (a, b) in fa.iter_mut().zip(ga.iter()) {
        *a *= b;
    }
    inv.process(&mut fa);
    let s = step / n as f64;
    for v in fa.iter_mut() {
        *v *= s;
    }
    fa
}

/// Plain unscaled length-`n` forward DFT `out[k] = Σ_j f[j] ω^{-jk}`.
pub fn raw_forward(data: &mut [C64]) {
    FftPlanner::new()
        .plan_fft_forward(data.len())
        .process(data);
}

/// Plain unscaled inverse DFT (without the `1/n` factor).
pub fn raw_inverse(data: &mut [C64]) {
    FftPlanner::new()
        .plan_fft_inverse(data.len())
        .process(data);
}

/// `Σ_j data[j] e^{-i t_j ξ}` for an arbitrary frequency `ξ`, `t_j` on `axis`.
pub fn dft_at(data: &[C64], axis: &Axis, xi: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (j, &v) in data.iter().enumerate() {
        acc += v * C64::from_polar(1.0, -axis.coord(j) * xi);
    }
    acc
}

/// Trigonometric (band-limited) upsampling of periodic samples by an integer
/// factor. Input length must be even; output has `factor * n` samples on the
/// same interval.
pub fn trig_upsample(data: &[C64], factor: usize) -> Vec<C64> {
    let n = data.len();
    if factor == 1 {
        return data.to_vec();
    }
    let mut spec = data.to_vec();
    raw_forward(&mut spec);
    let m = n * factor;
    let mut padded = vec![C64::new(0.0, 0.0); m];
    let half = n / 2;
    for k in 0..n {
        // move FFT bin k to its aliased position in the longer spectrum,
        // splitting the Nyquist bin evenly
        let signed = if k <= half { k as i64 } else { k as i64 - n as i64 };
        if k == half {
            let v = spec[k] * 0.5;
            padded[half] = v;
            padded[m - half] = v;
        } else {
            let idx = signed.rem_euclid(m as i64) as usize;
            padded[idx] = spec[k];
        }
    }
    raw_inverse(&mut padded);
    let s = 1.0 / n as f64;
    padded.iter_mut().for_each(|v| *v *= s);
    padded
}

/// Frequencies of the standard FFT layout mapped to signed values.
pub fn signed_freq(k: usize, n: usize) -> i64 {
    if k <= n / 2 {
        k as i64
    } else {
        k as i64 - n as i64
    }
}

/// Gaussian phase factor helper `e^{iθ}`.
pub fn cis(theta: f64) -> C64 {
    C64::from_polar(1.0, theta)
}

pub const TAU: f64 = 2.0 * PI;
