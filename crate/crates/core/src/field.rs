//! Sampled complex fields on uniform periodic grids, quadrature,
//! weighted `L^p` quasi-norms and Fourier transforms.

use crate::fft;
use crate::grid::{Axis, GridSpec};
use crate::weight::Weight;
use crate::{C64, Error, Result};
use std::f64::consts::PI;
use std::io::Write as _;
use std::path::Path;

/// A `p` exponent in `(0, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_infinite() && p > 0.0 {
            Ok(Exponent::Infinity)
        } else if p.is_finite() && p > 0.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::BadExponent(format!("{p}")))
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Exponent::Finite(p) => *p,
            Exponent::Infinity => f64::INFINITY,
        }
    }
}

impl std::fmt::Display for Exponent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => write!(f, "inf"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(Exponent::Infinity);
        }
        // accept fractions like 1/2
        if let Some((a, b)) = s.split_once('/') {
            let (a, b): (f64, f64) = (
                a.trim().parse().map_err(|_| Error::BadExponent(s.into()))?,
                b.trim().parse().map_err(|_| Error::BadExponent(s.into()))?,
            );
            return Exponent::new(a / b);
        }
        let p: f64 = s.parse().map_err(|_| Error::BadExponent(s.into()))?;
        Exponent::new(p)
    }
}

/// Local/global exponent pair with quasi-norm order `min(p, q, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuasiNormParams {
    pub p: Exponent,
    pub q: Exponent,
}

impl QuasiNormParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        Ok(QuasiNormParams {
            p: Exponent::new(p)?,
            q: Exponent::new(q)?,
        })
    }

    pub fn order(&self) -> f64 {
        self.p.value().min(self.q.value()).min(1.0)
    }
}

/// Complex field sampled on one or two uniform axes, row-major over axes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledField {
    axes: Vec<Axis>,
    values: Vec<C64>,
}

impl SampledField {
    pub fn new(axes: Vec<Axis>, values: Vec<C64>) -> Result<Self> {
        let n: usize = axes.iter().map(|a| a.len).product();
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::BadDimension(axes.len()));
        }
        if values.len() != n {
            return Err(Error::GridMismatch(format!(
                "expected {n} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(SampledField { axes, values })
    }

    pub fn zeros(axes: Vec<Axis>) -> Self {
        let n: usize = axes.iter().map(|a| a.len).product();
        SampledField {
            axes,
            values: vec![C64::new(0.0, 0.0); n],
        }
    }

    /// Sample a function of the grid coordinates.
    pub fn from_fn(axes: Vec<Axis>, f: impl Fn(&[f64]) -> C64) -> Self {
        let mut out = Self::zeros(axes);
        let axes = out.axes.clone();
        match axes.len() {
            1 => {
                for j in 0..axes[0].len {
                    out.values[j] = f(&[axes[0].coord(j)]);
                }
            }
            _ => {
                let (n0, n1) = (axes[0].len, axes[1].len);
                for i in 0..n0 {
                    for j in 0..n1 {
                        out.values[i * n1 + j] = f(&[axes[0].coord(i), axes[1].coord(j)]);
                    }
                }
            }
        }
        out
    }

    /// Field on the spatial axes of `grid`.
    pub fn on_grid(grid: &GridSpec, f: impl Fn(&[f64]) -> C64) -> Self {
        let ax = vec![grid.spatial_axis(); grid.d];
        Self::from_fn(ax, f)
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Quadrature cell volume `Π step_i`.
    pub fn cell_volume(&self) -> f64 {
        self.axes.iter().map(|a| a.step).product()
    }

    pub fn coord(&self, flat: usize) -> Vec<f64> {
        match self.axes.len() {
            1 => vec![self.axes[0].coord(flat)],
            _ => {
                let n1 = self.axes[1].len;
                vec![
                    self.axes[0].coord(flat / n1),
                    self.axes[1].coord(flat % n1),
                ]
            }
        }
    }

    pub fn same_axes(&self, other: &Self) -> bool {
        self.axes == other.axes
    }

    /// Rectangle-rule integral `h^d Σ_j values[j]`.
    pub fn integrate(&self) -> C64 {
        let w = self.cell_volume();
        self.values.iter().sum::<C64>() * w
    }

    /// Weighted quasi-norm `(h^d Σ |f(x_j) ω(x_j)|^p)^{1/p}`; max for `p = ∞`.
    pub fn lp_norm(&self, p: Exponent, w: &Weight) -> f64 {
        let vol = self.cell_volume();
        match p {
            Exponent::Infinity => {
                let mut best = 0.0f64;
                for (j, v) in self.values.iter().enumerate() {
                    let x = self.coord(j);
                    best = best.max(v.norm() * w.omega(&x));
                }
                best
            }
            Exponent::Finite(p) => {
                let mut acc = 0.0f64;
                for (j, v) in self.values.iter().enumerate() {
                    let x = self.coord(j);
                    let t = v.norm() * w.omega(&x);
                    if t > 0.0 {
                        acc += vol * t.powf(p);
                    }
                }
                acc.powf(1.0 / p)
            }
        }
    }

    pub fn scale(&self, alpha: C64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        assert!(self.same_axes(other), "axis mismatch in add");
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(other.values.iter())
            .for_each(|(a, b)| *a += b);
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert!(self.same_axes(other), "axis mismatch in sub");
        let mut out = self.clone();
        out.values
            .iter_mut()
            .zip(other.values.iter())
            .for_each(|(a, b)| *a -= b);
        out
    }

    /// Periodic shift by `x0` (one entry per axis); `x0` must be on-grid.
    pub fn translate(&self, x0: &[f64]) -> Result<Self> {
        if x0.len() != self.dim() {
            return Err(Error::GridMismatch("shift dimension".into()));
        }
        let mut shifts = Vec::with_capacity(x0.len());
        for (ax, &s) in self.axes.iter().zip(x0) {
            let t = s / ax.step;
            if (t - t.round()).abs() > 1e-9 {
                return Err(Error::OffGridShift(s));
            }
            shifts.push((t.round() as i64).rem_euclid(ax.len as i64) as usize);
        }
        let mut out = Self::zeros(self.axes.clone());
        match self.dim() {
            1 => {
                let n = self.axes[0].len;
                for j in 0..n {
                    // f(x - x0): value at x_j comes from index j - shift
                    out.values[j] = self.values[(j + n - shifts[0]) % n];
                }
            }
            _ => {
                let (n0, n1) = (self.axes[0].len, self.axes[1].len);
                for i in 0..n0 {
                    let si = (i + n0 - shifts[0]) % n0;
                    for j in 0..n1 {
                        let sj = (j + n1 - shifts[1]) % n1;
                        out.values[i * n1 + j] = self.values[si * n1 + sj];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Pointwise phase `e^{-i⟨x, ξ0⟩}`.
    pub fn modulate(&self, xi0: &[f64]) -> Result<Self> {
        if xi0.len() != self.dim() {
            return Err(Error::GridMismatch("modulation dimension".into()));
        }
        let mut out = self.clone();
        for (j, v) in out.values.iter_mut().enumerate() {
            let x = self.coord(j);
            let dot: f64 = x.iter().zip(xi0).map(|(a, b)| a * b).sum();
            *v *= fft::cis(-dot);
        }
        Ok(out)
    }

    /// Index reflection about the origin: `f(x) → f(-x)` with periodic wrap.
    pub fn reflect(&self) -> Self {
        let refl = |ax: &Axis, j: usize| -> usize {
            // -x_j = -start - j*step; with start = -(len/2)*step this is index (len - j) mod len
            let xr = -ax.coord(j);
            ax.index_of(xr)
                .expect("reflection stays on symmetric grids")
        };
        let mut out = Self::zeros(self.axes.clone());
        match self.dim() {
            1 => {
                let ax = self.axes[0];
                for j in 0..ax.len {
                    out.values[j] = self.values[refl(&ax, j)];
                }
            }
            _ => {
                let (a0, a1) = (self.axes[0], self.axes[1]);
                for i in 0..a0.len {
                    let ri = refl(&a0, i);
                    for j in 0..a1.len {
                        out.values[i * a1.len + j] = self.values[ri * a1.len + refl(&a1, j)];
                    }
                }
            }
        }
        out
    }

    /// Fourier transform `(2π)^{-d/2} ∫ f(x) e^{-i⟨x,ξ⟩} dx` sampled on the
    /// centered dual axes, realized by FFT with quadrature scale `h^d`.
    pub fn fourier(&self) -> Self {
        let scale = self.cell_volume() * (2.0 * PI).powf(-(self.dim() as f64) / 2.0);
        let mut out = self.transform_axes(fft::forward_phase);
        out.values.iter_mut().for_each(|v| *v *= scale);
        out.axes = self.axes.iter().map(Axis::dual).collect();
        out
    }

    /// Inverse of [`fourier`]; expects a field on dual axes and returns one on
    /// the primal axes.
    pub fn inverse_fourier_onto(&self, primal: &[Axis]) -> Result<Self> {
        let expect: Vec<Axis> = primal.iter().map(Axis::dual).collect();
        for (have, want) in self.axes.iter().zip(&expect) {
            if (have.step - want.step).abs() > 1e-9 * want.step || have.len != want.len {
                return Err(Error::GridMismatch("not a dual-axis field".into()));
            }
        }
        let d = self.dim() as f64;
        let mut out = SampledField {
            axes: primal.to_vec(),
            values: self.values.clone(),
        };
        out = out.transform_axes_on(primal, fft::inverse_phase);
        // f(x) = (2π)^{-d/2} Σ_k F(ξ_k) e^{ixξ_k} dk^d while inverse_phase applies (1/n)Σ,
        // so scale by n * dk^d * (2π)^{-d/2}
        let n: usize = primal.iter().map(|a| a.len).product();
        let dk: f64 = self.axes.iter().map(|a| a.step).product();
        let factor = n as f64 * dk * (2.0 * PI).powf(-d / 2.0);
        out.values.iter_mut().for_each(|v| *v *= factor);
        SampledField::new(out.axes, out.values)
    }

    fn transform_axes(&self, f: impl Fn(&[C64], &Axis) -> Vec<C64>) -> Self {
        self.transform_axes_on(&self.axes.clone(), f)
    }

    fn transform_axes_on(&self, axes: &[Axis], f: impl Fn(&[C64], &Axis) -> Vec<C64>) -> Self {
        match self.dim() {
            1 => {
                let vals = f(&self.values, &axes[0]);
                SampledField {
                    axes: self.axes.clone(),
                    values: vals,
                }
            }
            _ => {
                let (n0, n1) = (self.axes[0].len, self.axes[1].len);
                let mut vals = self.values.clone();
                // axis 1 (contiguous rows)
                for i in 0..n0 {
                    let row: Vec<C64> = vals[i * n1..(i + 1) * n1].to_vec();
                    let t = f(&row, &axes[1]);
                    vals[i * n1..(i + 1) * n1].copy_from_slice(&t);
                }
                // axis 0 (columns)
                for j in 0..n1 {
                    let col: Vec<C64> = (0..n0).map(|i| vals[i * n1 + j]).collect();
                    let t = f(&col, &axes[0]);
                    for i in 0..n0 {
                        vals[i * n1 + j] = t[i];
                    }
                }
                SampledField {
                    axes: self.axes.clone(),
                    values: vals,
                }
            }
        }
    }

    /// L² inner product `h^d Σ f ḡ`.
    pub fn inner(&self, other: &Self) -> C64 {
        assert!(self.same_axes(other), "axis mismatch in inner product");
        let w = self.cell_volume();
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| a * b.conj())
            .sum::<C64>()
            * w
    }

    /// Write as CSV (`index_0[,index_1],re,im`) with the grid in a sidecar
    /// `<path>.grid` file holding `d`, `m`, `L`. Round-trips bit-exactly.
    pub fn write_csv(&self, grid: &GridSpec, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        match self.dim() {
            1 => {
                writeln!(f, "index_0,re,im")?;
                for (j, v) in self.values.iter().enumerate() {
                    writeln!(f, "{j},{:.16e},{:.16e}", v.re, v.im)?;
                }
            }
            _ => {
                writeln!(f, "index_0,index_1,re,im")?;
                let n1 = self.axes[1].len;
                for (flat, v) in self.values.iter().enumerate() {
                    writeln!(f, "{},{},{:.16e},{:.16e}", flat / n1, flat % n1, v.re, v.im)?;
                }
            }
        }
        let sidecar = sidecar_path(path);
        std::fs::write(sidecar, format!("d: {}\nm: {}\nL: {}\n", grid.d, grid.m, grid.l))?;
        Ok(())
    }

    /// Read a field written by [`write_csv`].
    pub fn read_csv(path: &Path) -> Result<(GridSpec, Self)> {
        let meta = std::fs::read_to_string(sidecar_path(path))?;
        let mut d = None;
        let mut m = None;
        let mut l = None;
        for line in meta.lines() {
            let Some((k, v)) = line.split_once(':') else {
                continue;
            };
            let v = v.trim();
            match k.trim() {
                "d" => d = v.parse().ok(),
                "m" => m = v.parse().ok(),
                "L" => l = v.parse().ok(),
                _ => {}
            }
        }
        let (d, m, l) = (
            d.ok_or_else(|| Error::Malformed("sidecar missing d".into()))?,
            m.ok_or_else(|| Error::Malformed("sidecar missing m".into()))?,
            l.ok_or_else(|| Error::Malformed("sidecar missing L".into()))?,
        );
        let grid = GridSpec::new(d, m, l)?;
        let text = std::fs::read_to_string(path)?;
        let mut field = SampledField::zeros(vec![grid.spatial_axis(); grid.d]);
        let n1 = if d == 2 { grid.points_per_axis() } else { 1 };
        let mut seen = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 {
                continue; // header
            }
            if line.trim().is_empty() {
                continue;
            }
            let parts: Vec<&str> = line.split(',').collect();
            if parts.len() != d + 2 {
                return Err(Error::Malformed(format!("line {}: bad column count", lineno + 1)));
            }
            let parse_f = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Malformed(format!("line {}: bad number", lineno + 1)))
            };
            let parse_i = |s: &str| -> Result<usize> {
                s.trim()
                    .parse()
                    .map_err(|_| Error::Malformed(format!("line {}: bad index", lineno + 1)))
            };
            let flat = if d == 1 {
                parse_i(parts[0])?
            } else {
                parse_i(parts[0])? * n1 + parse_i(parts[1])?
            };
            if flat >= field.values.len() {
                return Err(Error::Malformed(format!("line {}: index out of range", lineno + 1)));
            }
            field.values[flat] = C64::new(parse_f(parts[d])?, parse_f(parts[d + 1])?);
            seen += 1;
        }
        if seen != field.values.len() {
            return Err(Error::Malformed(format!(
                "expected {} rows, found {seen}",
                field.values.len()
            )));
        }
        Ok((grid, field))
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut p = path.as_os_str().to_owned();
    p.push(".grid");
    std::path::PathBuf::from(p)
}

/// Centered Gaussian `amp * e^{-|x|²/(2σ²)}` sampled on the grid.
pub fn gaussian(grid: &GridSpec, sigma: f64, amp: f64) -> SampledField {
    SampledField::on_grid(grid, |x| {
        let r2: f64 = x.iter().map(|t| t * t).sum();
        C64::new(amp * (-r2 / (2.0 * sigma * sigma)).exp(), 0.0)
    })
}

/// L²-normalized Gaussian window `π^{-d/4} e^{-|x|²/2}`.
pub fn gaussian_window(grid: &GridSpec) -> SampledField {
    let amp = PI.powf(-(grid.d as f64) / 4.0);
    gaussian(grid, 1.0, amp)
}

/// Indicator of the block `[0,1)^d` sampled on the grid.
pub fn block_indicator(grid: &GridSpec) -> SampledField {
    SampledField::on_grid(grid, |x| {
        if x.iter().all(|&t| (0.0..1.0).contains(&t)) {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Random field with i.i.d. standard complex Gaussian samples.
pub fn random_field(grid: &GridSpec, rng: &mut impl rand::Rng) -> SampledField {
    use rand_distr_normal::draw_standard_normal;
    let mut out = SampledField::zeros(vec![grid.spatial_axis(); grid.d]);
    for v in out.values_mut() {
        *v = C64::new(draw_standard_normal(rng), draw_standard_normal(rng));
    }
    out
}

/// Random smooth field: random low-frequency Fourier data with Gaussian decay,
/// mapped back to the grid. `cutoff_frac` limits the band to that fraction of
/// the Nyquist frequency.
pub fn random_band_limited(
    grid: &GridSpec,
    cutoff_frac: f64,
    rng: &mut impl rand::Rng,
) -> SampledField {
    use rand_distr_normal::draw_standard_normal;
    let axes = vec![grid.spatial_axis(); grid.d];
    let duals: Vec<Axis> = axes.iter().map(Axis::dual).collect();
    let mut spec = SampledField::zeros(duals.clone());
    let ny = duals[0].extent() / 2.0;
    let cut = cutoff_frac * ny;
    for j in 0..spec.len() {
        let xi = spec.coord(j);
        let r: f64 = xi.iter().map(|t| t * t).sum::<f64>().sqrt();
        if r <= cut {
            let decay = (-(r / cut.max(1e-12)).powi(2) * 2.0).exp();
            spec.values_mut()[j] =
                C64::new(draw_standard_normal(rng), draw_standard_normal(rng)) * decay;
        }
    }
    spec.inverse_fourier_onto(&axes).expect("dual axes by construction")
}

mod rand_distr_normal {
    /// Box-Muller, to keep the dependency surface small.
    pub fn draw_standard_normal(rng: &mut impl rand::Rng) -> f64 {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0);
        let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        (-2.0 * u.ln()).sqrt() * v.cos()
    }
}
