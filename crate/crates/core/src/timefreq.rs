//! Short-time Fourier transform, the `T_φ` transform, mixed-norm `L^{p,q}`
//! and classical modulation quasi-norms on the discretized phase plane.

use crate::fft;
use crate::field::{Exponent, SampledField};
use crate::grid::{Axis, GridSpec};
use crate::weight::Weight;
use crate::{C64, Error, Result};
use std::f64::consts::PI;

/// A field on the phase plane `(x, ξ)`: spatial axis times centered
/// frequency axis, row-major with `x` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    field: SampledField,
}

impl PhaseField {
    pub fn new(x: Axis, k: Axis, values: Vec<C64>) -> Result<Self> {
        Ok(PhaseField {
            field: SampledField::new(vec![x, k], values)?,
        })
    }

    pub fn zeros(x: Axis, k: Axis) -> Self {
        PhaseField {
            field: SampledField::zeros(vec![x, k]),
        }
    }

    pub fn from_fn(x: Axis, k: Axis, f: impl Fn(f64, f64) -> C64) -> Self {
        PhaseField {
            field: SampledField::from_fn(vec![x, k], |c| f(c[0], c[1])),
        }
    }

    /// Phase grid of the STFT: `x` on the spatial grid, `ξ` on its dual.
    pub fn stft_axes(grid: &GridSpec) -> (Axis, Axis) {
        let x = grid.spatial_axis();
        let k = x.dual();
        (x, k)
    }

    /// Symbol carrier for quantization: both axes with `2mL` points, spatial
    /// spacing `h/2` and frequency spacing `π/L`. On this square carrier the
    /// kernel phases `e^{2iσ(X,Y)}` are exact roots of unity, the symplectic
    /// Fourier transform is an exact involution, and the even-indexed
    /// frequency rows form the FFT grid of the spatial axis.
    pub fn weyl_axes(grid: &GridSpec) -> (Axis, Axis) {
        let n = 2 * grid.points_per_axis();
        let x = grid.fine_axis();
        let dk = PI / grid.l as f64;
        let k = Axis {
            start: -dk * (n / 2) as f64,
            step: dk,
            len: n,
        };
        (x, k)
    }

    /// Integer-aligned square phase grid: both axes with spacing `1/m` over
    /// `[-L/2, L/2)`, so unit cubes align with sample blocks in both
    /// directions. Used for amalgam norms of phase-space symbols.
    pub fn aligned_axes(m: u32, l: u32) -> Result<(Axis, Axis)> {
        let g = GridSpec::new(1, m, l)?;
        let a = g.spatial_axis();
        Ok((a, a))
    }

    pub fn x_axis(&self) -> Axis {
        self.field.axes()[0]
    }

    pub fn k_axis(&self) -> Axis {
        self.field.axes()[1]
    }

    pub fn nx(&self) -> usize {
        self.x_axis().len
    }

    pub fn nk(&self) -> usize {
        self.k_axis().len
    }

    pub fn values(&self) -> &[C64] {
        self.field.values()
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        self.field.values_mut()
    }

    pub fn at(&self, ix: usize, ik: usize) -> C64 {
        self.field.values()[ix * self.nk() + ik]
    }

    pub fn set(&mut self, ix: usize, ik: usize, v: C64) {
        let nk = self.nk();
        self.field.values_mut()[ix * nk + ik] = v;
    }

    /// View as a two-axis sampled field (shares geometry, copies values).
    pub fn as_field(&self) -> &SampledField {
        &self.field
    }

    pub fn into_field(self) -> SampledField {
        self.field
    }

    pub fn from_field(field: SampledField) -> Result<Self> {
        if field.dim() != 2 {
            return Err(Error::BadDimension(field.dim()));
        }
        Ok(PhaseField { field })
    }

    pub fn same_axes(&self, other: &Self) -> bool {
        self.field.same_axes(&other.field)
    }

    pub fn cell_volume(&self) -> f64 {
        self.field.cell_volume()
    }

    pub fn add(&self, o: &Self) -> Self {
        PhaseField {
            field: self.field.add(&o.field),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        PhaseField {
            field: self.field.sub(&o.field),
        }
    }

    pub fn scale(&self, a: C64) -> Self {
        PhaseField {
            field: self.field.scale(a),
        }
    }

    /// Flat `L²` norm over the phase plane with quadrature weights.
    pub fn l2_norm(&self) -> f64 {
        self.field
            .lp_norm(Exponent::Finite(2.0), &Weight::constant(1.0))
    }

    /// Translate by an on-grid phase-space vector, periodic in both axes.
    pub fn translate(&self, x0: f64, k0: f64) -> Result<Self> {
        Ok(PhaseField {
            field: self.field.translate(&[x0, k0])?,
        })
    }

    pub fn reflect(&self) -> Self {
        PhaseField {
            field: self.field.reflect(),
        }
    }

    /// Write as CSV `ix,ik,re,im` with an axis sidecar.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        use std::io::Write as _;
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "ix,ik,re,im")?;
        let nk = self.nk();
        for (flat, v) in self.values().iter().enumerate() {
            writeln!(f, "{},{},{:.16e},{:.16e}", flat / nk, flat % nk, v.re, v.im)?;
        }
        let (x, k) = (self.x_axis(), self.k_axis());
        let meta = format!(
            "nx: {}\nx0: {:.16e}\ndx: {:.16e}\nnk: {}\nk0: {:.16e}\ndk: {:.16e}\n",
            x.len, x.start, x.step, k.len, k.start, k.step
        );
        let mut p = path.as_os_str().to_owned();
        p.push(".grid");
        std::fs::write(std::path::PathBuf::from(p), meta)?;
        Ok(())
    }
}

/// Short-time Fourier transform `V_φ f(x,ξ) = F(f · conj(φ(·-x)))(ξ)`,
/// one FFT per spatial column.
pub fn stft(f: &SampledField, window: &SampledField) -> Result<PhaseField> {
    if !f.same_axes(window) {
        return Err(Error::GridMismatch("stft window grid".into()));
    }
    if f.dim() != 1 {
        return Err(Error::BadDimension(f.dim()));
    }
    if window.values().iter().all(|v| v.norm() == 0.0) {
        return Err(Error::ZeroWindow);
    }
    let ax = f.axes()[0];
    let n = ax.len;
    let dual = ax.dual();
    let scale = ax.step * (2.0 * PI).powf(-0.5);
    let mut out = PhaseField::zeros(ax, dual);
    let fv = f.values();
    let wv = window.values();
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for i in 0..n {
        for j in 0..n {
            buf[j] = fv[j] * wv[(j + n - i) % n].conj();
        }
        let row = fft::forward_phase(&buf, &ax);
        for (k, v) in row.into_iter().enumerate() {
            out.set(i, k, v * scale);
        }
    }
    Ok(out)
}

/// `T_φ f(x,ξ) = e^{i⟨x,ξ⟩} V_φ f(x,ξ)`.
pub fn tphi(f: &SampledField, window: &SampledField) -> Result<PhaseField> {
    let mut v = stft(f, window)?;
    let (xax, kax) = (v.x_axis(), v.k_axis());
    for i in 0..xax.len {
        let x = xax.coord(i);
        for k in 0..kax.len {
            let ph = fft::cis(x * kax.coord(k));
            let cur = v.at(i, k);
            v.set(i, k, cur * ph);
        }
    }
    Ok(v)
}

fn lp_reduce(vals: impl Iterator<Item = f64>, p: Exponent, weight: f64) -> f64 {
    match p {
        Exponent::Infinity => vals.fold(0.0, f64::max),
        Exponent::Finite(p) => {
            let mut acc = 0.0;
            for a in vals {
                if a > 0.0 {
                    acc += weight * a.powf(p);
                }
            }
            acc.powf(1.0 / p)
        }
    }
}

/// Mixed norm `L^{p,q}`: inner `L^p` over `x` (quadrature weight `dx`),
/// outer `L^q` over `ξ` (quadrature weight `dk`), after multiplying by the
/// phase-space weight.
pub fn mixed_norm(f: &PhaseField, p: Exponent, q: Exponent, w: &Weight) -> f64 {
    let (xax, kax) = (f.x_axis(), f.k_axis());
    let outer = (0..kax.len).map(|k| {
        let xi = kax.coord(k);
        lp_reduce(
            (0..xax.len).map(|i| f.at(i, k).norm() * w.omega(&[xax.coord(i), xi])),
            p,
            xax.step,
        )
    });
    lp_reduce(outer, q, kax.step)
}

/// Mixed norm with the roles of the axes swapped: inner over `ξ`, outer
/// over `x`.
pub fn mixed_norm_swapped(f: &PhaseField, inner_q: Exponent, outer_p: Exponent, w: &Weight) -> f64 {
    let (xax, kax) = (f.x_axis(), f.k_axis());
    let outer = (0..xax.len).map(|i| {
        let x = xax.coord(i);
        lp_reduce(
            (0..kax.len).map(|k| f.at(i, k).norm() * w.omega(&[x, kax.coord(k)])),
            inner_q,
            kax.step,
        )
    });
    lp_reduce(outer, outer_p, xax.step)
}

/// Which of the two classical modulation quasi-norms to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModVariant {
    /// `‖V_φ f · ω‖_{L^{p,q}}` with `x` inner, `ξ` outer.
    MType,
    /// `‖G‖_{L^{q,p}}` with `G(ξ,x) = V_φ f(x,ξ) ω(x,ξ)`: `ξ` inner.
    WType,
}

#[derive(Debug, Clone, Copy)]
pub struct ModulationParams {
    pub p: Exponent,
    pub q: Exponent,
    pub weight: Weight,
    pub variant: ModVariant,
}

impl ModulationParams {
    pub fn m_type(p: f64, q: f64, weight: Weight) -> Result<Self> {
        Ok(ModulationParams {
            p: Exponent::new(p)?,
            q: Exponent::new(q)?,
            weight,
            variant: ModVariant::MType,
        })
    }

    pub fn w_type(p: f64, q: f64, weight: Weight) -> Result<Self> {
        Ok(ModulationParams {
            p: Exponent::new(p)?,
            q: Exponent::new(q)?,
            weight,
            variant: ModVariant::WType,
        })
    }
}

/// Classical modulation quasi-norm of `f` with the given window.
pub fn modulation_norm(
    f: &SampledField,
    window: &SampledField,
    params: &ModulationParams,
) -> Result<f64> {
    let v = match params.variant {
        ModVariant::MType => tphi(f, window)?,
        ModVariant::WType => stft(f, window)?,
    };
    Ok(match params.variant {
        ModVariant::MType => mixed_norm(&v, params.p, params.q, &params.weight),
        ModVariant::WType => mixed_norm_swapped(&v, params.q, params.p, &params.weight),
    })
}
