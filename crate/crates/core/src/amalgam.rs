//! Weighted Wiener-amalgam quasi-norms `WL^{p,q}_{(ω)}`: local `L^p` norms
//! over the unit cubes `k + [0,1)^d`, collected in a weighted `ℓ^q` sum,
//! plus the strict-inclusion and `L^∞`-failure witnesses.

use crate::field::{Exponent, QuasiNormParams, SampledField};
use crate::grid::GridSpec;
use crate::weight::Weight;
use crate::{C64, Result};
use std::collections::BTreeMap;

/// An amalgam space: local exponent `p`, global exponent `q`, weight on the
/// integer lattice.
#[derive(Debug, Clone, Copy)]
pub struct AmalgamSpace {
    pub params: QuasiNormParams,
    pub weight: Weight,
}

impl AmalgamSpace {
    pub fn new(p: f64, q: f64, weight: Weight) -> Result<Self> {
        Ok(AmalgamSpace {
            params: QuasiNormParams::new(p, q)?,
            weight,
        })
    }

    pub fn unweighted(p: f64, q: f64) -> Result<Self> {
        Self::new(p, q, Weight::constant(1.0))
    }
}

/// `ℓ^q` norm of a nonnegative sequence (max for `q = ∞`).
fn lq_norm(seq: impl Iterator<Item = f64>, q: Exponent) -> f64 {
    match q {
        Exponent::Infinity => seq.fold(0.0, f64::max),
        Exponent::Finite(q) => {
            let mut acc = 0.0;
            for a in seq {
                if a > 0.0 {
                    acc += a.powf(q);
                }
            }
            acc.powf(1.0 / q)
        }
    }
}

/// The weighted Wiener-amalgam quasi-norm of `f`.
///
/// Every sample is assigned to the unit cube containing it; the local norm
/// over each cube is the quadrature `L^p` norm of the samples inside and the
/// weight is evaluated at the integer cube corner. On integer-aligned grids
/// (spacing `1/m`) the cubes hold exactly `m^d` samples and the sum is the
/// literal discretization of the continuum quasi-norm.
pub fn amalgam_norm(f: &SampledField, space: &AmalgamSpace) -> f64 {
    let vol = f.cell_volume();
    let p = space.params.p;
    // local p-th power masses per cube, keyed by integer corner
    let mut cubes: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for (j, v) in f.values().iter().enumerate() {
        let x = f.coord(j);
        let key: Vec<i64> = x.iter().map(|&t| t.floor() as i64).collect();
        let a = v.norm();
        match p {
            Exponent::Infinity => {
                let slot = cubes.entry(key).or_insert(0.0);
                *slot = slot.max(a);
            }
            Exponent::Finite(p) => {
                if a > 0.0 {
                    *cubes.entry(key).or_insert(0.0) += vol * a.powf(p);
                }
            }
        }
    }
    let w = &space.weight;
    let local = cubes.into_iter().map(|(k, mass)| {
        let corner: Vec<f64> = k.iter().map(|&t| t as f64).collect();
        let a_f = match p {
            Exponent::Infinity => mass,
            Exponent::Finite(p) => mass.powf(1.0 / p),
        };
        a_f * w.omega(&corner)
    });
    lq_norm(local, space.params.q)
}

/// Compare `WL^{p,p}` with corner-sampled weight against `L^p` with the
/// cube-piecewise-constant weight. The two agree exactly when `ω` is constant
/// on cubes.
pub fn amalgam_equals_lebesgue_check(f: &SampledField, p: f64, w: &Weight) -> Result<(f64, f64)> {
    let space = AmalgamSpace::new(p, p, *w)?;
    let lhs = amalgam_norm(f, &space);
    // L^p with ω replaced by its value at the cube corner of each sample
    let pe = Exponent::new(p)?;
    let vol = f.cell_volume();
    let rhs = match pe {
        Exponent::Infinity => f
            .values()
            .iter()
            .enumerate()
            .map(|(j, v)| {
                let x = f.coord(j);
                let c: Vec<f64> = x.iter().map(|t| t.floor()).collect();
                v.norm() * w.omega(&c)
            })
            .fold(0.0, f64::max),
        Exponent::Finite(p) => {
            let mut acc = 0.0;
            for (j, v) in f.values().iter().enumerate() {
                let x = f.coord(j);
                let c: Vec<f64> = x.iter().map(|t| t.floor()).collect();
                let t = v.norm() * w.omega(&c);
                if t > 0.0 {
                    acc += vol * t.powf(p);
                }
            }
            acc.powf(1.0 / p)
        }
    };
    Ok((lhs, rhs))
}

/// Sequence-level strictness witness: for `f = Σ_j t_j χ_{j+[0,1)}` the cube
/// norms are `a_f(j) = t_j` exactly, so the `L¹` norm of the `J`-term
/// truncation is `Σ_{j<J} |t_j|` while the `WL^{1,r}` norm is the `ℓ^r` norm
/// of the truncated sequence.
pub fn strictness_witness(t: &[f64], r: f64, j_max: usize) -> (f64, f64) {
    let take = t.len().min(j_max);
    let l1: f64 = t[..take].iter().map(|a| a.abs()).sum();
    let wl: f64 = lq_norm(t[..take].iter().map(|a| a.abs()), Exponent::Finite(r));
    (l1, wl)
}

/// `L^∞` non-factorization witness: sup-norm distance between the block
/// indicator and its mollification, for each `ε` in the ladder. The jump at
/// the block boundary keeps every value near `1/2` no matter how small `ε`
/// gets.
pub fn linfty_failure_witness(grid: &GridSpec, ladder: &[f64]) -> Result<Vec<f64>> {
    let chi = crate::field::block_indicator(grid);
    let one = Weight::constant(1.0);
    let mut out = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        let phi = mollifier(grid, eps)?;
        let smooth = crate::twist::convolve(&chi, &phi)?;
        out.push(chi.sub(&smooth).lp_norm(Exponent::Infinity, &one));
    }
    Ok(out)
}

/// Unit-mass Gaussian mollifier `φ_ε = ε^{-d} φ(x/ε)`, normalized so the
/// discrete mass is exactly one.
pub fn mollifier(grid: &GridSpec, eps: f64) -> Result<SampledField> {
    let floor = 4.0 * grid.h();
    if eps < floor {
        return Err(crate::Error::ResolutionLimited {
            eps,
            floor,
            best: f64::NAN,
        });
    }
    let mut phi = SampledField::on_grid(grid, |x| {
        let r2: f64 = x.iter().map(|t| (t / eps) * (t / eps)).sum();
        C64::new((-r2 / 2.0).exp(), 0.0)
    });
    let mass = phi.integrate().re;
    let s = C64::new(1.0 / mass, 0.0);
    phi = phi.scale(s);
    Ok(phi)
}
