//! Constructive factorization `f = ψ · g` over quasi-Banach algebra/module
//! pairs with bounded left approximate identities: the unitalized algebra,
//! the Neumann-series inverse, approximate-unit selection, and the
//! iterative refinement whose partial products `ψ_n` stay invertible while
//! `ψ_n^{-1}·f` converges. Three contexts are shipped: convolution on the
//! line, twisted convolution on the phase plane, and operator composition
//! of Weyl symbols.

use crate::amalgam::{amalgam_norm, AmalgamSpace};
use crate::field::{Exponent, SampledField};
use crate::grid::{Axis, GridSpec};
use crate::timefreq::{modulation_norm, ModulationParams, PhaseField};
use crate::twist::{convolve, twisted_convolve, twisted_unit};
use crate::weight::Weight;
use crate::weyl::{
    matrix_to_symbol, op_matrix, schatten_norm, OperatorMatrix, QuantizationParam, SchattenIndex,
};
use crate::{C64, Error, Result};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::PI;

/// Linear-space operations shared by algebra and module carriers.
pub trait Element: Clone {
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn scale(&self, c: C64) -> Self;
}

impl Element for SampledField {
    fn add(&self, o: &Self) -> Self {
        SampledField::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        SampledField::sub(self, o)
    }
    fn scale(&self, c: C64) -> Self {
        SampledField::scale(self, c)
    }
}

impl Element for PhaseField {
    fn add(&self, o: &Self) -> Self {
        PhaseField::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        PhaseField::sub(self, o)
    }
    fn scale(&self, c: C64) -> Self {
        PhaseField::scale(self, c)
    }
}

/// `t ϱ + φ` in the unitalized algebra.
#[derive(Debug, Clone)]
pub struct UnitalElement<E> {
    pub t: C64,
    pub phi: E,
}

/// `(|t|^p + ‖φ‖_B^p)^{1/p}`.
pub fn unital_norm<C: FactorContext>(ctx: &C, u: &UnitalElement<C::AlgElem>) -> f64 {
    let p = ctx.order();
    (u.t.norm().powf(p) + ctx.alg_norm(&u.phi).powf(p)).powf(1.0 / p)
}

/// An algebra/module pair with the operations the factorization engine
/// needs. Norms are already rescaled so that submultiplicativity and the
/// module bound hold with constant one; the scale is recorded.
pub trait FactorContext {
    type AlgElem: Element;
    type ModElem: Element;

    fn name(&self) -> &'static str;
    /// Quasi-norm order `p ∈ (0,1]` of the pair.
    fn order(&self) -> f64;
    fn alg_norm(&self, a: &Self::AlgElem) -> f64;
    fn mod_norm(&self, f: &Self::ModElem) -> f64;
    fn multiply(&self, a: &Self::AlgElem, b: &Self::AlgElem) -> Result<Self::AlgElem>;
    fn act(&self, a: &Self::AlgElem, f: &Self::ModElem) -> Result<Self::ModElem>;
    /// Mollification widths from coarse to the resolution floor.
    fn unit_ladder(&self) -> &[f64];
    fn resolution_floor(&self) -> f64;
    /// Approximate identity of width `eps`.
    fn unit(&self, eps: f64) -> Result<Self::AlgElem>;
    /// Solve `(t ϱ + φ) · g = f` exactly in the discrete representation.
    fn solve_unital(&self, t: C64, phi: &Self::AlgElem, f: &Self::ModElem)
        -> Result<Self::ModElem>;
    /// Filtered solve of `φ · g = f` (no scalar part); spectral components
    /// below the filter threshold are dropped rather than amplified.
    fn solve_alg(&self, phi: &Self::AlgElem, f: &Self::ModElem) -> Result<Self::ModElem>;
    fn invert_unital(&self, u: &UnitalElement<Self::AlgElem>)
        -> Result<UnitalElement<Self::AlgElem>>;
    fn alg_zero(&self) -> Self::AlgElem;
    fn mod_zero(&self) -> Self::ModElem;
    /// The factor by which the raw algebra norm was rescaled.
    fn norm_scale(&self) -> f64;

    /// Measured unit radius: the largest ladder-unit norm, floored at one.
    fn unit_radius(&self) -> f64 {
        let mut r = 1.0f64;
        for &e in self.unit_ladder() {
            if let Ok(u) = self.unit(e) {
                r = r.max(self.alg_norm(&u));
            }
        }
        r
    }
}

/// `r₀ = r / ((2r+1)^p - (2r)^p)^{1/p}`.
pub fn r0(r: f64, p: f64) -> f64 {
    r / ((2.0 * r + 1.0).powf(p) - (2.0 * r).powf(p)).powf(1.0 / p)
}

/// Neumann-series inverse
/// `T(φ) = ((2r+1)/(2r)) (ϱ + Σ_{k≥1} (-1)^k (2r)^{-k} φ^k)`,
/// truncated when the `p`-power tail bound `Σ_{k>K} 2^{-kp}` drops below
/// `tol^p`. Satisfies `T(φ) = ((2r/(2r+1)) ϱ + φ/(2r+1))^{-1}`.
pub fn neumann_t<C: FactorContext>(
    ctx: &C,
    phi: &C::AlgElem,
    r: f64,
    p: f64,
    tol: f64,
) -> Result<UnitalElement<C::AlgElem>> {
    let norm = ctx.alg_norm(phi);
    if norm > r * (1.0 + 1e-12) {
        return Err(Error::RadiusExceeded { norm, r });
    }
    // Σ_{k>K} 2^{-kp} = 2^{-(K+1)p} / (1 - 2^{-p}) < tol^p
    let q = 0.5f64.powf(p);
    let rhs = tol.powf(p) * (1.0 - q);
    let k_max = if rhs <= 0.0 {
        64
    } else {
        ((rhs.ln() / q.ln()).ceil() as usize).clamp(1, 512)
    };
    let front = (2.0 * r + 1.0) / (2.0 * r);
    let mut acc = phi.scale(C64::new(-1.0 / (2.0 * r), 0.0));
    let mut power = phi.clone();
    let mut coef = -1.0 / (2.0 * r);
    for _ in 2..=k_max {
        power = ctx.multiply(&power, phi)?;
        coef *= -1.0 / (2.0 * r);
        acc = acc.add(&power.scale(C64::new(coef, 0.0)));
    }
    Ok(UnitalElement {
        t: C64::new(front, 0.0),
        phi: acc.scale(C64::new(front, 0.0)),
    })
}

/// Multiply two unital elements: `(sϱ+φ)(tϱ+ψ) = stϱ + (φψ + tφ + sψ)`.
pub fn unital_multiply<C: FactorContext>(
    ctx: &C,
    a: &UnitalElement<C::AlgElem>,
    b: &UnitalElement<C::AlgElem>,
) -> Result<UnitalElement<C::AlgElem>> {
    let cross = ctx.multiply(&a.phi, &b.phi)?;
    let phi = cross.add(&a.phi.scale(b.t)).add(&b.phi.scale(a.t));
    Ok(UnitalElement { t: a.t * b.t, phi })
}

/// Apply `t ϱ + φ` to a module element.
pub fn unital_act<C: FactorContext>(
    ctx: &C,
    u: &UnitalElement<C::AlgElem>,
    f: &C::ModElem,
) -> Result<C::ModElem> {
    Ok(ctx.act(&u.phi, f)?.add(&f.scale(u.t)))
}

/// Width of the widest ladder unit meeting all the tolerance gates: the
/// first `φ` with `‖φψ_j - ψ_j‖_B < ε` for all targets, `‖φ·f - f‖_M < ε`
/// and `‖φ‖_B ≤ r`. Lowest ladder index wins.
pub fn select_unit<C: FactorContext>(
    ctx: &C,
    targets: &[C::AlgElem],
    f: &C::ModElem,
    eps: f64,
    r: f64,
) -> Result<C::AlgElem> {
    let mut best = f64::INFINITY;
    for &el in ctx.unit_ladder() {
        let u = ctx.unit(el)?;
        if ctx.alg_norm(&u) > r * (1.0 + 1e-12) {
            continue;
        }
        let mut worst = ctx.mod_norm(&ctx.act(&u, f)?.sub(f));
        for t in targets {
            let gap = ctx.alg_norm(&ctx.multiply(&u, t)?.sub(t));
            worst = worst.max(gap);
        }
        if worst < eps {
            return Ok(u);
        }
        best = best.min(worst);
    }
    Err(Error::ResolutionLimited {
        eps,
        floor: ctx.resolution_floor(),
        best,
    })
}

/// The context's approximate identity of width `eps` (resolution-floored).
pub fn approx_identity<C: FactorContext>(ctx: &C, eps: f64) -> Result<C::AlgElem> {
    ctx.unit(eps)
}

/// Outcome of a factorization run.
#[derive(Debug, Clone)]
pub struct FactorizationResult<A, M> {
    pub psi: A,
    pub g: M,
    pub units: Vec<A>,
    /// `ρ_n = ‖ψ_n^{-1}·f - ψ_{n-1}^{-1}·f‖_M` per step.
    pub rho: Vec<f64>,
    pub eps: f64,
    pub r: f64,
    pub p: f64,
    pub r0: f64,
    pub trivial: bool,
    /// Steps for which `ρ_n ≤ 2^{-n} ε` was enforced.
    pub certified_steps: usize,
    /// Smallest ε certified by the accepted steps: `max_n 2^n ρ_n`.
    pub eps_certified: f64,
    /// `‖f - ψ·g‖_M / ‖f‖_M`.
    pub relative_residual: f64,
    /// `‖f - g‖_M` against its bound `ε (1-2^{-p})^{-1/p}`.
    pub fg_gap: f64,
    pub fg_bound: f64,
    pub psi_norm: f64,
    pub norm_scale: f64,
    pub polish_applied: bool,
}

impl<A, M> FactorizationResult<A, M> {
    /// All structural invariants at the given solver tolerance.
    pub fn invariants_hold(&self, solver_tol: f64) -> bool {
        if self.trivial {
            return true;
        }
        self.relative_residual <= solver_tol
            && self.fg_gap <= self.fg_bound * (1.0 + 1e-9)
            && self.psi_norm <= self.r0 * (1.0 + 1e-9)
    }

    /// Flat key/value report (scalars, per-step residuals, pass flags).
    pub fn report_entries(&self, solver_tol: f64) -> Vec<(String, String)> {
        let mut e: Vec<(String, String)> = vec![
            ("trivial".into(), self.trivial.to_string()),
            ("eps".into(), format!("{:.16e}", self.eps)),
            ("r".into(), format!("{:.16e}", self.r)),
            ("p".into(), format!("{:.16e}", self.p)),
            ("r0".into(), format!("{:.16e}", self.r0)),
            ("steps".into(), self.rho.len().to_string()),
            ("certified_steps".into(), self.certified_steps.to_string()),
            ("eps_certified".into(), format!("{:.16e}", self.eps_certified)),
            (
                "relative_residual".into(),
                format!("{:.16e}", self.relative_residual),
            ),
            ("fg_gap".into(), format!("{:.16e}", self.fg_gap)),
            ("fg_bound".into(), format!("{:.16e}", self.fg_bound)),
            ("psi_norm".into(), format!("{:.16e}", self.psi_norm)),
            ("norm_scale".into(), format!("{:.16e}", self.norm_scale)),
            ("polish".into(), self.polish_applied.to_string()),
            (
                "residual_ok".into(),
                (self.trivial || self.relative_residual <= solver_tol).to_string(),
            ),
            (
                "fg_ok".into(),
                (self.trivial || self.fg_gap <= self.fg_bound * (1.0 + 1e-9)).to_string(),
            ),
            (
                "psi_ok".into(),
                (self.trivial || self.psi_norm <= self.r0 * (1.0 + 1e-9)).to_string(),
            ),
        ];
        for (i, r) in self.rho.iter().enumerate() {
            e.push((format!("rho_{}", i + 1), format!("{:.16e}", r)));
        }
        e
    }
}

/// Hewitt-style factorization `f = ψ · g`.
///
/// Steps walk the unit ladder and accept the widest unit whose measured
/// refinement residual meets `ρ_n ≤ 2^{-n} ε` with margin; once the ladder
/// floor makes that impossible the iteration continues uncertified with the
/// finest unit until the residuals flatten out, and the final `g` is the
/// exact filtered solution of `ψ · g = f` for the accumulated
/// `ψ = Σ_k (2r)^{k-1}/(2r+1)^k φ_k`.
pub fn hewitt_factorize<C: FactorContext>(
    ctx: &C,
    f: &C::ModElem,
    eps: f64,
    r_request: Option<f64>,
    max_iter: usize,
) -> Result<FactorizationResult<C::AlgElem, C::ModElem>> {
    if !(eps > 0.0) {
        return Err(Error::Numerical("eps must be positive".into()));
    }
    let p = ctx.order();
    let fnorm = ctx.mod_norm(f);
    let r = {
        let base = ctx.unit_radius().max(1.0);
        match r_request {
            Some(rq) => rq.max(base),
            None => base,
        }
    };
    let r0v = r0(r, p);
    if fnorm == 0.0 {
        // the zero module element factors through any unit
        let ladder = ctx.unit_ladder().to_vec();
        let psi = match ladder.first() {
            Some(&e) => ctx.unit(e)?,
            None => ctx.alg_zero(),
        };
        return Ok(FactorizationResult {
            psi,
            g: ctx.mod_zero(),
            units: vec![],
            rho: vec![],
            eps,
            r,
            p,
            r0: r0v,
            trivial: true,
            certified_steps: 0,
            eps_certified: 0.0,
            relative_residual: 0.0,
            fg_gap: 0.0,
            fg_bound: eps / (1.0 - 0.5f64.powf(p)).powf(1.0 / p),
            psi_norm: 0.0,
            norm_scale: ctx.norm_scale(),
            polish_applied: false,
        });
    }

    let beta = 2.0 * r / (2.0 * r + 1.0);
    let ladder = ctx.unit_ladder().to_vec();
    if ladder.is_empty() {
        return Err(Error::ResolutionLimited {
            eps,
            floor: ctx.resolution_floor(),
            best: f64::INFINITY,
        });
    }
    let finest = *ladder.last().unwrap();

    let mut units: Vec<C::AlgElem> = Vec::new();
    let mut rho: Vec<f64> = Vec::new();
    let mut cum: Option<C::AlgElem> = None;
    let mut g_prev = f.clone();
    let mut certified = true;
    let mut certified_steps = 0usize;
    let mut eps_certified = 0.0f64;
    let mut increases = 0usize;
    let mut coef = 1.0 / (2.0 * r + 1.0); // (2r)^{n-1}/(2r+1)^n
    let mut tn = beta; // (2r/(2r+1))^n

    for n in 1..=max_iter {
        let bound_n = 0.5f64.powi(n as i32) * eps;
        let mut accepted: Option<(C::AlgElem, C::AlgElem, C::ModElem, f64)> = None;
        if certified {
            for &el in &ladder {
                let cand = ctx.unit(el)?;
                let trial = match &cum {
                    Some(c) => c.add(&cand.scale(C64::new(coef, 0.0))),
                    None => cand.scale(C64::new(coef, 0.0)),
                };
                let Ok(g_n) = ctx.solve_unital(C64::new(tn, 0.0), &trial, f) else {
                    continue;
                };
                let rho_n = ctx.mod_norm(&g_n.sub(&g_prev));
                if rho_n <= 0.5 * bound_n {
                    accepted = Some((cand, trial, g_n, rho_n));
                    break;
                }
            }
            if accepted.is_none() {
                certified = false;
                if n == 1 {
                    // the very first contraction target is out of reach at
                    // this resolution: the requested ε cannot be certified
                    return Err(Error::ResolutionLimited {
                        eps,
                        floor: ctx.resolution_floor(),
                        best: f64::NAN,
                    });
                }
            }
        }
        if accepted.is_none() {
            // uncertified extension with the finest unit
            let cand = ctx.unit(finest)?;
            let trial = match &cum {
                Some(c) => c.add(&cand.scale(C64::new(coef, 0.0))),
                None => cand.scale(C64::new(coef, 0.0)),
            };
            let g_n = ctx.solve_unital(C64::new(tn, 0.0), &trial, f)?;
            let rho_n = ctx.mod_norm(&g_n.sub(&g_prev));
            accepted = Some((cand, trial, g_n, rho_n));
        }
        let (cand, trial, g_n, rho_n) = accepted.unwrap();
        if certified {
            certified_steps = n;
            eps_certified = eps_certified.max(2.0f64.powi(n as i32) * rho_n);
        } else {
            if let Some(last) = rho.last() {
                if rho_n > *last {
                    increases += 1;
                    if increases >= 2 {
                        return Err(Error::RefinementStall {
                            step: n,
                            got: rho_n,
                            needed: *last,
                        });
                    }
                } else {
                    increases = 0;
                }
            }
        }
        units.push(cand);
        rho.push(rho_n);
        cum = Some(trial);
        g_prev = g_n;
        coef *= beta;
        tn *= beta;
        if !certified && rho_n < 1e-11 * fnorm {
            break;
        }
    }

    let psi = cum.expect("at least one step ran");
    let (g, polish_applied) = match ctx.solve_alg(&psi, f) {
        Ok(g) => (g, true),
        Err(_) => (g_prev, false),
    };
    let recon = ctx.act(&psi, &g)?;
    let relative_residual = ctx.mod_norm(&f.sub(&recon)) / fnorm;
    let fg_gap = ctx.mod_norm(&f.sub(&g));
    let fg_bound = eps / (1.0 - 0.5f64.powf(p)).powf(1.0 / p);
    let psi_norm = ctx.alg_norm(&psi);
    Ok(FactorizationResult {
        psi,
        g,
        units,
        rho,
        eps,
        r,
        p,
        r0: r0v,
        trivial: false,
        certified_steps,
        eps_certified,
        relative_residual,
        fg_gap,
        fg_bound,
        psi_norm,
        norm_scale: ctx.norm_scale(),
        polish_applied,
    })
}

// ---------------------------------------------------------------------
// Convolution context
// ---------------------------------------------------------------------

/// Module norm choices for the convolution context.
#[derive(Debug, Clone)]
pub enum ConvModule {
    Lebesgue { p: Exponent, weight: Weight },
    Amalgam(AmalgamSpace),
    Modulation(ModulationParams),
}

/// `(WL^{1,r̃}_{(v)}(R), *)` acting on a Lebesgue, amalgam or modulation
/// module over the same grid. Inversion happens in the Fourier basis of the
/// circular convolution.
pub struct ConvCtx {
    grid: GridSpec,
    alg_space: AmalgamSpace,
    module: ConvModule,
    window: SampledField,
    order: f64,
    scale: f64,
    ladder: Vec<f64>,
}

impl ConvCtx {
    pub fn new(grid: GridSpec, alg_space: AmalgamSpace, module: ConvModule) -> Result<Self> {
        if grid.d != 1 {
            return Err(Error::BadDimension(grid.d));
        }
        let window = crate::field::gaussian_window(&grid);
        let mut order = alg_space.params.order();
        if let ConvModule::Lebesgue { p, .. } = &module {
            order = order.min(p.value()).min(1.0);
        }
        if let ConvModule::Amalgam(s) = &module {
            order = order.min(s.params.order());
        }
        if let ConvModule::Modulation(mp) = &module {
            order = order.min(mp.p.value()).min(mp.q.value()).min(1.0);
        }
        let floor = 4.0 * grid.h();
        let ladder = build_ladder(4.0, floor);
        // analytic submultiplicativity constant for the amalgam algebra and
        // amalgam/Lebesgue modules; modulation modules are measured
        let c_alg = 2.0 * alg_space.weight.c_v(1);
        let mut ctx = ConvCtx {
            grid,
            alg_space,
            module,
            window,
            order,
            scale: 1.0,
            ladder,
        };
        let measured = match ctx.module {
            ConvModule::Modulation(_) => ctx.measure_act_constant()?,
            _ => c_alg,
        };
        ctx.scale = c_alg.max(measured).max(1.0);
        Ok(ctx)
    }

    fn measure_act_constant(&self) -> Result<f64> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7fa0);
        let mut c: f64 = 0.0;
        for _ in 0..12 {
            let a = crate::field::random_band_limited(&self.grid, 0.6, &mut rng);
            let f = crate::field::random_band_limited(&self.grid, 0.6, &mut rng);
            let na = amalgam_norm(&a, &self.alg_space);
            let nf = self.raw_mod_norm(&f)?;
            if na == 0.0 || nf == 0.0 {
                continue;
            }
            let nprod = self.raw_mod_norm(&convolve(&a, &f)?)?;
            c = c.max(nprod / (na * nf));
        }
        Ok(2.0 * c)
    }

    fn raw_mod_norm(&self, f: &SampledField) -> Result<f64> {
        Ok(match &self.module {
            ConvModule::Lebesgue { p, weight } => f.lp_norm(*p, weight),
            ConvModule::Amalgam(s) => amalgam_norm(f, s),
            ConvModule::Modulation(mp) => modulation_norm(f, &self.window, mp)?,
        })
    }

    /// Fourier multiplier of convolution by `phi` (scaled plain DFT).
    fn multiplier(&self, phi: &SampledField) -> Vec<C64> {
        let mut m = phi.values().to_vec();
        crate::fft::raw_forward(&mut m);
        let h = self.grid.h();
        m.iter_mut().for_each(|v| *v *= h);
        m
    }

    fn solve_multiplier(
        &self,
        mult: &[C64],
        f: &SampledField,
        filter: bool,
    ) -> Result<SampledField> {
        let maxm = mult.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let minm = mult.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if !filter && minm < 1e-12 * maxm {
            return Err(Error::NearSingular(format!(
                "multiplier range [{minm:.3e}, {maxm:.3e}]"
            )));
        }
        let mut spec = f.values().to_vec();
        crate::fft::raw_forward(&mut spec);
        for (s, m) in spec.iter_mut().zip(mult) {
            if filter && m.norm() < 1e-12 * maxm {
                *s = C64::new(0.0, 0.0);
            } else {
                *s /= m;
            }
        }
        crate::fft::raw_inverse(&mut spec);
        let n = spec.len() as f64;
        spec.iter_mut().for_each(|v| *v /= n);
        SampledField::new(f.axes().to_vec(), spec)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

fn build_ladder(top: f64, floor: f64) -> Vec<f64> {
    let mut v = Vec::new();
    let mut e = top;
    while e >= floor - 1e-12 {
        v.push(e);
        e /= 2.0;
    }
    if v.is_empty() {
        v.push(floor);
    }
    v
}

impl FactorContext for ConvCtx {
    type AlgElem = SampledField;
    type ModElem = SampledField;

    fn name(&self) -> &'static str {
        "conv"
    }

    fn order(&self) -> f64 {
        self.order
    }

    fn alg_norm(&self, a: &SampledField) -> f64 {
        self.scale * amalgam_norm(a, &self.alg_space)
    }

    fn mod_norm(&self, f: &SampledField) -> f64 {
        self.raw_mod_norm(f).expect("module norm")
    }

    fn multiply(&self, a: &SampledField, b: &SampledField) -> Result<SampledField> {
        convolve(a, b)
    }

    fn act(&self, a: &SampledField, f: &SampledField) -> Result<SampledField> {
        convolve(a, f)
    }

    fn unit_ladder(&self) -> &[f64] {
        &self.ladder
    }

    fn resolution_floor(&self) -> f64 {
        4.0 * self.grid.h()
    }

    fn unit(&self, eps: f64) -> Result<SampledField> {
        crate::amalgam::mollifier(&self.grid, eps)
    }

    fn solve_unital(&self, t: C64, phi: &SampledField, f: &SampledField) -> Result<SampledField> {
        let mut mult = self.multiplier(phi);
        mult.iter_mut().for_each(|m| *m += t);
        self.solve_multiplier(&mult, f, false)
    }

    fn solve_alg(&self, phi: &SampledField, f: &SampledField) -> Result<SampledField> {
        let mult = self.multiplier(phi);
        self.solve_multiplier(&mult, f, true)
    }

    fn invert_unital(&self, u: &UnitalElement<SampledField>) -> Result<UnitalElement<SampledField>> {
        let mut mult = self.multiplier(&u.phi);
        mult.iter_mut().for_each(|m| *m += u.t);
        let maxm = mult.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let minm = mult.iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min);
        if minm < 1e-12 * maxm {
            return Err(Error::NearSingular(format!(
                "multiplier range [{minm:.3e}, {maxm:.3e}]"
            )));
        }
        let t_inv = if u.t.norm() > 0.0 {
            C64::new(1.0, 0.0) / u.t
        } else {
            C64::new(0.0, 0.0)
        };
        // φ' has multiplier (1/m - t')/h, recovered by inverse DFT
        let h = self.grid.h();
        let n = mult.len();
        let mut spec: Vec<C64> = mult
            .iter()
            .map(|m| (C64::new(1.0, 0.0) / m - t_inv) / h)
            .collect();
        crate::fft::raw_inverse(&mut spec);
        spec.iter_mut().for_each(|v| *v /= n as f64);
        Ok(UnitalElement {
            t: t_inv,
            phi: SampledField::new(vec![self.grid.spatial_axis()], spec)?,
        })
    }

    fn alg_zero(&self) -> SampledField {
        SampledField::zeros(vec![self.grid.spatial_axis()])
    }

    fn mod_zero(&self) -> SampledField {
        SampledField::zeros(vec![self.grid.spatial_axis()])
    }

    fn norm_scale(&self) -> f64 {
        self.scale
    }
}

// ---------------------------------------------------------------------
// Twisted-convolution context
// ---------------------------------------------------------------------

/// `(WL^{1,r̃}(R²), *_σ)` acting on Schatten symbols `s_p^w` by left twisted
/// convolution. Inversion solves a dense linear system on the symbol space
/// (the matrix of left twisted multiplication).
pub struct TwistCtx {
    grid: GridSpec,
    x: Axis,
    k: Axis,
    alg_space: AmalgamSpace,
    p_schatten: f64,
    order: f64,
    scale: f64,
    ladder: Vec<f64>,
}

impl TwistCtx {
    pub fn new(grid: GridSpec, alg_r: f64, p_schatten: f64) -> Result<Self> {
        let (x, k) = PhaseField::weyl_axes(&grid);
        let dim = x.len * k.len;
        if dim > 4096 {
            return Err(Error::Numerical(format!(
                "dense twisted solves need at most a 64x64 carrier, got {}x{}",
                x.len, k.len
            )));
        }
        if grid.points_per_axis() % 4 != 0 {
            return Err(Error::BadCarrier(
                "twisted context needs mL divisible by 4".into(),
            ));
        }
        let alg_space = AmalgamSpace::new(1.0, alg_r, Weight::constant(1.0))?;
        let order = alg_r.min(p_schatten).min(1.0);
        let floor = (4.0 * x.step).max(2.0 * k.step);
        let ladder = build_ladder(4.0, floor);
        let mut ctx = TwistCtx {
            grid,
            x,
            k,
            alg_space,
            p_schatten,
            order,
            scale: 1.0,
            ladder,
        };
        // algebra constant is the twisted Young constant; module constant
        // is measured with margin
        let c_alg = 4.0 * (PI / 2.0).sqrt();
        let c_mod = ctx.measure_act_constant()?;
        ctx.scale = c_alg.max(c_mod).max(1.0);
        Ok(ctx)
    }

    fn measure_act_constant(&self) -> Result<f64> {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x7fa1);
        let mut c: f64 = 0.0;
        for _ in 0..8 {
            let a = crate::twist::random_band_limited_symbol(self.x, self.k, 0.6, &mut rng);
            let f = crate::twist::random_band_limited_symbol(self.x, self.k, 0.6, &mut rng);
            let na = amalgam_norm(a.as_field(), &self.alg_space);
            let nf = self.raw_mod_norm(&f)?;
            if na == 0.0 || nf == 0.0 {
                continue;
            }
            let nprod = self.raw_mod_norm(&twisted_convolve(&a, &f)?)?;
            c = c.max(nprod / (na * nf));
        }
        Ok(2.0 * c)
    }

    fn raw_mod_norm(&self, f: &PhaseField) -> Result<f64> {
        schatten_norm(f, SchattenIndex::Order(self.p_schatten), QuantizationParam::Weyl)
    }

    /// Dense matrix of `u ↦ φ *_σ u` on the flattened symbol space.
    fn twisted_matrix(&self, phi: &PhaseField) -> DMatrix<C64> {
        let (nx, nk) = (self.x.len, self.k.len);
        let n = nx * nk;
        let c = (2.0 / PI).sqrt() * self.x.step * self.k.step;
        let pv = phi.values();
        let mut mat = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
        for p in 0..nx {
            let xo = self.x.coord(p);
            for q in 0..nk {
                let xio = self.k.coord(q);
                let row = p * nk + q;
                for j in 0..nx {
                    let y = self.x.coord(j);
                    let ix = (p + nx - j) % nx;
                    for kk in 0..nk {
                        let eta = self.k.coord(kk);
                        let ik = (q + nk - kk) % nk;
                        let w = crate::fft::cis(2.0 * (y * xio - xo * eta));
                        mat[(row, j * nk + kk)] = pv[ix * nk + ik] * w * c;
                    }
                }
            }
        }
        mat
    }

    pub fn axes(&self) -> (Axis, Axis) {
        (self.x, self.k)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }
}

impl FactorContext for TwistCtx {
    type AlgElem = PhaseField;
    type ModElem = PhaseField;

    fn name(&self) -> &'static str {
        "twist"
    }

    fn order(&self) -> f64 {
        self.order
    }

    fn alg_norm(&self, a: &PhaseField) -> f64 {
        self.scale * amalgam_norm(a.as_field(), &self.alg_space)
    }

    fn mod_norm(&self, f: &PhaseField) -> f64 {
        self.raw_mod_norm(f).expect("schatten norm")
    }

    fn multiply(&self, a: &PhaseField, b: &PhaseField) -> Result<PhaseField> {
        twisted_convolve(a, b)
    }

    fn act(&self, a: &PhaseField, f: &PhaseField) -> Result<PhaseField> {
        twisted_convolve(a, f)
    }

    fn unit_ladder(&self) -> &[f64] {
        &self.ladder
    }

    fn resolution_floor(&self) -> f64 {
        (4.0 * self.x.step).max(2.0 * self.k.step)
    }

    fn unit(&self, eps: f64) -> Result<PhaseField> {
        twisted_unit(self.x, self.k, eps)
    }

    fn solve_unital(&self, t: C64, phi: &PhaseField, f: &PhaseField) -> Result<PhaseField> {
        let mut mat = self.twisted_matrix(phi);
        for i in 0..mat.nrows() {
            mat[(i, i)] += t;
        }
        let rhs = DVector::from_column_slice(f.values());
        let lu = mat.lu();
        let sol = lu
            .solve(&rhs)
            .ok_or_else(|| Error::NearSingular("twisted unital solve".into()))?;
        PhaseField::new(self.x, self.k, sol.as_slice().to_vec())
    }

    fn solve_alg(&self, phi: &PhaseField, f: &PhaseField) -> Result<PhaseField> {
        let mat = self.twisted_matrix(phi);
        let rhs = DVector::from_column_slice(f.values());
        let sol = filtered_solve(&mat, &rhs, 1e-12)?;
        PhaseField::new(self.x, self.k, sol.as_slice().to_vec())
    }

    fn invert_unital(&self, u: &UnitalElement<PhaseField>) -> Result<UnitalElement<PhaseField>> {
        if u.t.norm() > 0.0 {
            let t_inv = C64::new(1.0, 0.0) / u.t;
            // (t ϱ + φ)(t' ϱ + φ') = ϱ  ⇔  (t I + L_φ) φ' = -φ/t
            let rhs_field = u.phi.scale(-t_inv);
            let phi_p = self.solve_unital(u.t, &u.phi, &rhs_field)?;
            Ok(UnitalElement { t: t_inv, phi: phi_p })
        } else {
            // pure algebra part: invert against the twisted delta
            let mut delta = PhaseField::zeros(self.x, self.k);
            let ix = self
                .x
                .index_of(0.0)
                .ok_or_else(|| Error::NearSingular("no origin on carrier".into()))?;
            let ik = self.k.index_of(0.0).unwrap();
            delta.set(
                ix,
                ik,
                C64::new((PI / 2.0).sqrt() / (self.x.step * self.k.step), 0.0),
            );
            let phi_p = self.solve_alg(&u.phi, &delta)?;
            Ok(UnitalElement {
                t: C64::new(0.0, 0.0),
                phi: phi_p,
            })
        }
    }

    fn alg_zero(&self) -> PhaseField {
        PhaseField::zeros(self.x, self.k)
    }

    fn mod_zero(&self) -> PhaseField {
        PhaseField::zeros(self.x, self.k)
    }

    fn norm_scale(&self) -> f64 {
        self.scale
    }
}

/// SVD solve dropping singular values below `tol * σ₁`.
fn filtered_solve(mat: &DMatrix<C64>, rhs: &DVector<C64>, tol: f64) -> Result<DVector<C64>> {
    let svd = mat.clone().svd(true, true);
    let u = svd
        .u
        .as_ref()
        .ok_or_else(|| Error::Numerical("svd U missing".into()))?;
    let vt = svd
        .v_t
        .as_ref()
        .ok_or_else(|| Error::Numerical("svd V missing".into()))?;
    let smax = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if smax == 0.0 {
        return Err(Error::NearSingular("zero operator".into()));
    }
    let mut y = u.adjoint() * rhs;
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s > tol * smax {
            y[i] /= C64::new(*s, 0.0);
        } else {
            y[i] = C64::new(0.0, 0.0);
        }
    }
    Ok(vt.adjoint() * y)
}

// ---------------------------------------------------------------------
// Weyl-product context
// ---------------------------------------------------------------------

/// `(s_♯^w, #)` acting on `s_p^w` by the symbol product (operator
/// composition). All algebra work happens on the operator matrices; symbols
/// travel back through the inverse kernel chain.
pub struct WeylCtx {
    grid: GridSpec,
    x: Axis,
    k: Axis,
    p_schatten: f64,
    order: f64,
    ladder: Vec<f64>,
}

impl WeylCtx {
    pub fn new(grid: GridSpec, p_schatten: f64) -> Result<Self> {
        let (x, k) = PhaseField::weyl_axes(&grid);
        if grid.points_per_axis() % 4 != 0 {
            return Err(Error::BadCarrier(
                "Weyl context needs mL divisible by 4".into(),
            ));
        }
        let order = p_schatten.min(1.0);
        let floor = (4.0 * x.step).max(2.0 * k.step);
        let ladder = build_ladder(4.0, floor);
        Ok(WeylCtx {
            grid,
            x,
            k,
            p_schatten,
            order,
            ladder,
        })
    }

    fn op(&self, a: &PhaseField) -> Result<OperatorMatrix> {
        op_matrix(a, QuantizationParam::Weyl)
    }

    pub fn axes(&self) -> (Axis, Axis) {
        (self.x, self.k)
    }
}

impl FactorContext for WeylCtx {
    type AlgElem = PhaseField;
    type ModElem = PhaseField;

    fn name(&self) -> &'static str {
        "weyl"
    }

    fn order(&self) -> f64 {
        self.order
    }

    fn alg_norm(&self, a: &PhaseField) -> f64 {
        // s_♯ norm = operator norm; exactly submultiplicative, no rescale
        self.op(a).map(|m| m.op_norm()).unwrap_or(f64::NAN)
    }

    fn mod_norm(&self, f: &PhaseField) -> f64 {
        schatten_norm(
            f,
            SchattenIndex::Order(self.p_schatten),
            QuantizationParam::Weyl,
        )
        .expect("schatten norm")
    }

    fn multiply(&self, a: &PhaseField, b: &PhaseField) -> Result<PhaseField> {
        crate::weyl::sharp_product(a, b, QuantizationParam::Weyl)
    }

    fn act(&self, a: &PhaseField, f: &PhaseField) -> Result<PhaseField> {
        self.multiply(a, f)
    }

    fn unit_ladder(&self) -> &[f64] {
        &self.ladder
    }

    fn resolution_floor(&self) -> f64 {
        (4.0 * self.x.step).max(2.0 * self.k.step)
    }

    fn unit(&self, eps: f64) -> Result<PhaseField> {
        // the symplectic image of the twisted product-Gaussian unit is the
        // #-approximate unit (it tends to the constant symbol 1)
        let tw = twisted_unit(self.x, self.k, eps)?;
        Ok(crate::twist::symplectic_ft(&tw)?.scale(C64::new((2.0 * PI).sqrt(), 0.0)))
    }

    fn solve_unital(&self, t: C64, phi: &PhaseField, f: &PhaseField) -> Result<PhaseField> {
        let mut s = self.op(phi)?;
        for i in 0..s.n() {
            s.mat[(i, i)] += t;
        }
        let rhs = self.op(f)?;
        let lu = s.mat.clone().lu();
        let sol = lu
            .solve(&rhs.mat)
            .ok_or_else(|| Error::NearSingular("weyl unital solve".into()))?;
        matrix_to_symbol(
            &OperatorMatrix {
                mat: sol,
                grid: self.grid,
            },
            QuantizationParam::Weyl,
        )
    }

    fn solve_alg(&self, phi: &PhaseField, f: &PhaseField) -> Result<PhaseField> {
        let s = self.op(phi)?;
        let rhs = self.op(f)?;
        let mut cols = Vec::with_capacity(rhs.mat.ncols());
        for j in 0..rhs.mat.ncols() {
            let col = DVector::from_column_slice(rhs.mat.column(j).as_slice());
            cols.push(filtered_solve(&s.mat, &col, 1e-12)?);
        }
        let mat = DMatrix::from_columns(&cols);
        matrix_to_symbol(
            &OperatorMatrix {
                mat,
                grid: self.grid,
            },
            QuantizationParam::Weyl,
        )
    }

    fn invert_unital(&self, u: &UnitalElement<PhaseField>) -> Result<UnitalElement<PhaseField>> {
        let mut s = self.op(&u.phi)?;
        for i in 0..s.n() {
            s.mat[(i, i)] += u.t;
        }
        let n = s.n();
        let inv = s
            .mat
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NearSingular("weyl unital inverse".into()))?;
        let t_inv = if u.t.norm() > 0.0 {
            C64::new(1.0, 0.0) / u.t
        } else {
            C64::new(0.0, 0.0)
        };
        let mut phi_mat = inv;
        for i in 0..n {
            phi_mat[(i, i)] -= t_inv;
        }
        let phi = matrix_to_symbol(
            &OperatorMatrix {
                mat: phi_mat,
                grid: self.grid,
            },
            QuantizationParam::Weyl,
        )?;
        Ok(UnitalElement { t: t_inv, phi })
    }

    fn alg_zero(&self) -> PhaseField {
        PhaseField::zeros(self.x, self.k)
    }

    fn mod_zero(&self) -> PhaseField {
        PhaseField::zeros(self.x, self.k)
    }

    fn norm_scale(&self) -> f64 {
        1.0
    }
}
