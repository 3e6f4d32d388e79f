//! Convolution, twisted convolution and the symplectic Fourier transform on
//! the two-dimensional phase plane, with the continuity constants as
//! checkable bounds.

use crate::amalgam::{amalgam_norm, AmalgamSpace};
use crate::fft;
use crate::field::SampledField;
use crate::timefreq::PhaseField;
use crate::weight::Weight;
use crate::{C64, Error, Result};
use std::f64::consts::PI;

/// Circular convolution `(f*g)(x_i) = h^d Σ_j f(x_{i-j}) g(x_j)`, via FFT.
pub fn convolve(f: &SampledField, g: &SampledField) -> Result<SampledField> {
    if !f.same_axes(g) {
        return Err(Error::GridMismatch("convolution operands".into()));
    }
    match f.dim() {
        1 => {
            let vals = fft::circular_convolve_1d(f.values(), g.values(), f.axes()[0].step);
            SampledField::new(f.axes().to_vec(), vals)
        }
        _ => {
            // 2d circular convolution through the plain 2d DFT
            let (n0, n1) = (f.axes()[0].len, f.axes()[1].len);
            let mut fa = f.values().to_vec();
            let mut ga = g.values().to_vec();
            dft2(&mut fa, n0, n1, false);
            dft2(&mut ga, n0, n1, false);
            for (a, b) in fa.iter_mut().zip(ga.iter()) {
                *a *= b;
            }
            dft2(&mut fa, n0, n1, true);
            let s = f.cell_volume() / (n0 * n1) as f64;
            fa.iter_mut().for_each(|v| *v *= s);
            SampledField::new(f.axes().to_vec(), fa)
        }
    }
}

fn dft2(vals: &mut [C64], n0: usize, n1: usize, inverse: bool) {
    let run = |data: &mut [C64]| {
        if inverse {
            fft::raw_inverse(data)
        } else {
            fft::raw_forward(data)
        }
    };
    for i in 0..n0 {
        run(&mut vals[i * n1..(i + 1) * n1]);
    }
    let mut col = vec![C64::new(0.0, 0.0); n0];
    for j in 0..n1 {
        for i in 0..n0 {
            col[i] = vals[i * n1 + j];
        }
        run(&mut col);
        for i in 0..n0 {
            vals[i * n1 + j] = col[i];
        }
    }
}

/// Ordinary convolution of two phase-plane fields with quadrature weight
/// `dx·dk`.
pub fn convolve_phase(a: &PhaseField, b: &PhaseField) -> Result<PhaseField> {
    if !a.same_axes(b) {
        return Err(Error::GridMismatch("phase convolution operands".into()));
    }
    let conv = convolve(a.as_field(), b.as_field())?;
    PhaseField::from_field(conv)
}

/// Young-type check for `WL^{1,r}_{(v)} * WL^{p,q}_{(ω)} → WL^{p,q}_{(ω)}`:
/// returns the measured left side and the bound `2^d c_v ‖f‖ ‖g‖`.
pub fn young_check(
    f: &SampledField,
    g: &SampledField,
    space_b: &AmalgamSpace,
    space_m: &AmalgamSpace,
) -> Result<(f64, f64)> {
    let d = f.dim();
    let conv = convolve(f, g)?;
    let lhs = amalgam_norm(&conv, space_m);
    let c_v = space_b.weight.c_v(d);
    let bound = 2f64.powi(d as i32)
        * c_v
        * amalgam_norm(f, space_b)
        * amalgam_norm(g, space_m);
    Ok((lhs, bound))
}

fn require_square(a: &PhaseField) -> Result<()> {
    if a.nx() != a.nk() {
        return Err(Error::IncompatibleAxes(format!(
            "square phase grid required, got {}x{}",
            a.nx(),
            a.nk()
        )));
    }
    Ok(())
}

/// Symplectic Fourier transform
/// `(F_σ a)(X) = π^{-d} ∫ a(Y) e^{2iσ(X,Y)} dY`, `σ(X,Y) = yξ - xη`,
/// by dense quadrature on the same square phase grid. On carriers where
/// `2·dx·dk·n = 2π` the transform is an exact involution.
pub fn symplectic_ft(a: &PhaseField) -> Result<PhaseField> {
    require_square(a)?;
    let (xax, kax) = (a.x_axis(), a.k_axis());
    let (nx, nk) = (a.nx(), a.nk());
    let scale = xax.step * kax.step / PI;
    // factor the separable phase: inner transform over η for each (y_j, x_p),
    // then over y against ξ
    let mut inner = vec![C64::new(0.0, 0.0); nx * nx]; // inner[j*nx + p]
    for j in 0..nx {
        for p in 0..nx {
            let x = xax.coord(p);
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..nk {
                acc += a.at(j, k) * fft::cis(-2.0 * x * kax.coord(k));
            }
            inner[j * nx + p] = acc;
        }
    }
    let mut out = PhaseField::zeros(xax, kax);
    for p in 0..nx {
        for q in 0..nk {
            let xi = kax.coord(q);
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..nx {
                acc += inner[j * nx + p] * fft::cis(2.0 * xax.coord(j) * xi);
            }
            out.set(p, q, acc * scale);
        }
    }
    Ok(out)
}

/// Twisted convolution
/// `(a *_σ b)(X) = (2/π)^{d/2} ∫ a(X-Y) b(Y) e^{2iσ(X,Y)} dY`
/// by dense quadrature with periodic index wrap; the oscillatory factor is
/// evaluated at the true grid coordinates.
pub fn twisted_convolve(a: &PhaseField, b: &PhaseField) -> Result<PhaseField> {
    if !a.same_axes(b) {
        return Err(Error::GridMismatch("twisted convolution operands".into()));
    }
    let (xax, kax) = (a.x_axis(), a.k_axis());
    let (nx, nk) = (a.nx(), a.nk());
    let scale = (2.0 / PI).powf(0.5) * xax.step * kax.step;
    let mut out = PhaseField::zeros(xax, kax);
    let av = a.values();
    let bv = b.values();
    for p in 0..nx {
        let x = xax.coord(p);
        for q in 0..nk {
            let xi = kax.coord(q);
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..nx {
                let y = xax.coord(j);
                let ix = (p + nx - j) % nx;
                let phase_y = 2.0 * y * xi;
                for k in 0..nk {
                    let eta = kax.coord(k);
                    let ik = (q + nk - k) % nk;
                    let w = fft::cis(phase_y - 2.0 * x * eta);
                    acc += av[ix * nk + ik] * bv[j * nk + k] * w;
                }
            }
            out.set(p, q, acc * scale);
        }
    }
    Ok(out)
}

/// Twisted Young-type check with the constant `4^d (π/2)^{d/2} c_v`.
pub fn twisted_young_check(
    a: &PhaseField,
    b: &PhaseField,
    r: f64,
    pq: (f64, f64),
    omega: &Weight,
    v: &Weight,
) -> Result<(f64, f64)> {
    let conv = twisted_convolve(a, b)?;
    let space_b = AmalgamSpace::new(1.0, r, *v)?;
    let space_m = AmalgamSpace::new(pq.0, pq.1, *omega)?;
    let lhs = amalgam_norm(conv.as_field(), &space_m);
    let c_v = v.c_v(2);
    let bound = 4.0
        * (PI / 2.0).sqrt()
        * c_v
        * amalgam_norm(a.as_field(), &space_b)
        * amalgam_norm(b.as_field(), &space_m);
    Ok((lhs, bound))
}

/// Product-Gaussian twisted approximate unit
/// `φ_ε(x,ξ) = (π/2)^{d/2} ψ_ε(x) ψ_ε(ξ)` with `∫ψ_ε = 1`, mass-normalized
/// on the grid.
pub fn twisted_unit(x: crate::grid::Axis, k: crate::grid::Axis, eps: f64) -> Result<PhaseField> {
    let floor = 4.0 * x.step.max(k.step);
    if eps < floor {
        return Err(Error::ResolutionLimited {
            eps,
            floor,
            best: f64::NAN,
        });
    }
    let psi = |t: f64| (-t * t / (2.0 * eps * eps)).exp();
    let mut f = PhaseField::from_fn(x, k, |a, b| C64::new(psi(a) * psi(b), 0.0));
    // normalize each factor's discrete mass to one, then apply (π/2)^{1/2}
    let mass_x: f64 = (0..x.len).map(|j| psi(x.coord(j)) * x.step).sum();
    let mass_k: f64 = (0..k.len).map(|j| psi(k.coord(j)) * k.step).sum();
    let s = (PI / 2.0).sqrt() / (mass_x * mass_k);
    f = f.scale(C64::new(s, 0.0));
    Ok(f)
}

/// Random band-limited phase-plane symbol (low-frequency Fourier data in
/// both axes with Gaussian decay).
pub fn random_band_limited_symbol(
    x: crate::grid::Axis,
    k: crate::grid::Axis,
    cutoff_frac: f64,
    rng: &mut impl rand::Rng,
) -> PhaseField {
    let (nx, nk) = (x.len, k.len);
    let mut spec = vec![C64::new(0.0, 0.0); nx * nk];
    let mut normal = || -> f64 {
        let u: f64 = rng.gen_range(f64::EPSILON..1.0f64);
        let v: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        (-2.0 * u.ln()).sqrt() * v.cos()
    };
    for i in 0..nx {
        let fi = fft::signed_freq(i, nx) as f64 / (nx as f64 / 2.0);
        for j in 0..nk {
            let fj = fft::signed_freq(j, nk) as f64 / (nk as f64 / 2.0);
            let r = (fi * fi + fj * fj).sqrt();
            if r <= cutoff_frac {
                let decay = (-(r / cutoff_frac.max(1e-12)).powi(2) * 2.0).exp();
                spec[i * nk + j] = C64::new(normal(), normal()) * decay;
            }
        }
    }
    dft2(&mut spec, nx, nk, true);
    let s = 1.0 / (nx * nk) as f64;
    spec.iter_mut().for_each(|v| *v *= s);
    PhaseField::new(x, k, spec).expect("finite by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{block_indicator, gaussian, random_field, Exponent, SampledField};
    use crate::grid::GridSpec;
    use crate::timefreq::PhaseField;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn convolve_blocks_triangle_apex() {
        // χ*χ is the unit triangle; rectangle-rule quadrature puts the apex
        // within one cell width of 1
        let g = GridSpec::new(1, 64, 8).unwrap();
        let chi = block_indicator(&g);
        let t = convolve(&chi, &chi).unwrap();
        let ax = g.spatial_axis();
        let i1 = ax.index_of(1.0).unwrap();
        assert!((t.values()[i1].re - 1.0).abs() <= g.h() + 1e-12);
    }

    #[test]
    fn convolve_delta_is_identity() {
        let g = GridSpec::new(1, 8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let f = random_field(&g, &mut rng);
        let mut delta = SampledField::zeros(vec![g.spatial_axis()]);
        let i0 = g.spatial_axis().index_of(0.0).unwrap();
        delta.values_mut()[i0] = C64::new(1.0 / g.h(), 0.0);
        let conv = convolve(&delta, &f).unwrap();
        for (a, b) in conv.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn convolve_gaussians_analytic() {
        // e^{-x²/2σ₁²} * e^{-x²/2σ₂²} = √(2π σ₁²σ₂²/(σ₁²+σ₂²)) e^{-x²/2(σ₁²+σ₂²)}
        let g = GridSpec::new(1, 8, 16).unwrap();
        let (s1, s2) = (0.6, 0.8);
        let f = gaussian(&g, s1, 1.0);
        let h = gaussian(&g, s2, 1.0);
        let conv = convolve(&f, &h).unwrap();
        let s12 = s1 * s1 + s2 * s2;
        let amp = (2.0 * PI * s1 * s1 * s2 * s2 / s12).sqrt();
        let ax = g.spatial_axis();
        for j in 0..ax.len {
            let x = ax.coord(j);
            let want = amp * (-x * x / (2.0 * s12)).exp();
            assert!(
                (conv.values()[j].re - want).abs() < 1e-8,
                "at {x}: {} vs {want}",
                conv.values()[j].re
            );
        }
    }

    #[test]
    fn convolve_commutes() {
        let g = GridSpec::new(1, 8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let f = random_field(&g, &mut rng);
        let h = random_field(&g, &mut rng);
        let a = convolve(&f, &h).unwrap();
        let b = convolve(&h, &f).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-13);
        }
    }

    #[test]
    fn young_check_no_violations() {
        let g = GridSpec::new(1, 8, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let one = Weight::constant(1.0);
        for _ in 0..50 {
            let f = random_field(&g, &mut rng);
            let h = random_field(&g, &mut rng);
            let sb = AmalgamSpace::new(1.0, 0.5, one).unwrap();
            let sm = AmalgamSpace::new(2.0, 1.0, one).unwrap();
            let (lhs, bound) = young_check(&f, &h, &sb, &sm).unwrap();
            assert!(lhs <= bound * (1.0 + 1e-12), "{lhs} > {bound}");
        }
        let z = SampledField::zeros(vec![g.spatial_axis()]);
        let f = random_field(&g, &mut rng);
        let sb = AmalgamSpace::new(1.0, 0.5, one).unwrap();
        let sm = AmalgamSpace::new(2.0, 1.0, one).unwrap();
        let (lhs, bound) = young_check(&f, &z, &sb, &sm).unwrap();
        assert_eq!((lhs, bound), (0.0, 0.0));
    }

    fn weyl_16() -> (crate::grid::Axis, crate::grid::Axis, GridSpec) {
        let g = GridSpec::new(1, 2, 4).unwrap();
        let (x, k) = PhaseField::weyl_axes(&g);
        (x, k, g)
    }

    #[test]
    fn symplectic_ft_is_involution() {
        let (x, k, _) = weyl_16();
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let a = random_band_limited_symbol(x, k, 0.6, &mut rng);
        let twice = symplectic_ft(&symplectic_ft(&a).unwrap()).unwrap();
        let num = twice.sub(&a).l2_norm();
        let den = a.l2_norm();
        assert!(num / den < 1e-12, "relative error {}", num / den);
    }

    #[test]
    fn symplectic_ft_gaussian_self_dual() {
        // e^{-|Y|²} maps to e^{-|X|²}
        let g = GridSpec::new(1, 2, 16).unwrap();
        let (x, k) = PhaseField::weyl_axes(&g);
        let a = PhaseField::from_fn(x, k, |p, q| C64::new((-(p * p + q * q)).exp(), 0.0));
        let fa = symplectic_ft(&a).unwrap();
        for i in 0..fa.nx() {
            for j in 0..fa.nk() {
                let want = (-(x.coord(i).powi(2) + k.coord(j).powi(2))).exp();
                assert!(
                    (fa.at(i, j).re - want).abs() < 1e-6 && fa.at(i, j).im.abs() < 1e-6,
                    "at ({}, {})",
                    x.coord(i),
                    k.coord(j)
                );
            }
        }
        let z = PhaseField::zeros(x, k);
        assert!(symplectic_ft(&z).unwrap().values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn symplectic_ft_unitary() {
        let (x, k, _) = weyl_16();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let a = random_band_limited_symbol(x, k, 0.8, &mut rng);
        let fa = symplectic_ft(&a).unwrap();
        assert!((fa.l2_norm() - a.l2_norm()).abs() < 1e-10 * a.l2_norm());
    }

    #[test]
    fn symplectic_ft_rejects_non_square() {
        let x = crate::grid::Axis { start: -2.0, step: 0.25, len: 16 };
        let k = crate::grid::Axis { start: -3.0, step: 0.75, len: 8 };
        let a = PhaseField::zeros(x, k);
        assert!(matches!(symplectic_ft(&a), Err(Error::IncompatibleAxes(_))));
    }

    #[test]
    fn twisted_pointwise_domination() {
        let (x, k, _) = weyl_16();
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        for _ in 0..5 {
            let a = random_band_limited_symbol(x, k, 0.9, &mut rng);
            let b = random_band_limited_symbol(x, k, 0.9, &mut rng);
            let tw = twisted_convolve(&a, &b).unwrap();
            let abs_a = PhaseField::new(x, k, a.values().iter().map(|v| C64::new(v.norm(), 0.0)).collect()).unwrap();
            let abs_b = PhaseField::new(x, k, b.values().iter().map(|v| C64::new(v.norm(), 0.0)).collect()).unwrap();
            let plain = convolve_phase(&abs_a, &abs_b).unwrap();
            let c = (PI / 2.0).sqrt();
            for (t, p) in tw.values().iter().zip(plain.values()) {
                assert!(t.norm() <= c * p.re + 1e-12);
            }
        }
        let z = PhaseField::zeros(x, k);
        let a = random_band_limited_symbol(x, k, 0.9, &mut rng);
        let tz = twisted_convolve(&a, &z).unwrap();
        assert!(tz.values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn four_twist_readings() {
        // F_σ(a *_σ b) should equal both ǎ *_σ (F_σ b) and (F_σ a) *_σ b
        let (x, k, _) = weyl_16();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let a = random_band_limited_symbol(x, k, 0.6, &mut rng);
        let b = random_band_limited_symbol(x, k, 0.6, &mut rng);
        let lhs = symplectic_ft(&twisted_convolve(&a, &b).unwrap()).unwrap();
        let read_b = twisted_convolve(&a.reflect(), &symplectic_ft(&b).unwrap()).unwrap();
        let read_a = twisted_convolve(&symplectic_ft(&a).unwrap(), &b).unwrap();
        let scale = lhs.l2_norm();
        assert!(lhs.sub(&read_b).l2_norm() / scale < 1e-6, "check reading");
        assert!(lhs.sub(&read_a).l2_norm() / scale < 1e-6, "alternate reading");
    }

    #[test]
    fn twisted_noncommutativity_witness() {
        let (x, k, _) = weyl_16();
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let a = random_band_limited_symbol(x, k, 0.7, &mut rng);
        let b = random_band_limited_symbol(x, k, 0.7, &mut rng);
        let ab = twisted_convolve(&a, &b).unwrap();
        let ba = twisted_convolve(&b, &a).unwrap();
        let gap = ab.sub(&ba).l2_norm();
        assert!(gap > 1e-6 * ab.l2_norm(), "generic pairs do not commute");
    }

    #[test]
    fn twisted_young_no_violations() {
        // integer-aligned 16x16 phase grid
        let (x, k) = PhaseField::aligned_axes(4, 4).unwrap();
        let one = Weight::constant(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        for _ in 0..10 {
            let a = random_band_limited_symbol(x, k, 0.8, &mut rng);
            let b = random_band_limited_symbol(x, k, 0.8, &mut rng);
            let (lhs, bound) =
                twisted_young_check(&a, &b, 0.5, (2.0, 1.0), &one, &one).unwrap();
            assert!(lhs <= bound * (1.0 + 1e-12), "{lhs} > {bound}");
        }
        // homogeneity: scaling b scales both sides exactly
        let a = random_band_limited_symbol(x, k, 0.8, &mut rng);
        let b = random_band_limited_symbol(x, k, 0.8, &mut rng);
        let (l1, b1) = twisted_young_check(&a, &b, 0.5, (2.0, 1.0), &one, &one).unwrap();
        let alpha = 3.0;
        let (l2, b2) = twisted_young_check(&a, &b.scale(C64::new(alpha, 0.0)), 0.5, (2.0, 1.0), &one, &one).unwrap();
        assert!((l2 - alpha * l1).abs() < 1e-10 * l2.max(1.0));
        assert!((b2 - alpha * b1).abs() < 1e-10 * b2.max(1.0));
        // zero case
        let z = PhaseField::zeros(x, k);
        let (l0, b0) = twisted_young_check(&z, &b, 0.5, (2.0, 1.0), &one, &one).unwrap();
        assert_eq!((l0, b0), (0.0, 0.0));
    }

    #[test]
    fn mollifier_ladder_decreases_in_amalgam() {
        let g = GridSpec::new(1, 32, 8).unwrap();
        let f = gaussian(&g, 1.0, 1.0);
        let space = AmalgamSpace::unweighted(2.0, 1.0).unwrap();
        let mut last = f64::INFINITY;
        for i in 0..4 {
            let eps = 1.0 / 2f64.powi(i);
            let phi = crate::amalgam::mollifier(&g, eps).unwrap();
            let err = amalgam_norm(&f.sub(&convolve(&f, &phi).unwrap()), &space);
            assert!(err < last, "not decreasing at ε={eps}: {err} vs {last}");
            last = err;
        }
    }

    #[test]
    fn twisted_unit_mass() {
        let (x, k, _) = weyl_16();
        let u = twisted_unit(x, k, 1.0).unwrap();
        let mass = u.as_field().integrate().re;
        assert!((mass - (PI / 2.0).sqrt()).abs() < 1e-12);
        assert!(matches!(
            twisted_unit(x, k, 1e-9),
            Err(Error::ResolutionLimited { .. })
        ));
    }

    #[test]
    fn twisted_unit_ladder_approximates_identity() {
        let g = GridSpec::new(1, 2, 8).unwrap();
        let (x, k) = PhaseField::weyl_axes(&g);
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let a = random_band_limited_symbol(x, k, 0.3, &mut rng);
        let mut last = f64::INFINITY;
        for i in 0..3 {
            let eps = 2.0 / 2f64.powi(i);
            let u = twisted_unit(x, k, eps).unwrap();
            let err = twisted_convolve(&u, &a).unwrap().sub(&a).l2_norm();
            assert!(err < last, "ladder not decreasing at ε={eps}");
            last = err;
        }
        assert!(last < 0.5 * a.l2_norm());
    }

    #[test]
    fn phase_grid_scaling_is_commensurate() {
        let g = GridSpec::new(1, 3, 4).unwrap();
        let (x, k) = PhaseField::weyl_axes(&g);
        assert_eq!(x.len, k.len);
        let n = x.len as f64;
        assert!((2.0 * x.step * k.step * n - 2.0 * PI).abs() < 1e-12);
    }
}
