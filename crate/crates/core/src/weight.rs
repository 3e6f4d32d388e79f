//! Moderate weights `ω` with submultiplicative companions `v`.
//!
//! Supported families: constants, polynomial weights `⟨x⟩^s = (1+|x|²)^{s/2}`
//! and exponential weights `e^{s|x|}`. Each weight knows its companion and
//! the cube constant `c_v = sup_{x∈Q} max(v(x), 1)`, `Q = [0,1]^d`.

use crate::grid::Axis;
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightKind {
    Constant(f64),
    /// `⟨x⟩^s`
    Polynomial(f64),
    /// `e^{s|x|}`
    Exponential(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    pub kind: WeightKind,
}

fn bracket(x: &[f64]) -> f64 {
    (1.0 + x.iter().map(|t| t * t).sum::<f64>()).sqrt()
}

fn radius(x: &[f64]) -> f64 {
    x.iter().map(|t| t * t).sum::<f64>().sqrt()
}

impl Weight {
    pub fn constant(c: f64) -> Self {
        assert!(c > 0.0, "weights are positive");
        Weight {
            kind: WeightKind::Constant(c),
        }
    }

    pub fn polynomial(s: f64) -> Self {
        Weight {
            kind: WeightKind::Polynomial(s),
        }
    }

    pub fn exponential(s: f64) -> Self {
        Weight {
            kind: WeightKind::Exponential(s),
        }
    }

    /// Parse `"1"`, `"const:2"`, `"poly:1.5"`, `"exp:0.5"`.
    pub fn parse(s: &str) -> Option<Self> {
        if let Ok(c) = s.parse::<f64>() {
            return (c > 0.0).then(|| Weight::constant(c));
        }
        let (kind, arg) = s.split_once(':')?;
        let a: f64 = arg.parse().ok()?;
        match kind {
            "const" => (a > 0.0).then(|| Weight::constant(a)),
            "poly" => Some(Weight::polynomial(a)),
            "exp" => Some(Weight::exponential(a)),
            _ => None,
        }
    }

    pub fn omega(&self, x: &[f64]) -> f64 {
        match self.kind {
            WeightKind::Constant(c) => c,
            WeightKind::Polynomial(s) => bracket(x).powf(s),
            WeightKind::Exponential(s) => (s * radius(x)).exp(),
        }
    }

    /// Submultiplicative companion: `1` for constants, `⟨x⟩^{|s|}` and
    /// `e^{|s||x|}` for the other families.
    pub fn v(&self, x: &[f64]) -> f64 {
        match self.kind {
            WeightKind::Constant(_) => 1.0,
            WeightKind::Polynomial(s) => bracket(x).powf(s.abs()),
            WeightKind::Exponential(s) => (s.abs() * radius(x)).exp(),
        }
    }

    /// `c_v = sup_{x ∈ [0,1]^d} max(v(x), 1)`, attained at the far corner.
    pub fn c_v(&self, d: usize) -> f64 {
        let corner = vec![1.0; d];
        self.v(&corner).max(1.0)
    }

    /// Empirical moderation constant: the largest `ω(x+y)/(ω(x) v(y))` over
    /// random sampled pairs, with periodic wrap on `axis`.
    pub fn measured_moderation(
        &self,
        axis: &Axis,
        d: usize,
        pairs: usize,
        rng: &mut impl Rng,
    ) -> f64 {
        let mut c: f64 = 1.0;
        for _ in 0..pairs {
            let x: Vec<f64> = (0..d).map(|_| axis.coord(rng.gen_range(0..axis.len))).collect();
            let y: Vec<f64> = (0..d).map(|_| axis.coord(rng.gen_range(0..axis.len))).collect();
            let s: Vec<f64> = x
                .iter()
                .zip(&y)
                .map(|(a, b)| axis.wrap(a + b))
                .collect();
            let ratio = self.omega(&s) / (self.omega(&x) * self.v(&y));
            c = c.max(ratio);
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn c_v_values() {
        assert_eq!(Weight::constant(1.0).c_v(1), 1.0);
        // ⟨1⟩ = √2, so c_v = 2^{s/2} in d = 1
        let w = Weight::polynomial(2.0);
        assert!((w.c_v(1) - 2.0).abs() < 1e-12);
        // corner (1,1): ⟨(1,1)⟩ = √3
        assert!((w.c_v(2) - 3.0).abs() < 1e-12);
        let e = Weight::exponential(0.5);
        assert!((e.c_v(1) - (0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn companion_is_even_and_bounded_below() {
        let w = Weight::polynomial(-1.5);
        for t in [-3.0, -1.0, 0.5, 2.0] {
            assert!((w.v(&[t]) - w.v(&[-t])).abs() < 1e-15);
            assert!(w.v(&[t]) >= 1.0);
        }
    }

    #[test]
    fn parse_specs() {
        assert_eq!(Weight::parse("1").unwrap(), Weight::constant(1.0));
        assert_eq!(Weight::parse("poly:2").unwrap(), Weight::polynomial(2.0));
        assert_eq!(Weight::parse("exp:0.3").unwrap(), Weight::exponential(0.3));
        assert!(Weight::parse("junk").is_none());
    }
}
