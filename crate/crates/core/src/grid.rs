//! Uniform periodic grids over the cube `[-L/2, L/2)^d`.

use crate::{Error, Result};

/// Specification of a uniform periodic grid: `d` axes, `m` samples per unit
/// length, side length `L`. The spacing is `h = 1/m` and every axis carries
/// `m*L` samples at `x_j = -L/2 + j*h`, so unit cubes `k + [0,1)^d` align
/// exactly with blocks of `m^d` samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridSpec {
    pub d: usize,
    pub m: u32,
    pub l: u32,
}

impl GridSpec {
    pub fn new(d: usize, m: u32, l: u32) -> Result<Self> {
        if d != 1 && d != 2 {
            return Err(Error::BadDimension(d));
        }
        if m < 2 {
            return Err(Error::TooCoarse(m));
        }
        if l < 2 || l % 2 != 0 {
            return Err(Error::OddSideLength(l));
        }
        Ok(GridSpec { d, m, l })
    }

    /// Grid spacing `h = 1/m`.
    pub fn h(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Samples per axis, `m*L`.
    pub fn points_per_axis(&self) -> usize {
        (self.m * self.l) as usize
    }

    /// Total number of samples `(mL)^d`.
    pub fn total_points(&self) -> usize {
        self.points_per_axis().pow(self.d as u32)
    }

    /// The spatial axis `x_j = -L/2 + j*h`.
    pub fn spatial_axis(&self) -> Axis {
        Axis {
            start: -(self.l as f64) / 2.0,
            step: self.h(),
            len: self.points_per_axis(),
        }
    }

    /// Half-spacing axis with `2mL` samples, used as symbol carrier so that
    /// midpoints of spatial sample pairs are themselves samples.
    pub fn fine_axis(&self) -> Axis {
        Axis {
            start: -(self.l as f64) / 2.0,
            step: self.h() / 2.0,
            len: 2 * self.points_per_axis(),
        }
    }
}

/// One uniform sampling axis: points `start + j*step`, `j = 0..len`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl Axis {
    pub fn coord(&self, j: usize) -> f64 {
        self.start + j as f64 * self.step
    }

    pub fn extent(&self) -> f64 {
        self.step * self.len as f64
    }

    /// Centered frequency axis dual to this one: spacing `2π/extent`,
    /// same number of points, frequencies `(k - len/2) * dk`.
    pub fn dual(&self) -> Axis {
        let dk = 2.0 * std::f64::consts::PI / self.extent();
        Axis {
            start: -dk * (self.len / 2) as f64,
            step: dk,
            len: self.len,
        }
    }

    /// Index of the coordinate `x` if it is (within tolerance) a grid point.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let t = (x - self.start) / self.step;
        let j = t.round();
        if (t - j).abs() > 1e-9 {
            return None;
        }
        let j = j as i64;
        let n = self.len as i64;
        Some(j.rem_euclid(n) as usize)
    }

    /// Wrap a coordinate into `[start, start + extent)`.
    pub fn wrap(&self, x: f64) -> f64 {
        let e = self.extent();
        let mut y = (x - self.start) % e;
        if y < 0.0 {
            y += e;
        }
        y + self.start
    }
}
