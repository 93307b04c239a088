//! Equiangular (θ, φ) grid on the 2-sphere.
//!
//! Colatitude nodes sit at cell centres, θ_i = (i + ½)Δθ, so no node lands
//! on a pole. Longitude is periodic. In axisymmetric mode there is a single
//! longitude column and every φ-derivative vanishes identically.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridMode {
    Axisymmetric,
    Full,
}

impl fmt::Display for GridMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridMode::Axisymmetric => f.write_str("axisymmetric"),
            GridMode::Full => f.write_str("full"),
        }
    }
}

impl FromStr for GridMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "axisymmetric" | "axisymmetric-1d" | "1d" => Ok(GridMode::Axisymmetric),
            "full" | "full-2d" | "2d" => Ok(GridMode::Full),
            other => Err(Error::Parse(format!("unknown grid mode '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SphereGrid {
    n_theta: usize,
    n_phi: usize,
    mode: GridMode,
}

impl SphereGrid {
    /// Axisymmetric grid with `n_theta` colatitude cells.
    pub fn axisymmetric(n_theta: usize) -> Result<Self> {
        Self::new(GridMode::Axisymmetric, n_theta, 1)
    }

    /// Full grid. `n_phi` must be even so that every node has an antipodal
    /// partner across the pole.
    pub fn full(n_theta: usize, n_phi: usize) -> Result<Self> {
        Self::new(GridMode::Full, n_theta, n_phi)
    }

    pub fn new(mode: GridMode, n_theta: usize, n_phi: usize) -> Result<Self> {
        if n_theta < 4 {
            return Err(Error::Parameter(format!(
                "n_theta must be at least 4, got {n_theta}"
            )));
        }
        match mode {
            GridMode::Axisymmetric if n_phi != 1 => Err(Error::Parameter(format!(
                "axisymmetric grids have n_phi = 1, got {n_phi}"
            ))),
            GridMode::Full if n_phi < 4 || n_phi % 2 != 0 => Err(Error::Parameter(format!(
                "full grids need an even n_phi >= 4, got {n_phi}"
            ))),
            _ => Ok(Self {
                n_theta,
                n_phi,
                mode,
            }),
        }
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn mode(&self) -> GridMode {
        self.mode
    }

    pub fn is_axisymmetric(&self) -> bool {
        self.mode == GridMode::Axisymmetric
    }

    pub fn len(&self) -> usize {
        self.n_theta * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn d_theta(&self) -> f64 {
        PI / self.n_theta as f64
    }

    /// Longitude spacing. The axisymmetric column represents the whole
    /// circle, so its "spacing" is 2π (used by quadrature).
    pub fn d_phi(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    pub fn theta(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.d_theta()
    }

    pub fn phi(&self, j: usize) -> f64 {
        j as f64 * self.d_phi()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n_phi + j
    }

    #[inline]
    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node / self.n_phi, node % self.n_phi)
    }

    /// Node coordinates (θ, φ) in storage order.
    pub fn coordinates(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        (0..self.len()).map(move |n| {
            let (i, j) = self.ij(n);
            (self.theta(i), self.phi(j))
        })
    }

    #[inline]
    pub(crate) fn wrap_phi(&self, j: isize) -> usize {
        j.rem_euclid(self.n_phi as isize) as usize
    }

    /// Storage index of the node that plays the role of ring `i` (which may
    /// be -1 or n_theta) in longitude column `j`, reflecting across the pole
    /// when needed. The flag is true when the reflection flipped the
    /// orientation of ∂_θ.
    #[inline]
    pub(crate) fn ghost(&self, i: isize, j: usize) -> (usize, bool) {
        let half = self.n_phi / 2;
        if i < 0 {
            let ii = (-i - 1) as usize;
            (self.index(ii, (j + half) % self.n_phi), true)
        } else if i as usize >= self.n_theta {
            let ii = 2 * self.n_theta - 1 - i as usize;
            (self.index(ii, (j + half) % self.n_phi), true)
        } else {
            (self.index(i as usize, j), false)
        }
    }
}
