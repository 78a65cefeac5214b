//! Uniform linear array geometry and the DFT beamspace.
//!
//! All indices are zero-based in code. Grid point `k` of an array with `M`
//! elements sits at `sin θ = 2k/M - 1`, so index 0 is endfire at `-π/2` and
//! the grid never contains `+π/2` (it aliases onto index 0).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{invalid_input, Result};
use crate::C64;

/// Below this value of `|sin(πψ)|` the Dirichlet kernel is evaluated at its limit.
const KERNEL_SINGULARITY: f64 = 1e-9;

/// Number of elements of a ULA (`M` at the BS, `N` at the UE).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct ArraySize(usize);

impl ArraySize {
    pub fn new(count: usize) -> Result<Self> {
        if count == 0 {
            return Err(invalid_input("array size must be at least 1"));
        }
        Ok(Self(count))
    }

    #[inline]
    pub fn get(self) -> usize {
        self.0
    }
}

impl TryFrom<usize> for ArraySize {
    type Error = crate::Error;
    fn try_from(value: usize) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ArraySize> for usize {
    fn from(value: ArraySize) -> Self {
        value.0
    }
}

/// A steering angle in `[-π/2, π/2]`.
///
/// The sine is kept alongside the radians so that grid angles built from
/// their sine stay exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Angle {
    radians: f64,
    #[serde(skip)]
    sin: f64,
}

impl Angle {
    pub fn from_radians(radians: f64) -> Result<Self> {
        if !(-PI / 2.0..=PI / 2.0).contains(&radians) {
            return Err(invalid_input(format!("angle {radians} outside [-pi/2, pi/2]")));
        }
        Ok(Self { radians, sin: radians.sin() })
    }

    pub fn from_sin(sin: f64) -> Result<Self> {
        if !(-1.0..=1.0).contains(&sin) {
            return Err(invalid_input(format!("sine {sin} outside [-1, 1]")));
        }
        Ok(Self { radians: sin.asin(), sin })
    }

    #[inline]
    pub fn radians(self) -> f64 {
        self.radians
    }

    #[inline]
    pub fn sin(self) -> f64 {
        self.sin
    }
}

/// The discrete beamspace grid of one array.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    size: ArraySize,
    angles: Vec<Angle>,
}

impl AngleGrid {
    pub fn size(&self) -> ArraySize {
        self.size
    }

    pub fn angles(&self) -> &[Angle] {
        &self.angles
    }

    pub fn sines(&self) -> impl Iterator<Item = f64> + '_ {
        self.angles.iter().map(|a| a.sin())
    }
}

/// Position of a beamspace bin in the `N × M` channel matrix.
///
/// `row` is the AoA bin at the UE, `col` the AoD bin at the BS. The flat
/// index follows column-major vectorization: `col * N + row`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BeamspaceIndex {
    pub row: usize,
    pub col: usize,
}

impl BeamspaceIndex {
    pub fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    #[inline]
    pub fn flatten(self, ue_size: ArraySize) -> usize {
        self.col * ue_size.get() + self.row
    }

    #[inline]
    pub fn from_flat(flat: usize, ue_size: ArraySize) -> Self {
        let n = ue_size.get();
        Self { row: flat % n, col: flat / n }
    }
}

/// `[a(θ)]_k = exp(j k π sin θ)` for `k = 0..M`.
pub fn array_response(size: ArraySize, angle: Angle) -> DVector<C64> {
    let s = angle.sin();
    DVector::from_iterator(
        size.get(),
        (0..size.get()).map(|k| C64::from_polar(1.0, k as f64 * PI * s)),
    )
}

/// The unitary DFT basis whose columns are the normalized grid responses.
pub fn dft_matrix(size: ArraySize) -> DMatrix<C64> {
    let m = size.get();
    let scale = 1.0 / (m as f64).sqrt();
    DMatrix::from_fn(m, m, |k, kp| {
        let phase = 2.0 * PI * k as f64 * (kp as f64 / m as f64 - 0.5);
        C64::from_polar(scale, phase)
    })
}

pub fn grid_angles(size: ArraySize) -> AngleGrid {
    let m = size.get();
    let angles = (0..m)
        .map(|k| Angle::from_sin(grid_sin(size, k)).expect("grid sines lie in [-1, 1)"))
        .collect();
    AngleGrid { size, angles }
}

/// Sine of grid point `k`.
#[inline]
pub fn grid_sin(size: ArraySize, k: usize) -> f64 {
    2.0 * k as f64 / size.get() as f64 - 1.0
}

/// Beamspace coefficients `F^H a(θ)` evaluated through the Dirichlet kernel.
///
/// Entry `m'` equals `sin(πψM) / (√M sin(πψ)) · exp(-jπψ(M-1))` with
/// `ψ = m'/M - sin(θ)/2 - 1/2`; at integer `ψ` the limit `√M` is used.
pub fn beamspace_coeffs(size: ArraySize, angle: Angle) -> DVector<C64> {
    let m = size.get();
    let mf = m as f64;
    let root = mf.sqrt();
    let s = angle.sin();
    DVector::from_iterator(
        m,
        (0..m).map(|mp| {
            let psi = mp as f64 / mf - 0.5 * s - 0.5;
            let den = (PI * psi).sin();
            if den.abs() < KERNEL_SINGULARITY {
                // Removable singularity: every term of the geometric sum is 1.
                C64::new(root, 0.0)
            } else {
                let mag = (PI * psi * mf).sin() / (root * den);
                C64::from_polar(mag, -PI * psi * (mf - 1.0))
            }
        }),
    )
}

/// Grid index whose sine is closest to `sin(angle)`.
///
/// Distances are measured on the circle of period 2 in the sine domain,
/// matching the periodicity of the beamspace kernel, so `sin θ` close to
/// `+1` maps to index 0. Ties resolve to the smaller index.
pub fn nearest_grid_index(angle: Angle, size: ArraySize) -> usize {
    let s = angle.sin();
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for k in 0..size.get() {
        let d = (grid_sin(size, k) - s).abs().rem_euclid(2.0);
        let d = d.min(2.0 - d);
        if d < best_dist {
            best_dist = d;
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn size(n: usize) -> ArraySize {
        ArraySize::new(n).unwrap()
    }

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn array_size_rejects_zero() {
        assert!(ArraySize::new(0).is_err());
        assert_eq!(size(3).get(), 3);
    }

    #[test]
    fn angle_bounds() {
        assert!(Angle::from_radians(2.0).is_err());
        assert!(Angle::from_sin(1.0001).is_err());
        assert!(Angle::from_radians(PI / 2.0).is_ok());
    }

    #[test]
    fn broadside_response_is_all_ones() {
        let a = array_response(size(4), Angle::from_radians(0.0).unwrap());
        for z in a.iter() {
            assert!(close(*z, C64::new(1.0, 0.0), 1e-15));
        }
    }

    #[test]
    fn endfire_response_alternates() {
        let a = array_response(size(2), Angle::from_radians(PI / 2.0).unwrap());
        assert!(close(a[0], C64::new(1.0, 0.0), 1e-15));
        assert!(close(a[1], C64::new(-1.0, 0.0), 1e-12));
    }

    #[test]
    fn response_matches_scalar_evaluation() {
        let theta = 0.3_f64;
        let a = array_response(size(8), Angle::from_radians(theta).unwrap());
        for k in 0..8 {
            let ph = k as f64 * PI * theta.sin();
            assert!(close(a[k], C64::new(ph.cos(), ph.sin()), 1e-13));
        }
    }

    #[test]
    fn dft_size_one() {
        let f = dft_matrix(size(1));
        assert!(close(f[(0, 0)], C64::new(1.0, 0.0), 1e-15));
    }

    #[test]
    fn dft_is_unitary() {
        for m in [2usize, 4, 7, 16, 32, 64] {
            let f = dft_matrix(size(m));
            let g = f.adjoint() * &f;
            for i in 0..m {
                for j in 0..m {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(close(g[(i, j)], C64::new(want, 0.0), 1e-12), "m={m}");
                }
            }
        }
    }

    #[test]
    fn dft_columns_are_grid_responses() {
        let sz = size(8);
        let f = dft_matrix(sz);
        let grid = grid_angles(sz);
        for (kp, ang) in grid.angles().iter().enumerate() {
            let a = array_response(sz, *ang) / C64::new(8f64.sqrt(), 0.0);
            for k in 0..8 {
                assert!(close(f[(k, kp)], a[k], 1e-12));
            }
        }
    }

    #[test]
    fn grid_small_sizes() {
        let g2: Vec<f64> = grid_angles(size(2)).sines().collect();
        assert_eq!(g2, vec![-1.0, 0.0]);
        let g4: Vec<f64> = grid_angles(size(4)).sines().collect();
        assert_eq!(g4, vec![-1.0, -0.5, 0.0, 0.5]);
    }

    #[test]
    fn grid_is_strictly_increasing() {
        let g = grid_angles(size(32));
        assert_eq!(g.angles().len(), 32);
        for w in g.angles().windows(2) {
            assert!(w[0].radians() < w[1].radians());
        }
        for (k, s) in g.sines().enumerate() {
            assert_eq!((1.0 + s) / 2.0, k as f64 / 32.0);
        }
    }

    #[test]
    fn on_grid_coefficients_are_one_hot() {
        let sz = size(16);
        for (k, ang) in grid_angles(sz).angles().iter().enumerate() {
            let c = beamspace_coeffs(sz, *ang);
            for (i, z) in c.iter().enumerate() {
                let want = if i == k { 4.0 } else { 0.0 };
                assert!((z.norm() - want).abs() < 1e-10, "k={k} i={i} |z|={}", z.norm());
            }
        }
    }

    #[test]
    fn kernel_magnitude_at_eighth_offset() {
        // psi = 1/4 - s/2 - 1/2 = 1/8 at index 1 when s = -3/4.
        let sz = size(4);
        let c = beamspace_coeffs(sz, Angle::from_sin(-0.75).unwrap());
        let want = 0.5 * ((PI / 2.0).sin() / (PI / 8.0).sin()).abs();
        assert!((c[1].norm() - want).abs() < 1e-12);
        assert!((want - 1.306_562_964_876_376_6).abs() < 1e-12);
    }

    #[test]
    fn coefficients_match_dense_transform() {
        let sz = size(12);
        let f = dft_matrix(sz);
        for s in [-0.93, -0.41, 0.0, 0.137, 0.5, 0.99] {
            let ang = Angle::from_sin(s).unwrap();
            let dense = f.adjoint() * array_response(sz, ang);
            let fast = beamspace_coeffs(sz, ang);
            for i in 0..12 {
                assert!(close(dense[i], fast[i], 1e-10));
            }
        }
    }

    #[test]
    fn nearest_index_examples() {
        assert_eq!(nearest_grid_index(Angle::from_radians(0.0).unwrap(), size(4)), 2);
        assert_eq!(nearest_grid_index(Angle::from_sin(-1.0).unwrap(), size(4)), 0);
        // brute-force scan for sin = 0.24 on 32 points
        let sz = size(32);
        let s = 0.24;
        let mut best = (f64::INFINITY, 0);
        for k in 0..32 {
            let d = (grid_sin(sz, k) - s).abs();
            if d < best.0 {
                best = (d, k);
            }
        }
        assert_eq!(nearest_grid_index(Angle::from_sin(s).unwrap(), sz), best.1);
    }

    #[test]
    fn nearest_index_wraps_near_plus_one() {
        // 0.99 is 0.01 from +1 == -1 (index 0) and 0.115 from 0.875 (index 15).
        assert_eq!(nearest_grid_index(Angle::from_sin(0.99).unwrap(), size(16)), 0);
        assert_eq!(nearest_grid_index(Angle::from_sin(0.9).unwrap(), size(16)), 15);
    }

    #[test]
    fn nearest_index_is_beamspace_peak() {
        let sz = size(16);
        for i in 0..200 {
            let s = -1.0 + 2.0 * (i as f64 + 0.37) / 200.0;
            let ang = Angle::from_sin(s).unwrap();
            let c = beamspace_coeffs(sz, ang);
            let peak = (0..16)
                .max_by(|&a, &b| c[a].norm().partial_cmp(&c[b].norm()).unwrap())
                .unwrap();
            assert_eq!(nearest_grid_index(ang, sz), peak, "s={s}");
        }
    }

    #[test]
    fn flatten_is_column_major() {
        let n = size(5);
        let idx = BeamspaceIndex::new(3, 2);
        assert_eq!(idx.flatten(n), 13);
        assert_eq!(BeamspaceIndex::from_flat(13, n), idx);
    }
}
