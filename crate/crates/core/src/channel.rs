//! Multipath channel synthesis.
//!
//! A channel is a fixed set of discrete paths (angles, delay, mean power)
//! plus per-slot complex gains. Gains are independent across paths, probing
//! streams and comb subcarriers, and correlated in time through a first-order
//! Gauss-Markov recursion that is applied once per beacon slot.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::array::{beamspace_coeffs, grid_sin, nearest_grid_index, Angle, ArraySize, BeamspaceIndex};
use crate::error::{invalid_config, invalid_input, Result};
use crate::measure::Numerology;
use crate::C64;

/// Draw from `CN(0, variance)`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(s * re, s * im)
}

/// One discrete multipath component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mpc {
    /// Angle of departure at the BS.
    pub aod: Angle,
    /// Angle of arrival at the UE.
    pub aoa: Angle,
    /// Propagation delay in seconds.
    pub delay: f64,
    /// Mean power `E|ρ|²`.
    pub avg_power: f64,
}

impl Mpc {
    pub fn new(aod: Angle, aoa: Angle, delay: f64, avg_power: f64) -> Result<Self> {
        if !(avg_power > 0.0) || !avg_power.is_finite() {
            return Err(invalid_input(format!("path power must be positive, got {avg_power}")));
        }
        if !(delay >= 0.0) {
            return Err(invalid_input(format!("path delay must be non-negative, got {delay}")));
        }
        Ok(Self { aod, aoa, delay, avg_power })
    }

    /// Beamspace bin closest to this path.
    pub fn grid_bin(&self, bs: ArraySize, ue: ArraySize) -> BeamspaceIndex {
        BeamspaceIndex::new(nearest_grid_index(self.aoa, ue), nearest_grid_index(self.aod, bs))
    }
}

/// Non-empty set of paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MpcSet {
    paths: Vec<Mpc>,
}

impl MpcSet {
    pub fn new(paths: Vec<Mpc>) -> Result<Self> {
        if paths.is_empty() {
            return Err(invalid_input("a channel needs at least one path"));
        }
        Ok(Self { paths })
    }

    /// Draw `powers.len()` paths with the given mean powers.
    ///
    /// Off-grid angles are uniform in the sine domain over `[-1, 1)`;
    /// on-grid angles are uniform over the grid points. Delays are uniform in
    /// `[0, max_delay]`. Geometries where two paths fall into the same
    /// beamspace bin are redrawn.
    pub fn random<R: Rng + ?Sized>(
        powers: &[f64],
        on_grid: bool,
        bs: ArraySize,
        ue: ArraySize,
        max_delay: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if powers.is_empty() {
            return Err(invalid_config("path power list is empty"));
        }
        if powers.len() > bs.get() * ue.get() {
            return Err(invalid_config("more paths than beamspace bins"));
        }
        loop {
            let mut paths = Vec::with_capacity(powers.len());
            for &p in powers {
                let (aod, aoa) = if on_grid {
                    let c = rng.random_range(0..bs.get());
                    let r = rng.random_range(0..ue.get());
                    (Angle::from_sin(grid_sin(bs, c))?, Angle::from_sin(grid_sin(ue, r))?)
                } else {
                    (
                        Angle::from_sin(rng.random_range(-1.0..1.0))?,
                        Angle::from_sin(rng.random_range(-1.0..1.0))?,
                    )
                };
                let delay = if max_delay > 0.0 { rng.random_range(0.0..=max_delay) } else { 0.0 };
                paths.push(Mpc::new(aod, aoa, delay, p)?);
            }
            let mut bins: Vec<_> = paths.iter().map(|p| p.grid_bin(bs, ue)).collect();
            bins.sort();
            bins.dedup();
            if bins.len() == paths.len() {
                return Self::new(paths);
            }
        }
    }

    pub fn paths(&self) -> &[Mpc] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.avg_power).sum()
    }

    /// Index of the path with the largest mean power (first one on ties).
    pub fn strongest(&self) -> usize {
        let mut best = 0;
        for (l, p) in self.paths.iter().enumerate() {
            if p.avg_power > self.paths[best].avg_power {
                best = l;
            }
        }
        best
    }

    /// Beamspace bin of the strongest path: the detection target.
    pub fn ground_truth(&self, bs: ArraySize, ue: ArraySize) -> BeamspaceIndex {
        self.paths[self.strongest()].grid_bin(bs, ue)
    }

    /// Per-path beamspace coefficient pairs `(ǎ(θ_l), b̌(φ_l))`.
    pub fn beamspace(&self, bs: ArraySize, ue: ArraySize) -> Vec<(DVector<C64>, DVector<C64>)> {
        self.paths
            .iter()
            .map(|p| (beamspace_coeffs(bs, p.aod), beamspace_coeffs(ue, p.aoa)))
            .collect()
    }
}

/// Gauss-Markov time-correlation coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussMarkovParams {
    alpha: f64,
}

impl GaussMarkovParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(invalid_config(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(self) -> f64 {
        self.alpha
    }
}

/// Current-slot complex gains, one per (path, probing stream, comb subcarrier).
#[derive(Debug, Clone, PartialEq)]
pub struct FadingState {
    gains: Vec<C64>,
    variances: Vec<f64>,
    streams: usize,
    comb_size: usize,
    slot: usize,
}

impl FadingState {
    #[inline]
    fn offset(&self, path: usize, stream: usize, sub: usize) -> usize {
        (path * self.streams + stream) * self.comb_size + sub
    }

    #[inline]
    pub fn gain(&self, path: usize, stream: usize, sub: usize) -> C64 {
        self.gains[self.offset(path, stream, sub)]
    }

    pub fn gains(&self) -> &[C64] {
        &self.gains
    }

    pub fn paths(&self) -> usize {
        self.variances.len()
    }

    pub fn streams(&self) -> usize {
        self.streams
    }

    pub fn comb_size(&self) -> usize {
        self.comb_size
    }

    pub fn slot(&self) -> usize {
        self.slot
    }

    /// Advance one slot in place; see [`evolve`].
    pub fn step<R: Rng + ?Sized>(&mut self, params: GaussMarkovParams, rng: &mut R) {
        let a = params.alpha();
        if a < 1.0 {
            let b = (1.0 - a * a).sqrt();
            let per_path = self.streams * self.comb_size;
            for (idx, g) in self.gains.iter_mut().enumerate() {
                let var = self.variances[idx / per_path];
                *g = *g * a + complex_gaussian(rng, var) * b;
            }
        }
        self.slot += 1;
    }
}

/// Draw independent slot-0 gains `ρ ~ CN(0, γ_l)`.
pub fn init_fading<R: Rng + ?Sized>(
    mpcs: &MpcSet,
    streams: usize,
    comb_size: usize,
    rng: &mut R,
) -> Result<FadingState> {
    if streams == 0 || comb_size == 0 {
        return Err(invalid_input("fading needs at least one stream and one subcarrier"));
    }
    let variances: Vec<f64> = mpcs.paths().iter().map(|p| p.avg_power).collect();
    let mut gains = Vec::with_capacity(variances.len() * streams * comb_size);
    for &v in &variances {
        for _ in 0..streams * comb_size {
            gains.push(complex_gaussian(rng, v));
        }
    }
    Ok(FadingState { gains, variances, streams, comb_size, slot: 0 })
}

/// `ρ_s = α ρ_{s-1} + √(1-α²) ν_s` with fresh `ν_s ~ CN(0, γ_l)` per entry.
pub fn evolve<R: Rng + ?Sized>(
    mut state: FadingState,
    params: GaussMarkovParams,
    rng: &mut R,
) -> FadingState {
    state.step(params, rng);
    state
}

/// `N × M` beamspace channel `Σ_l ρ e^{-j2πωτ_l/t₀} b̌(φ_l) ǎ(θ_l)^H` at one comb subcarrier.
pub fn beamspace_channel(
    state: &FadingState,
    mpcs: &MpcSet,
    stream: usize,
    sub: usize,
    numerology: &Numerology,
    bs: ArraySize,
    ue: ArraySize,
) -> Result<DMatrix<C64>> {
    if stream >= state.streams || sub >= state.comb_size {
        return Err(invalid_input("stream or subcarrier outside the comb"));
    }
    if state.paths() != mpcs.len() {
        return Err(invalid_input("fading state and path set disagree on path count"));
    }
    let omega = numerology.comb_subcarrier(stream, sub) as f64;
    let t0 = numerology.symbol_duration();
    let mut h = DMatrix::<C64>::zeros(ue.get(), bs.get());
    for (l, (p, (a, b))) in mpcs.paths().iter().zip(mpcs.beamspace(bs, ue)).enumerate() {
        let phase = C64::from_polar(1.0, -2.0 * PI * omega / t0 * p.delay);
        let coef = state.gain(l, stream, sub) * phase;
        h += (b * a.adjoint()) * coef;
    }
    Ok(h)
}

/// `Γ̌ = E|Ȟ_{r,c}|²` as an `N × M` matrix.
pub fn second_moment_matrix(mpcs: &MpcSet, bs: ArraySize, ue: ArraySize) -> DMatrix<f64> {
    let mut g = DMatrix::<f64>::zeros(ue.get(), bs.get());
    for (p, (a, b)) in mpcs.paths().iter().zip(mpcs.beamspace(bs, ue)) {
        for c in 0..bs.get() {
            let ac = a[c].norm_sqr();
            for r in 0..ue.get() {
                g[(r, c)] += p.avg_power * b[r].norm_sqr() * ac;
            }
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{array_response, dft_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn size(n: usize) -> ArraySize {
        ArraySize::new(n).unwrap()
    }

    fn one_path(aod_sin: f64, aoa_sin: f64, power: f64) -> MpcSet {
        MpcSet::new(vec![Mpc::new(
            Angle::from_sin(aod_sin).unwrap(),
            Angle::from_sin(aoa_sin).unwrap(),
            0.0,
            power,
        )
        .unwrap()])
        .unwrap()
    }

    #[test]
    fn mpc_rejects_bad_power() {
        let a = Angle::from_sin(0.0).unwrap();
        assert!(Mpc::new(a, a, 0.0, 0.0).is_err());
        assert!(Mpc::new(a, a, -1.0, 1.0).is_err());
        assert!(MpcSet::new(vec![]).is_err());
    }

    #[test]
    fn alpha_range_checked() {
        assert!(GaussMarkovParams::new(-0.1).is_err());
        assert!(GaussMarkovParams::new(1.1).is_err());
        assert!(GaussMarkovParams::new(0.5).is_ok());
    }

    #[test]
    fn init_second_moment() {
        let mpcs = one_path(0.1, 0.2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let st = init_fading(&mpcs, 10, 10_000, &mut rng).unwrap();
        let m = st.gains().iter().map(|g| g.norm_sqr()).sum::<f64>() / st.gains().len() as f64;
        assert!((m - 1.0).abs() < 0.02, "mean |rho|^2 = {m}");
        assert_eq!(st.slot(), 0);
    }

    #[test]
    fn init_is_deterministic() {
        let mpcs = one_path(0.1, 0.2, 1.0);
        let a = init_fading(&mpcs, 3, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = init_fading(&mpcs, 3, 3, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert!(init_fading(&mpcs, 0, 3, &mut ChaCha8Rng::seed_from_u64(9)).is_err());
    }

    #[test]
    fn alpha_one_freezes_gains() {
        let mpcs = one_path(0.1, 0.2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let st = init_fading(&mpcs, 2, 3, &mut rng).unwrap();
        let next = evolve(st.clone(), GaussMarkovParams::new(1.0).unwrap(), &mut rng);
        assert_eq!(next.gains(), st.gains());
        assert_eq!(next.slot(), 1);
    }

    fn lag_one_correlation(alpha: f64, chains: usize, seed: u64) -> f64 {
        let mpcs = one_path(0.1, 0.2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let st = init_fading(&mpcs, 1, chains, &mut rng).unwrap();
        let next = evolve(st.clone(), GaussMarkovParams::new(alpha).unwrap(), &mut rng);
        let cross: C64 = st.gains().iter().zip(next.gains()).map(|(a, b)| b * a.conj()).sum();
        let p0: f64 = st.gains().iter().map(|g| g.norm_sqr()).sum();
        let p1: f64 = next.gains().iter().map(|g| g.norm_sqr()).sum();
        cross.re / (p0 * p1).sqrt()
    }

    #[test]
    fn alpha_zero_decorrelates() {
        assert!(lag_one_correlation(0.0, 10_000, 3).abs() < 0.05);
    }

    #[test]
    fn alpha_half_autocorrelation() {
        let r = lag_one_correlation(0.5, 100_000, 4);
        assert!((r - 0.5).abs() < 0.03, "r = {r}");
    }

    #[test]
    fn evolution_preserves_variance() {
        let mpcs = one_path(0.1, 0.2, 2.5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut st = init_fading(&mpcs, 1, 20_000, &mut rng).unwrap();
        let p = GaussMarkovParams::new(0.8).unwrap();
        for _ in 0..10 {
            st.step(p, &mut rng);
        }
        let m = st.gains().iter().map(|g| g.norm_sqr()).sum::<f64>() / st.gains().len() as f64;
        assert!((m - 2.5).abs() < 0.1, "{m}");
        assert_eq!(st.slot(), 10);
    }

    #[test]
    fn distinct_subcarriers_uncorrelated() {
        let mpcs = one_path(0.1, 0.2, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let trials = 20_000;
        let mut cross = C64::new(0.0, 0.0);
        for _ in 0..trials {
            let st = init_fading(&mpcs, 1, 2, &mut rng).unwrap();
            cross += st.gain(0, 0, 0) * st.gain(0, 0, 1).conj();
        }
        assert!((cross / trials as f64).norm() < 0.03);
    }

    fn numerology() -> Numerology {
        Numerology::paper()
    }

    #[test]
    fn on_grid_channel_single_entry() {
        let (bs, ue) = (size(8), size(4));
        // AoD on grid point 5, AoA on grid point 1.
        let mpcs = one_path(grid_sin(bs, 5), grid_sin(ue, 1), 1.0);
        let st = FadingState {
            gains: vec![C64::new(1.0, 0.0)],
            variances: vec![1.0],
            streams: 1,
            comb_size: 1,
            slot: 0,
        };
        let h = beamspace_channel(&st, &mpcs, 0, 0, &numerology(), bs, ue).unwrap();
        for r in 0..4 {
            for c in 0..8 {
                let want = if (r, c) == (1, 5) { 32f64.sqrt() } else { 0.0 };
                assert!((h[(r, c)].norm() - want).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn two_disjoint_paths_no_cross_terms() {
        let (bs, ue) = (size(8), size(8));
        let mpcs = MpcSet::new(vec![
            Mpc::new(Angle::from_sin(grid_sin(bs, 1)).unwrap(), Angle::from_sin(grid_sin(ue, 2)).unwrap(), 0.0, 0.5)
                .unwrap(),
            Mpc::new(Angle::from_sin(grid_sin(bs, 6)).unwrap(), Angle::from_sin(grid_sin(ue, 3)).unwrap(), 0.0, 0.5)
                .unwrap(),
        ])
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let st = init_fading(&mpcs, 1, 1, &mut rng).unwrap();
        let h = beamspace_channel(&st, &mpcs, 0, 0, &numerology(), bs, ue).unwrap();
        let nonzero = h.iter().filter(|z| z.norm() > 1e-9).count();
        assert_eq!(nonzero, 2);
    }

    #[test]
    fn beamspace_matches_dense_transform() {
        let (bs, ue) = (size(8), size(6));
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mpcs = MpcSet::new(vec![
            Mpc::new(Angle::from_sin(0.31).unwrap(), Angle::from_sin(-0.77).unwrap(), 3e-8, 0.7).unwrap(),
            Mpc::new(Angle::from_sin(-0.12).unwrap(), Angle::from_sin(0.45).unwrap(), 1e-8, 0.3).unwrap(),
        ])
        .unwrap();
        let st = init_fading(&mpcs, 2, 3, &mut rng).unwrap();
        let num = numerology();
        let (fm, fn_) = (dft_matrix(bs), dft_matrix(ue));
        for (i, k) in [(0, 0), (1, 2)] {
            let omega = num.comb_subcarrier(i, k) as f64;
            let mut h = DMatrix::<C64>::zeros(6, 8);
            for (l, p) in mpcs.paths().iter().enumerate() {
                let ph = C64::from_polar(1.0, -2.0 * PI * omega / num.symbol_duration() * p.delay);
                h += array_response(ue, p.aoa) * array_response(bs, p.aod).adjoint() * (st.gain(l, i, k) * ph);
            }
            let dense = fn_.adjoint() * h * &fm;
            let fast = beamspace_channel(&st, &mpcs, i, k, &num, bs, ue).unwrap();
            assert!((dense - fast).iter().all(|z| z.norm() < 1e-10));
        }
    }

    #[test]
    fn second_moment_on_grid() {
        let (bs, ue) = (size(8), size(4));
        let mpcs = one_path(grid_sin(bs, 2), grid_sin(ue, 3), 1.0);
        let g = second_moment_matrix(&mpcs, bs, ue);
        assert!((g[(3, 2)] - 32.0).abs() < 1e-9);
        assert!((g.sum() - 32.0).abs() < 1e-9);
    }

    #[test]
    fn second_moment_total_energy() {
        let (bs, ue) = (size(16), size(8));
        let mpcs = MpcSet::new(vec![
            Mpc::new(Angle::from_sin(0.31).unwrap(), Angle::from_sin(-0.77).unwrap(), 0.0, 0.7).unwrap(),
            Mpc::new(Angle::from_sin(-0.12).unwrap(), Angle::from_sin(0.45).unwrap(), 0.0, 0.3).unwrap(),
        ])
        .unwrap();
        let g = second_moment_matrix(&mpcs, bs, ue);
        assert!((g.sum() - 128.0).abs() < 1e-9);
    }

    #[test]
    fn second_moment_matches_sample_moments() {
        let (bs, ue) = (size(4), size(4));
        let mpcs = one_path(0.23, -0.61, 1.0);
        let gamma = second_moment_matrix(&mpcs, bs, ue);
        let num = numerology();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let draws = 100_000;
        let mut acc = DMatrix::<f64>::zeros(4, 4);
        for _ in 0..draws {
            let st = init_fading(&mpcs, 1, 1, &mut rng).unwrap();
            let h = beamspace_channel(&st, &mpcs, 0, 0, &num, bs, ue).unwrap();
            acc += h.map(|z| z.norm_sqr());
        }
        acc /= draws as f64;
        for (s, e) in acc.iter().zip(gamma.iter()) {
            // bins carrying under 1% of the energy are checked absolutely
            let tol = 0.02 * e.max(0.16);
            assert!((s - e).abs() < tol, "sample {s} vs exact {e}");
        }
    }

    #[test]
    fn random_paths_respect_grid_flag() {
        let (bs, ue) = (size(16), size(16));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let on = MpcSet::random(&[0.6, 0.4], true, bs, ue, 0.0, &mut rng).unwrap();
        for p in on.paths() {
            let k = ((p.aod.sin() + 1.0) * 8.0).round();
            assert_eq!((p.aod.sin() + 1.0) * 8.0, k);
        }
        let off = MpcSet::random(&[1.0], false, bs, ue, 1e-7, &mut rng).unwrap();
        assert!(off.paths()[0].delay <= 1e-7);
        assert_eq!(on.strongest(), 0);
    }
}
