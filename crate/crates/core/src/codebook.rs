//! Pseudo-random probing (BS) and sensing (UE) codebooks.
//!
//! A beam is described by its beamspace support: the `κ` DFT directions it
//! energizes with equal power. The sensing matrix `B` has one binary row per
//! (slot, BS chain, UE chain) triple marking the AoA-AoD bins that the pair of
//! beams jointly covers.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::ArraySize;
use crate::error::{invalid_config, invalid_input, Result};
use crate::C64;

/// Which end of the link a codebook belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Bs,
    Ue,
}

impl Side {
    fn stream(self) -> u64 {
        match self {
            Side::Bs => 1,
            Side::Ue => 2,
        }
    }
}

/// Sorted, distinct beamspace directions in `0..dimension`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SupportSet {
    indices: Vec<usize>,
    dimension: usize,
}

impl SupportSet {
    pub fn new(mut indices: Vec<usize>, dimension: usize) -> Result<Self> {
        indices.sort_unstable();
        if indices.is_empty() {
            return Err(invalid_input("support set is empty"));
        }
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid_input("support set has repeated indices"));
        }
        if indices.last().is_some_and(|&i| i >= dimension) {
            return Err(invalid_input("support index outside the array dimension"));
        }
        Ok(Self { indices, dimension })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.indices.binary_search(&k).is_ok()
    }

    /// Beamspace weights `1_U / √κ`.
    pub fn beamspace_weights(&self) -> DVector<f64> {
        let w = 1.0 / (self.len() as f64).sqrt();
        let mut v = DVector::zeros(self.dimension);
        for &k in &self.indices {
            v[k] = w;
        }
        v
    }
}

/// Parameters that regenerate a codebook bit-for-bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodebookSpec {
    pub seed: u64,
    pub slots: usize,
    pub chains: usize,
    pub dimension: usize,
    pub spreading: usize,
    pub side: Side,
}

impl CodebookSpec {
    pub fn generate(&self) -> Result<Codebook> {
        generate_codebook(self.seed, self.slots, self.chains, self.dimension, self.spreading, self.side)
    }
}

/// Supports indexed by (slot, chain).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    side: Side,
    seed: Option<u64>,
    slots: usize,
    chains: usize,
    dimension: usize,
    spreading: usize,
    supports: Vec<SupportSet>,
}

impl Codebook {
    /// Build a codebook from explicit supports laid out slot-major.
    pub fn from_supports(
        side: Side,
        slots: usize,
        chains: usize,
        dimension: usize,
        supports: Vec<SupportSet>,
    ) -> Result<Self> {
        if slots == 0 || chains == 0 {
            return Err(invalid_config("codebook needs at least one slot and one chain"));
        }
        if supports.len() != slots * chains {
            return Err(invalid_config(format!(
                "expected {} supports, got {}",
                slots * chains,
                supports.len()
            )));
        }
        let spreading = supports[0].len();
        for s in &supports {
            if s.dimension() != dimension || s.len() != spreading {
                return Err(invalid_config("supports disagree on dimension or spreading factor"));
            }
        }
        Ok(Self { side, seed: None, slots, chains, dimension, spreading, supports })
    }

    pub fn support(&self, slot: usize, chain: usize) -> &SupportSet {
        &self.supports[slot * self.chains + chain]
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn chains(&self) -> usize {
        self.chains
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn spreading(&self) -> usize {
        self.spreading
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Codebook = serde_json::from_str(text)?;
        let mut cb = Self::from_supports(raw.side, raw.slots, raw.chains, raw.dimension, raw.supports)?;
        cb.seed = raw.seed;
        Ok(cb)
    }
}

/// Draw `κ`-subsets uniformly without replacement, i.i.d. across (slot, chain).
pub fn generate_codebook(
    seed: u64,
    slots: usize,
    chains: usize,
    dimension: usize,
    spreading: usize,
    side: Side,
) -> Result<Codebook> {
    if spreading == 0 || spreading > dimension {
        return Err(invalid_config(format!(
            "spreading factor {spreading} must lie in 1..={dimension}"
        )));
    }
    if slots == 0 || chains == 0 {
        return Err(invalid_config("codebook needs at least one slot and one chain"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(side.stream());
    let supports = (0..slots * chains)
        .map(|_| {
            let idx = sample(&mut rng, dimension, spreading).into_vec();
            SupportSet::new(idx, dimension)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Codebook { side, seed: Some(seed), slots, chains, dimension, spreading, supports })
}

/// Antenna-domain beam `F · 1_U / √κ`.
pub fn beamforming_vector(support: &SupportSet, dft: &DMatrix<C64>) -> Result<DVector<C64>> {
    if dft.nrows() != support.dimension() || dft.ncols() != support.dimension() {
        return Err(invalid_input("DFT size does not match the support dimension"));
    }
    let w = support.beamspace_weights().map(|x| C64::new(x, 0.0));
    Ok(dft * w)
}

/// Dense row `1_U ⊗ 1_V`: ones at flat bins `c·N + r` with `c ∈ U`, `r ∈ V`.
pub fn sensing_row(bs_support: &SupportSet, ue_support: &SupportSet) -> Vec<u8> {
    let n = ue_support.dimension();
    let mut row = vec![0u8; bs_support.dimension() * n];
    for &c in bs_support.indices() {
        for &r in ue_support.indices() {
            row[c * n + r] = 1;
        }
    }
    row
}

/// The binary sensing matrix, stored as the sorted column indices of each row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SensingMatrix {
    bs_size: ArraySize,
    ue_size: ArraySize,
    bs_chains: usize,
    ue_chains: usize,
    slots: usize,
    rows: Vec<Vec<usize>>,
}

impl SensingMatrix {
    /// Row of the triple (slot, BS chain, UE chain): slot outermost, UE chain innermost.
    #[inline]
    pub fn row_index(&self, slot: usize, bs_chain: usize, ue_chain: usize) -> usize {
        (slot * self.bs_chains + bs_chain) * self.ue_chains + ue_chain
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.bs_size.get() * self.ue_size.get()
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn rows_per_slot(&self) -> usize {
        self.bs_chains * self.ue_chains
    }

    pub fn ue_size(&self) -> ArraySize {
        self.ue_size
    }

    pub fn bs_size(&self) -> ArraySize {
        self.bs_size
    }

    /// Column indices of the ones in row `k`.
    pub fn row(&self, k: usize) -> &[usize] {
        &self.rows[k]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[usize]> {
        self.rows.iter().map(|r| r.as_slice())
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(self.nrows(), self.ncols());
        for (k, row) in self.rows.iter().enumerate() {
            for &c in row {
                b[(k, c)] = 1.0;
            }
        }
        b
    }
}

/// Stack the rows of the first `slots` slots.
pub fn assemble_b(bs_cb: &Codebook, ue_cb: &Codebook, slots: usize) -> Result<SensingMatrix> {
    if bs_cb.side() != Side::Bs || ue_cb.side() != Side::Ue {
        return Err(invalid_config("codebooks passed in the wrong order"));
    }
    if slots == 0 || bs_cb.slots() < slots || ue_cb.slots() < slots {
        return Err(invalid_config(format!("codebooks do not cover {slots} slots")));
    }
    let bs_size = ArraySize::new(bs_cb.dimension())?;
    let ue_size = ArraySize::new(ue_cb.dimension())?;
    let n = ue_size.get();
    let mut rows = Vec::with_capacity(slots * bs_cb.chains() * ue_cb.chains());
    for s in 0..slots {
        for i in 0..bs_cb.chains() {
            let u = bs_cb.support(s, i);
            for j in 0..ue_cb.chains() {
                let v = ue_cb.support(s, j);
                let mut row = Vec::with_capacity(u.len() * v.len());
                for &c in u.indices() {
                    for &r in v.indices() {
                        row.push(c * n + r);
                    }
                }
                rows.push(row);
            }
        }
    }
    Ok(SensingMatrix {
        bs_size,
        ue_size,
        bs_chains: bs_cb.chains(),
        ue_chains: ue_cb.chains(),
        slots,
        rows,
    })
}
