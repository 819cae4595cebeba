//! Local and global distiller Hamiltonians.
//!
//! The local distiller of a region is `sum |phi_e><phi_e| - sum |phi_f><phi_f|`
//! over the region's nearly empty and nearly filled eigenmodes. Summing its
//! translates over the ring gives a translation-invariant operator whose null
//! space holds the courier modes and whose positive/negative bands hold the
//! frozen ones.

use std::f64::consts::PI;
use std::fmt;

use faer::{c64, Mat};

use crate::gaussian::{CorrelationMatrix, Lattice};
use crate::linalg::{self, CMat};
use crate::{Error, Result};

/// Deviation from exact translation invariance tolerated in the input state.
pub const TRANSLATION_TOL: f64 = 1e-8;

/// Mode indices of `width` consecutive cells starting at `start` (mod the ring).
pub fn region_modes(lattice: Lattice, start: usize, width: usize) -> Vec<usize> {
    (0..width)
        .flat_map(|c| {
            let cell = (start + c) % lattice.cells;
            (0..lattice.orbitals).map(move |a| cell * lattice.orbitals + a)
        })
        .collect()
}

#[derive(Clone, Debug)]
pub struct LocalDistillation {
    /// Mode indices of the region in the state it was computed from.
    pub region: Vec<usize>,
    pub epsilon: f64,
    /// All occupations of the region, descending.
    pub occupations: Vec<f64>,
    /// Region-local wavefunctions of the filled modes (columns).
    pub filled_vectors: CMat,
    pub filled_occupations: Vec<f64>,
    pub empty_vectors: CMat,
    pub empty_occupations: Vec<f64>,
    /// `sum |phi_e><phi_e| - sum |phi_f><phi_f|` on the region.
    pub h_local: CMat,
}

impl LocalDistillation {
    pub fn frozen_count(&self) -> usize {
        self.filled_vectors.ncols() + self.empty_vectors.ncols()
    }

    pub fn is_trivial(&self) -> bool {
        self.frozen_count() == 0
    }
}

/// Splits the eigenmodes of the restricted state into filled (`xi > 1 - eps`),
/// empty (`xi < eps`) and the rest.
pub fn local_distill(
    c: &CorrelationMatrix,
    region: &[usize],
    epsilon: f64,
) -> Result<LocalDistillation> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::Config(format!("epsilon must lie in (0, 1/2), got {epsilon}")));
    }
    let restricted = crate::gaussian::restrict(c, region)?;
    let density = restricted.density();
    let (vals, vecs) = linalg::eigh(density.as_ref())?;
    let r = region.len();

    let filled: Vec<usize> = (0..r).rev().filter(|&i| vals[i] > 1.0 - epsilon).collect();
    let empty: Vec<usize> = (0..r).filter(|&i| vals[i] < epsilon).collect();
    let filled_vectors = linalg::select_columns(vecs.as_ref(), &filled);
    let empty_vectors = linalg::select_columns(vecs.as_ref(), &empty);

    let mut h_local = &empty_vectors * empty_vectors.adjoint();
    h_local -= &filled_vectors * filled_vectors.adjoint();

    Ok(LocalDistillation {
        region: region.to_vec(),
        epsilon,
        occupations: vals.iter().rev().map(|x| x.clamp(0.0, 1.0)).collect(),
        filled_occupations: filled.iter().map(|&i| vals[i]).collect(),
        empty_occupations: empty.iter().map(|&i| vals[i]).collect(),
        filled_vectors,
        empty_vectors,
        h_local,
    })
}

/// Translation-invariant sum of all translates of a local distiller.
#[derive(Clone, Debug)]
pub struct GlobalDistiller {
    pub lattice: Lattice,
    pub region_cells: usize,
    /// `(delta, H_delta)` with `h_{(x+delta)a,(x)b} = (H_delta)_{ab}`.
    pub blocks: Vec<(i64, CMat)>,
}

impl GlobalDistiller {
    /// `h(k_j) = sum_delta exp(-i k_j delta) H_delta`.
    pub fn bloch(&self, j: usize) -> CMat {
        let m = self.lattice.orbitals;
        let mut h = Mat::<c64>::zeros(m, m);
        for (delta, block) in &self.blocks {
            h += block * faer::Scale(linalg::root_of_unity(-(j as i64) * delta, self.lattice.cells));
        }
        linalg::hermitize(h.as_ref())
    }

    /// Dense real-space operator (block circulant).
    pub fn real_space(&self) -> CMat {
        let Lattice { cells: l, orbitals: m } = self.lattice;
        let mut h = Mat::<c64>::zeros(l * m, l * m);
        for (delta, block) in &self.blocks {
            for x in 0..l {
                let y = (x as i64 + delta).rem_euclid(l as i64) as usize;
                for a in 0..m {
                    for b in 0..m {
                        h[(y * m + a, x * m + b)] += block[(a, b)];
                    }
                }
            }
        }
        h
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|(_, b)| linalg::max_abs(b.as_ref()) == 0.0)
    }
}

/// Sums the translates of the reference-region distiller over the ring.
///
/// The local distillation must come from the region of cells `0..w` of `c`,
/// and `c` must be translation invariant.
pub fn global_distiller(c: &CorrelationMatrix, local: &LocalDistillation) -> Result<GlobalDistiller> {
    let lattice = c
        .lattice()
        .ok_or_else(|| Error::ModeSet("state carries no lattice structure".into()))?;
    let m = lattice.orbitals;
    if local.region.is_empty() || local.region.len() % m != 0 {
        return Err(Error::ModeSet("region is not a whole number of cells".into()));
    }
    let width = local.region.len() / m;
    if local.region != region_modes(lattice, 0, width) {
        return Err(Error::ModeSet("local distillation must use the reference region at cell 0".into()));
    }
    if 2 * (width - 1) >= lattice.cells {
        return Err(Error::ModeSet(format!(
            "a region of {width} cells does not fit on a ring of {} cells",
            lattice.cells
        )));
    }
    let drift = c.translation_residual();
    if drift > TRANSLATION_TOL {
        return Err(Error::TranslationInvariance(drift));
    }

    let w = width as i64;
    let blocks = (-(w - 1)..=(w - 1))
        .map(|delta| {
            let mut block = Mat::<c64>::zeros(m, m);
            for a_cell in 0..width {
                let b_cell = a_cell as i64 - delta;
                if b_cell < 0 || b_cell >= w {
                    continue;
                }
                let b_cell = b_cell as usize;
                for a in 0..m {
                    for b in 0..m {
                        block[(a, b)] += local.h_local[(a_cell * m + a, b_cell * m + b)];
                    }
                }
            }
            (delta, block)
        })
        .collect();

    Ok(GlobalDistiller {
        lattice,
        region_cells: width,
        blocks,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BandLabel {
    Filled,
    Courier,
    Empty,
}

impl fmt::Display for BandLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BandLabel::Filled => "filled",
            BandLabel::Courier => "courier",
            BandLabel::Empty => "empty",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct BandCounts {
    pub filled: usize,
    pub courier: usize,
    pub empty: usize,
}

impl BandCounts {
    pub fn total(&self) -> usize {
        self.filled + self.courier + self.empty
    }

    pub fn frozen(&self) -> usize {
        self.filled + self.empty
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum BandStatus {
    Accepted,
    /// `h_distill` vanishes: every mode is courier and the zipper is the identity.
    Trivial,
    /// Frozen and courier bands are not separated; every mode is treated as courier.
    Rejected(String),
}

#[derive(Clone, Debug)]
pub struct DistillerBands {
    pub lattice: Lattice,
    /// Per momentum index, ascending eigenvalues of `h(k)`.
    pub eigenvalues: Vec<Vec<f64>>,
    /// Per momentum index, the matching eigenvectors (columns).
    pub eigenvectors: Vec<CMat>,
    pub labels: Vec<Vec<BandLabel>>,
    /// Bands per cell used downstream; all courier unless accepted.
    pub counts: BandCounts,
    /// Smallest `|lambda|` over frozen bands (infinite without frozen bands).
    pub gap: f64,
    pub status: BandStatus,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BandRecord {
    pub k_index: usize,
    pub k: f64,
    pub band: usize,
    pub eigenvalue: f64,
    pub label: BandLabel,
}

impl DistillerBands {
    pub fn is_accepted(&self) -> bool {
        self.status == BandStatus::Accepted
    }

    /// Band indices (within each `k`) of a group; bands are sorted so each
    /// group is a contiguous range.
    pub fn group_range(&self, label: BandLabel) -> std::ops::Range<usize> {
        let c = self.counts;
        match label {
            BandLabel::Filled => 0..c.filled,
            BandLabel::Courier => c.filled..c.filled + c.courier,
            BandLabel::Empty => c.filled + c.courier..c.total(),
        }
    }

    pub fn records(&self) -> Vec<BandRecord> {
        let l = self.lattice.cells;
        let mut out = Vec::with_capacity(l * self.lattice.orbitals);
        for (j, vals) in self.eigenvalues.iter().enumerate() {
            for (band, &eigenvalue) in vals.iter().enumerate() {
                out.push(BandRecord {
                    k_index: j,
                    k: 2.0 * PI * j as f64 / l as f64,
                    band,
                    eigenvalue,
                    label: self.labels[j][band],
                });
            }
        }
        out
    }
}

/// Labels each Bloch band: courier if `|lambda| < delta_null`, filled below,
/// empty above. The step is rejected when the frozen bands come closer than
/// `gap_min` to zero or when the counts vary with `k`.
pub fn classify_bands(h: &GlobalDistiller, delta_null: f64, gap_min: f64) -> Result<DistillerBands> {
    let lattice = h.lattice;
    let m = lattice.orbitals;
    let mut eigenvalues = Vec::with_capacity(lattice.cells);
    let mut eigenvectors = Vec::with_capacity(lattice.cells);
    let mut labels = Vec::with_capacity(lattice.cells);
    let mut per_k = Vec::with_capacity(lattice.cells);
    let mut gap = f64::INFINITY;

    for j in 0..lattice.cells {
        let (vals, vecs) = linalg::eigh(h.bloch(j).as_ref())?;
        let mut counts = BandCounts::default();
        let row: Vec<BandLabel> = vals
            .iter()
            .map(|&lambda| {
                if lambda.abs() < delta_null {
                    counts.courier += 1;
                    BandLabel::Courier
                } else {
                    gap = gap.min(lambda.abs());
                    if lambda < 0.0 {
                        counts.filled += 1;
                        BandLabel::Filled
                    } else {
                        counts.empty += 1;
                        BandLabel::Empty
                    }
                }
            })
            .collect();
        per_k.push(counts);
        eigenvalues.push(vals);
        eigenvectors.push(vecs);
        labels.push(row);
    }

    let all_courier = BandCounts {
        filled: 0,
        courier: m,
        empty: 0,
    };
    let first = per_k[0];
    let (counts, status) = if per_k.iter().all(|c| *c == all_courier) {
        (all_courier, BandStatus::Trivial)
    } else if let Some((j, c)) = per_k.iter().enumerate().find(|(_, c)| **c != first) {
        (
            all_courier,
            BandStatus::Rejected(format!(
                "band counts vary with momentum: {first:?} at k index 0, {c:?} at k index {j}"
            )),
        )
    } else if gap < gap_min {
        (
            all_courier,
            BandStatus::Rejected(format!("distiller gap {gap:.3e} below {gap_min:.3e}")),
        )
    } else {
        (first, BandStatus::Accepted)
    };

    Ok(DistillerBands {
        lattice,
        eigenvalues,
        eigenvectors,
        labels,
        counts,
        gap,
        status,
    })
}
