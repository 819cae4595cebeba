//! Entanglement bound for the frozen|courier cut of one renormalization step.
//!
//! The locally distilled modes of all translated regions are stacked into a
//! (generally non-orthogonal) matrix `phi`. With `s_min` its smallest nonzero
//! singular value and `eps'` the largest occupation (holes for the filled
//! group) of any column, the entropy of each frozen group is at most
//! `z * S(eps' / s_min^2) * L`, provided the argument of `S` is at most 1/2.

use faer::Mat;

use crate::distiller::{region_modes, BandLabel, LocalDistillation};
use crate::gaussian::{subspace_entropy, CorrelationMatrix, Lattice};
use crate::linalg::{self, CMat};
use crate::{c64, Error, Result};

/// Singular values below this fraction of the largest are treated as zero.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GroupBound {
    /// Average number of modes per region.
    pub z: f64,
    pub rank: usize,
    pub min_singular_sq: f64,
    /// Largest occupation (empty group) or hole occupation (filled group) of
    /// any aggregated column in the actual state.
    pub eps_tight: f64,
    /// `z S(eps_tight / min_singular_sq) L`; `None` when the ratio exceeds 1/2.
    pub bound: Option<f64>,
    /// Same with the distillation threshold in place of `eps_tight`.
    pub bound_raw: Option<f64>,
}

impl GroupBound {
    fn zero() -> Self {
        GroupBound {
            z: 0.0,
            rank: 0,
            min_singular_sq: 1.0,
            eps_tight: 0.0,
            bound: Some(0.0),
            bound_raw: Some(0.0),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundReport {
    pub cells: usize,
    pub epsilon: f64,
    pub empty: GroupBound,
    pub filled: GroupBound,
    /// `bound_e + bound_f`, when both apply.
    pub bound_total: Option<f64>,
    pub bound_total_raw: Option<f64>,
    /// Entropy of the state restricted to the span of all frozen columns.
    pub s_courier_measured: f64,
}

impl BoundReport {
    pub fn z_e(&self) -> f64 {
        self.empty.z
    }

    pub fn z_f(&self) -> f64 {
        self.filled.z
    }

    pub fn holds(&self) -> bool {
        self.bound_total
            .is_some_and(|b| self.s_courier_measured <= b * (1.0 + 1e-9) + 1e-12)
    }
}

/// Stacks the group's local modes from every translate of the region into
/// columns of an `n x (z L)` matrix, region-major.
pub fn aggregate_local_modes(local: &LocalDistillation, lattice: Lattice, group: BandLabel) -> Result<CMat> {
    let vectors = match group {
        BandLabel::Filled => &local.filled_vectors,
        BandLabel::Empty => &local.empty_vectors,
        BandLabel::Courier => {
            return Err(Error::Config("courier modes are not locally distilled".into()))
        }
    };
    let z = vectors.ncols();
    if z == 0 {
        return Err(Error::EmptyGroup(group));
    }
    if local.region.len() % lattice.orbitals != 0 {
        return Err(Error::Dimension("region is not cell aligned".into()));
    }
    let width = local.region.len() / lattice.orbitals;
    let l = lattice.cells;
    let mut phi = Mat::<c64>::zeros(lattice.modes(), z * l);
    for x in 0..l {
        let modes = region_modes(lattice, x, width);
        for col in 0..z {
            for (r, &mode) in modes.iter().enumerate() {
                phi[(mode, x * z + col)] += vectors[(r, col)];
            }
        }
    }
    Ok(phi)
}

fn group_bound(c: &CorrelationMatrix, phi: &CMat, cells: usize, epsilon: f64, holes: bool) -> Result<GroupBound> {
    let s = linalg::singular_values(phi.as_ref())?;
    let top = s.first().copied().unwrap_or(0.0);
    let kept: Vec<f64> = s.into_iter().filter(|&x| x > RANK_TOL * top).collect();
    let Some(&smallest) = kept.last() else {
        return Err(Error::Incomplete("aggregated modes have rank zero".into()));
    };
    let min_singular_sq = smallest * smallest;

    let density = c.density();
    let mut eps_tight = 0.0f64;
    for j in 0..phi.ncols() {
        let col = phi.col(j);
        let norm = col.squared_norm_l2();
        let occ = (col.adjoint() * &density * col).re / norm;
        eps_tight = eps_tight.max(if holes { 1.0 - occ } else { occ });
    }
    let z = phi.ncols() as f64 / cells as f64;
    let bound_of = |eps: f64| {
        let ratio = eps / min_singular_sq;
        (ratio <= 0.5).then(|| z * linalg::binary_entropy(ratio) * cells as f64)
    };
    Ok(GroupBound {
        z,
        rank: kept.len(),
        min_singular_sq,
        eps_tight,
        bound: bound_of(eps_tight.max(0.0)),
        bound_raw: bound_of(epsilon),
    })
}

/// Evaluates the bound for the aggregated empty and filled modes of one step
/// and measures the actual entropy of the frozen subspace.
pub fn entanglement_bound(
    c: &CorrelationMatrix,
    phi_e: Option<&CMat>,
    phi_f: Option<&CMat>,
    epsilon: f64,
) -> Result<BoundReport> {
    let cells = c
        .lattice()
        .ok_or_else(|| Error::Dimension("bound needs a lattice".into()))?
        .cells;
    let empty = match phi_e {
        Some(phi) => group_bound(c, phi, cells, epsilon, false)?,
        None => GroupBound::zero(),
    };
    let filled = match phi_f {
        Some(phi) => group_bound(c, phi, cells, epsilon, true)?,
        None => GroupBound::zero(),
    };

    let blocks: Vec<_> = [phi_e, phi_f].into_iter().flatten().map(|p| p.as_ref()).collect();
    let s_courier_measured = if blocks.is_empty() {
        0.0
    } else {
        let stacked = linalg::hstack(&blocks, c.dim());
        subspace_entropy(c, frozen_span(&stacked)?.as_ref())?
    };
    let sum = |a: Option<f64>, b: Option<f64>| Some(a? + b?);
    Ok(BoundReport {
        cells,
        epsilon,
        bound_total: sum(empty.bound, filled.bound),
        bound_total_raw: sum(empty.bound_raw, filled.bound_raw),
        empty,
        filled,
        s_courier_measured,
    })
}

/// Orthonormal basis of the column span (left singular vectors with nonzero
/// singular values).
pub fn frozen_span(phi: &CMat) -> Result<CMat> {
    let (u, s) = linalg::left_singular(phi.as_ref())?;
    let top = s.first().copied().unwrap_or(0.0);
    let rank = s.iter().filter(|&&x| x > RANK_TOL * top).count();
    Ok(u.as_ref().subcols(0, rank).to_owned())
}
