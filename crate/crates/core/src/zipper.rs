//! The zipper rotation, its factorization residuals, rounding of the frozen
//! blocks, and blocking of courier modes into supercells.

use faer::MatRef;

use crate::gaussian::{CorrelationMatrix, Lattice};
use crate::linalg::{self, CMat};
use crate::wannier::WannierBasis;
use crate::{c64, Error, Result};

/// Unitary with columns `(psi_f | psi_c | psi_e)`.
#[derive(Clone, Debug)]
pub struct Zipper {
    pub u: CMat,
    /// Total number of filled, courier and empty columns.
    pub sizes: GroupSizes,
    pub unitarity_residual: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GroupSizes {
    pub filled: usize,
    pub courier: usize,
    pub empty: usize,
}

impl GroupSizes {
    pub fn total(&self) -> usize {
        self.filled + self.courier + self.empty
    }

    fn courier_range(&self) -> std::ops::Range<usize> {
        self.filled..self.filled + self.courier
    }
}

impl Zipper {
    pub fn psi_filled(&self) -> MatRef<'_, c64> {
        self.u.as_ref().subcols(0, self.sizes.filled)
    }

    pub fn psi_courier(&self) -> MatRef<'_, c64> {
        self.u.as_ref().subcols(self.sizes.filled, self.sizes.courier)
    }

    pub fn psi_empty(&self) -> MatRef<'_, c64> {
        let s = self.sizes;
        self.u.as_ref().subcols(s.filled + s.courier, s.empty)
    }
}

/// Largest `|u^dag u - 1|` accepted for a zipper.
pub const ZIPPER_TOL: f64 = 1e-10;

pub fn assemble_zipper(w_f: &WannierBasis, w_c: &WannierBasis, w_e: &WannierBasis) -> Result<Zipper> {
    let n = w_c.vectors.nrows();
    if w_f.vectors.nrows() != n || w_e.vectors.nrows() != n {
        return Err(Error::Dimension("Wannier bases live in different spaces".into()));
    }
    let sizes = GroupSizes {
        filled: w_f.len(),
        courier: w_c.len(),
        empty: w_e.len(),
    };
    if sizes.total() != n {
        return Err(Error::Incomplete(format!(
            "{} + {} + {} columns for {n} modes",
            sizes.filled, sizes.courier, sizes.empty
        )));
    }
    let u = linalg::hstack(
        &[w_f.vectors.as_ref(), w_c.vectors.as_ref(), w_e.vectors.as_ref()],
        n,
    );
    let unitarity_residual = linalg::isometry_residual(u.as_ref());
    if unitarity_residual > ZIPPER_TOL {
        return Err(Error::NotUnitary(unitarity_residual));
    }
    Ok(Zipper {
        u,
        sizes,
        unitarity_residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorizationResidual {
    /// Largest entry outside the three diagonal blocks.
    pub offblock: f64,
    /// Largest deviation of the filled block from 1 and of the empty block from 0.
    pub frozen: f64,
}

pub fn factorization_residual(c_rot: &CorrelationMatrix, sizes: GroupSizes) -> Result<FactorizationResidual> {
    let n = c_rot.dim();
    if sizes.total() != n {
        return Err(Error::Dimension(format!("group sizes sum to {} for {n} modes", sizes.total())));
    }
    let group = |i: usize| {
        if i < sizes.filled {
            0
        } else if i < sizes.filled + sizes.courier {
            1
        } else {
            2
        }
    };
    let d = c_rot.data();
    let mut offblock = 0.0f64;
    let mut frozen = 0.0f64;
    for j in 0..n {
        let gj = group(j);
        for i in 0..n {
            let gi = group(i);
            let z = d[(i, j)];
            if gi != gj {
                offblock = offblock.max(z.norm());
            } else if gi == 0 {
                let target = if i == j { 1.0 } else { 0.0 };
                frozen = frozen.max((z - c64::new(target, 0.0)).norm());
            } else if gi == 2 {
                frozen = frozen.max(z.norm());
            }
        }
    }
    Ok(FactorizationResidual { offblock, frozen })
}

#[derive(Clone, Debug)]
pub struct Rounded {
    /// The renormalized state on the courier modes.
    pub courier: CorrelationMatrix,
    /// Eigenvalue range of the courier block before clipping.
    pub eigen_range: Option<(f64, f64)>,
    pub clipped: bool,
}

/// Keeps the courier block of a rotated state; the filled and empty blocks
/// are replaced by exact projectors and dropped.
///
/// The result lives on the same number of cells with `courier / cells`
/// orbitals per cell.
pub fn round_to_factorized(
    c_rot: &CorrelationMatrix,
    sizes: GroupSizes,
    abort_threshold: f64,
) -> Result<Rounded> {
    let residual = factorization_residual(c_rot, sizes)?;
    if residual.frozen > abort_threshold {
        return Err(Error::ResidualAbort {
            residual: residual.frozen,
            threshold: abort_threshold,
        });
    }
    let lattice = c_rot
        .lattice()
        .ok_or_else(|| Error::Dimension("rounding needs a lattice".into()))?;
    if sizes.courier % lattice.cells != 0 {
        return Err(Error::Dimension(format!(
            "{} courier modes on {} cells",
            sizes.courier, lattice.cells
        )));
    }
    let idx: Vec<usize> = sizes.courier_range().collect();
    let block = linalg::hermitize(linalg::principal(c_rot.density().as_ref(), &idx).as_ref());
    let values = linalg::eigvalsh(block.as_ref())?;
    let eigen_range = values.first().map(|&lo| (lo, *values.last().unwrap()));
    let clipped = values.iter().any(|&x| !(0.0..=1.0).contains(&x));
    let block = if clipped {
        linalg::hermitian_map(block.as_ref(), |x| x.clamp(0.0, 1.0))?
    } else {
        block
    };
    let courier = CorrelationMatrix::from_density(
        block,
        lattice.cells,
        sizes.courier / lattice.cells,
        c_rot.lattice_exponent(),
    );
    Ok(Rounded {
        courier,
        eigen_range,
        clipped,
    })
}

/// Merges `factor` consecutive cells into one. Entries are untouched.
pub fn block(c: &CorrelationMatrix, factor: usize) -> Result<CorrelationMatrix> {
    let lattice = c
        .lattice()
        .ok_or_else(|| Error::Dimension("blocking needs a lattice".into()))?;
    if factor == 0 || lattice.cells % factor != 0 {
        return Err(Error::Blocking {
            cells: lattice.cells,
            factor,
        });
    }
    if factor == 1 {
        return Ok(c.clone());
    }
    Ok(c.clone().relabeled(
        Lattice {
            cells: lattice.cells / factor,
            orbitals: lattice.orbitals * factor,
        },
        c.lattice_exponent() + 1,
    ))
}
