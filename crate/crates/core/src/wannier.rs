//! Exponentially localized Wannier bases from the projected position operator.
//!
//! On a ring the position operator is replaced by its cyclic version
//! `X = diag(exp(2 pi i x / L))`; the eigenvectors of `P X P` restricted to the
//! range of a band projector `P` are the Wannier functions and the phases of
//! the eigenvalues give their centers. The restricted operator is not normal,
//! so the eigenvectors are Löwdin-orthonormalized afterwards.
//!
//! Two routes are provided. [`wannierize`] works on a dense projector.
//! [`wannierize_bloch`] uses that `P X P` only connects neighbouring momenta:
//! its eigenvectors follow from the Wilson loop of the band frames, and all of
//! them are exact lattice translates of one reference set. The RG driver uses
//! the Bloch route; the dense one serves as its cross-check.

use std::f64::consts::PI;

use faer::{c64, Mat};

use crate::distiller::{BandLabel, DistillerBands};
use crate::gaussian::Lattice;
use crate::linalg::{self, CMat};
use crate::{Error, Result};

pub type BandGroup = BandLabel;

/// Largest condition number of the overlap matrix accepted by the Löwdin step.
pub const MAX_CONDITION: f64 = 1e8;
/// Centers closer than this (in cells) are treated as tied.
const CENTER_TIE: f64 = 1e-8;
/// Cell amplitudes below this fraction of the peak are excluded from decay fits.
const FIT_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug)]
pub struct WannierBasis {
    /// Orthonormal columns, ordered by center.
    pub vectors: CMat,
    /// Center of each column in cells, in `[0, L)`.
    pub centers: Vec<f64>,
    /// Second moment of `|w|^2` about the center, in cells^2.
    pub spreads: Vec<f64>,
    /// Fitted exponential decay rate of each column (per cell); infinite for
    /// compactly supported columns.
    pub decay_rates: Vec<f64>,
    /// Condition number of the overlap matrix before orthonormalization.
    pub condition: f64,
}

impl WannierBasis {
    pub fn empty(n: usize) -> Self {
        WannierBasis {
            vectors: Mat::zeros(n, 0),
            centers: Vec::new(),
            spreads: Vec::new(),
            decay_rates: Vec::new(),
            condition: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slowest decay over all columns.
    pub fn decay_rate(&self) -> f64 {
        self.decay_rates.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_spread(&self) -> f64 {
        self.spreads.iter().copied().fold(0.0, f64::max)
    }
}

/// Bloch frames (`m x n_b` per momentum) of one band group.
pub fn group_frames(bands: &DistillerBands, group: BandGroup) -> Result<Vec<CMat>> {
    let range = bands.group_range(group);
    if range.is_empty() {
        return Err(Error::EmptyGroup(group));
    }
    let cols: Vec<usize> = range.collect();
    Ok(bands
        .eigenvectors
        .iter()
        .map(|u| linalg::select_columns(u.as_ref(), &cols))
        .collect())
}

/// Dense projector `sum_k sum_n |psi_nk><psi_nk|` onto a band group.
pub fn band_projector(bands: &DistillerBands, group: BandGroup) -> Result<CMat> {
    Ok(projector_from_frames(bands.lattice, &group_frames(bands, group)?))
}

pub fn projector_from_frames(lattice: Lattice, frames: &[CMat]) -> CMat {
    let Lattice { cells: l, orbitals: m } = lattice;
    let nb = frames.first().map_or(0, |f| f.ncols());
    let norm = 1.0 / (l as f64).sqrt();
    // columns are the Bloch states psi_{n,k}(x, a) = exp(i k x) u_a / sqrt(L)
    let bloch = Mat::<c64>::from_fn(l * m, l * nb, |row, col| {
        let (x, a) = (row / m, row % m);
        let (j, n) = (col / nb, col % nb);
        linalg::root_of_unity((j * x) as i64, l) * frames[j][(a, n)] * norm
    });
    &bloch * bloch.adjoint()
}

/// Wannierizes the range of a dense projector on a ring of `cells` cells.
///
/// `positions[i]` is the cell coordinate of mode `i`.
pub fn wannierize(p: &CMat, positions: &[f64], cells: usize) -> Result<WannierBasis> {
    let n = p.nrows();
    if p.ncols() != n || positions.len() != n {
        return Err(Error::Dimension(format!(
            "projector is {}x{}, positions has {} entries",
            p.nrows(),
            p.ncols(),
            positions.len()
        )));
    }
    let sq = p * p;
    let defect = linalg::max_abs_diff(sq.as_ref(), p.as_ref()).max(linalg::hermiticity_residual(p.as_ref()));
    if defect > 1e-8 {
        return Err(Error::NotProjector(defect));
    }
    let (vals, vecs) = linalg::eigh(p.as_ref())?;
    let range: Vec<usize> = (0..n).filter(|&i| vals[i] > 0.5).collect();
    if range.is_empty() {
        return Ok(WannierBasis::empty(n));
    }
    let q = linalg::select_columns(vecs.as_ref(), &range);

    let ring = cells as f64;
    let phases: Vec<c64> = positions
        .iter()
        .map(|&x| c64::from_polar(1.0, 2.0 * PI * x / ring))
        .collect();
    let xq = Mat::<c64>::from_fn(n, q.ncols(), |i, j| phases[i] * q[(i, j)]);
    let restricted = q.adjoint() * &xq;
    let (lambdas, y) = linalg::eig(restricted.as_ref())?;
    let mut w = &q * &y;
    normalize_columns(&mut w);

    let centers: Vec<f64> = lambdas
        .iter()
        .map(|l| (l.arg() / (2.0 * PI) * ring).rem_euclid(ring))
        .collect();
    let weight_at_center = |col: usize| -> f64 {
        let cell = (centers[col].floor() as usize) % cells;
        (0..n)
            .filter(|&i| positions[i].round() as usize % cells == cell)
            .map(|i| w[(i, col)].norm_sqr())
            .sum()
    };
    let mut order: Vec<usize> = (0..centers.len()).collect();
    order.sort_by(|&a, &b| {
        if (centers[a] - centers[b]).abs() < CENTER_TIE {
            weight_at_center(b).total_cmp(&weight_at_center(a))
        } else {
            centers[a].total_cmp(&centers[b])
        }
    });
    let w = linalg::select_columns(w.as_ref(), &order);
    let centers: Vec<f64> = order.iter().map(|&i| centers[i]).collect();

    let overlap = w.adjoint() * &w;
    let (s_inv_sqrt, condition) = linalg::inv_sqrt(overlap.as_ref())?;
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned(condition));
    }
    let mut vectors = &w * &s_inv_sqrt;

    let mut spreads = Vec::with_capacity(centers.len());
    let mut decay_rates = Vec::with_capacity(centers.len());
    for (col, &center) in centers.iter().enumerate() {
        fix_phase(&mut vectors, col, positions, center, cells);
        let (spread, decay) = localization(&vectors, col, positions, center, cells);
        spreads.push(spread);
        decay_rates.push(decay);
    }
    Ok(WannierBasis {
        vectors,
        centers,
        spreads,
        decay_rates,
        condition,
    })
}

/// Wannierizes a band group given by its Bloch frames on a translation
/// invariant lattice.
///
/// Columns come out cell-major: the `n_b` reference functions with centers
/// in `[0, 1)` (sorted by center), then their translates by one cell, etc.
pub fn wannierize_bloch(lattice: Lattice, frames: &[CMat]) -> Result<WannierBasis> {
    let Lattice { cells: l, orbitals: m } = lattice;
    let n = l * m;
    if frames.len() != l {
        return Err(Error::Dimension(format!("{} frames for {l} momenta", frames.len())));
    }
    let nb = frames[0].ncols();
    if nb == 0 {
        return Ok(WannierBasis::empty(n));
    }

    // overlaps between neighbouring momenta: A_j = U_{j+1}^dag U_j
    let links: Vec<CMat> = (0..l)
        .map(|j| frames[(j + 1) % l].adjoint() * &frames[j])
        .collect();
    let mut wilson = Mat::<c64>::identity(nb, nb);
    for a in &links {
        wilson = a * &wilson;
    }
    let (w_vals, w_vecs) = linalg::eig(wilson.as_ref())?;

    let ring = l as f64;
    let mut fractions = Vec::with_capacity(nb);
    // g[a][j]: momentum-space amplitude (m-vector) of reference function a
    let mut amplitudes: Vec<Vec<CMat>> = Vec::with_capacity(nb);
    for (a, w) in w_vals.iter().enumerate() {
        let modulus = w.norm();
        if modulus < 1e-14 {
            return Err(Error::IllConditioned(f64::INFINITY));
        }
        let theta = w.arg();
        let lambda = c64::from_polar(modulus.powf(1.0 / ring), theta / ring);
        let frac = (theta / (2.0 * PI)).rem_euclid(1.0);
        let shift = (frac - theta / (2.0 * PI)).round() as i64;

        let mut c = w_vecs.col(a).to_owned();
        let mut g = Vec::with_capacity(l);
        for j in 0..l {
            let phase = linalg::root_of_unity(-(j as i64) * shift, l);
            let gj = &frames[j] * &c;
            g.push(Mat::from_fn(m, 1, |i, _| gj[i] * phase));
            c = (&links[j] * &c) * faer::Scale(lambda.inv());
        }
        let norm: f64 = g.iter().map(|v| v.squared_norm_l2()).sum::<f64>().sqrt();
        for v in g.iter_mut() {
            *v = linalg::scaled(v.as_ref(), 1.0 / norm);
        }
        fractions.push(frac);
        amplitudes.push(g);
    }

    let mut order: Vec<usize> = (0..nb).collect();
    order.sort_by(|&a, &b| fractions[a].total_cmp(&fractions[b]));

    // Löwdin per momentum: G_j -> G_j (L G_j^dag G_j)^{-1/2}
    let mut condition = 1.0f64;
    let mut orthonormal: Vec<CMat> = Vec::with_capacity(l);
    for j in 0..l {
        let g = Mat::<c64>::from_fn(m, nb, |i, col| amplitudes[order[col]][j][(i, 0)]);
        let s = linalg::scaled((g.adjoint() * &g).as_ref(), ring);
        let (s_inv_sqrt, cond) = linalg::inv_sqrt(s.as_ref())?;
        condition = condition.max(cond);
        orthonormal.push(&g * &s_inv_sqrt);
    }
    if condition > MAX_CONDITION {
        return Err(Error::IllConditioned(condition));
    }

    // reference functions in real space: phi(x, a) = L^{-1/2} sum_j e^{i k_j x} G'_j
    let norm = 1.0 / ring.sqrt();
    let mut reference = Mat::<c64>::zeros(n, nb);
    for x in 0..l {
        for j in 0..l {
            let phase = linalg::root_of_unity((j * x) as i64, l) * norm;
            for a in 0..m {
                for col in 0..nb {
                    reference[(x * m + a, col)] += orthonormal[j][(a, col)] * phase;
                }
            }
        }
    }

    let positions: Vec<f64> = (0..n).map(|i| (i / m) as f64).collect();
    let ref_centers: Vec<f64> = order.iter().map(|&a| fractions[a]).collect();
    let mut spreads = Vec::with_capacity(nb);
    let mut decays = Vec::with_capacity(nb);
    for (col, &center) in ref_centers.iter().enumerate() {
        fix_phase(&mut reference, col, &positions, center, l);
        let (s, d) = localization(&reference, col, &positions, center, l);
        spreads.push(s);
        decays.push(d);
    }

    let mut vectors = Mat::<c64>::zeros(n, n_cols(l, nb));
    let mut centers = Vec::with_capacity(l * nb);
    for q in 0..l {
        for col in 0..nb {
            let target = q * nb + col;
            for i in 0..n {
                vectors[((i + q * m) % n, target)] = reference[(i, col)];
            }
            centers.push(ref_centers[col] + q as f64);
        }
    }
    Ok(WannierBasis {
        vectors,
        centers,
        spreads: spreads.repeat(l),
        decay_rates: decays.repeat(l),
        condition,
    })
}

fn n_cols(l: usize, nb: usize) -> usize {
    l * nb
}

/// Convenience wrapper over [`wannierize_bloch`] for a classified group.
pub fn wannierize_bands(bands: &DistillerBands, group: BandGroup) -> Result<WannierBasis> {
    wannierize_bloch(bands.lattice, &group_frames(bands, group)?)
}

fn normalize_columns(w: &mut CMat) {
    for j in 0..w.ncols() {
        let norm = w.col(j).norm_l2();
        if norm > 0.0 {
            for i in 0..w.nrows() {
                w[(i, j)] *= 1.0 / norm;
            }
        }
    }
}

/// Signed ring displacement `x - center` in `[-L/2, L/2)`.
fn displacement(x: f64, center: f64, cells: usize) -> f64 {
    let ring = cells as f64;
    (x - center + ring / 2.0).rem_euclid(ring) - ring / 2.0
}

/// Makes the largest-magnitude entry real and positive. Near-ties go to the
/// entry closest to the center, then to the one at or after it.
fn fix_phase(w: &mut CMat, col: usize, positions: &[f64], center: f64, cells: usize) {
    let n = w.nrows();
    let peak = (0..n).map(|i| w[(i, col)].norm()).fold(0.0, f64::max);
    if peak == 0.0 {
        return;
    }
    let pick = (0..n)
        .filter(|&i| w[(i, col)].norm() >= peak * (1.0 - 1e-9))
        .min_by(|&a, &b| {
            let da = displacement(positions[a], center, cells);
            let db = displacement(positions[b], center, cells);
            da.abs()
                .total_cmp(&db.abs())
                .then((da < 0.0).cmp(&(db < 0.0)))
                .then(a.cmp(&b))
        })
        .unwrap();
    let z = w[(pick, col)];
    let phase = z.conj() / z.norm();
    for i in 0..n {
        w[(i, col)] *= phase;
    }
}

/// `(spread, decay rate)` of one column.
fn localization(w: &CMat, col: usize, positions: &[f64], center: f64, cells: usize) -> (f64, f64) {
    let n = w.nrows();
    let mut spread = 0.0;
    let mut cell_weight = vec![0.0f64; cells];
    for i in 0..n {
        let p = w[(i, col)].norm_sqr();
        let d = displacement(positions[i], center, cells);
        spread += p * d * d;
        cell_weight[positions[i].round() as usize % cells] += p;
    }
    let peak = cell_weight.iter().copied().fold(0.0, f64::max).sqrt();
    let points: Vec<(f64, f64)> = cell_weight
        .iter()
        .enumerate()
        .filter_map(|(cell, &wt)| {
            let amp = wt.sqrt();
            let d = displacement(cell as f64, center, cells).abs();
            (amp > FIT_FLOOR * peak && d <= cells as f64 / 4.0).then(|| (d, amp.ln()))
        })
        .collect();
    if points.len() < 3 {
        return (spread, f64::INFINITY);
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (spread, f64::INFINITY);
    }
    (spread, (-sxy / sxx).max(0.0))
}
