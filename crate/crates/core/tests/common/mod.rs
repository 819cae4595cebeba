#![allow(dead_code)]

use std::f64::consts::PI;

use faer::{c64, Mat};
use zer::distiller::LocalDistillation;
use zer::gaussian::Lattice;
use zer::linalg::{self, CMat};
use zer::rg::{RGTrace, StepRecord};
use zer::ModelSpec;

/// Real-space single-particle Hamiltonian, built term by term.
pub fn dense_hamiltonian(spec: &ModelSpec) -> CMat {
    let (l, m) = (spec.cells(), spec.orbitals_per_cell());
    let mut h = Mat::<c64>::zeros(l * m, l * m);
    for hop in spec.hoppings() {
        for x in 0..l {
            let y = (x as i64 + hop.delta).rem_euclid(l as i64) as usize;
            h[(y * m + hop.to, x * m + hop.from)] += hop.amplitude;
        }
    }
    h
}

/// `C^T` from filling the lowest levels of the dense Hamiltonian, with the
/// gap at the Fermi level.
pub fn dense_ground_density(spec: &ModelSpec) -> (CMat, f64) {
    let h = dense_hamiltonian(spec);
    let (vals, vecs) = linalg::eigh(h.as_ref()).unwrap();
    let n = spec.filled_count().unwrap();
    let filled = vecs.as_ref().subcols(0, n);
    (filled * filled.adjoint(), vals[n] - vals[n - 1])
}

/// `sum_x T_x h_local T_x^dag` over every placement of the region on the ring.
pub fn explicit_global_distiller(lattice: Lattice, local: &LocalDistillation) -> CMat {
    let Lattice { cells: l, orbitals: m } = lattice;
    let n = l * m;
    let mut h = Mat::<c64>::zeros(n, n);
    let shifted = |mode: usize, x: usize| ((mode / m + x) % l) * m + mode % m;
    for x in 0..l {
        for (r, &a) in local.region.iter().enumerate() {
            for (s, &b) in local.region.iter().enumerate() {
                h[(shifted(a, x), shifted(b, x))] += local.h_local[(r, s)];
            }
        }
    }
    h
}

/// Momenta `2 pi j / L` that sit midway between a filled and an empty level
/// when the lowest `filled` levels of the dispersion are occupied.
pub fn fermi_momenta(dispersion: impl Fn(f64) -> f64, cells: usize, filled: usize) -> Vec<f64> {
    let k = |j: usize| 2.0 * PI * j as f64 / cells as f64;
    let mut order: Vec<usize> = (0..cells).collect();
    order.sort_by(|&a, &b| dispersion(k(a)).total_cmp(&dispersion(k(b))).then(a.cmp(&b)));
    let mut occupied = vec![false; cells];
    for &j in &order[..filled] {
        occupied[j] = true;
    }
    (0..cells)
        .filter(|&j| occupied[j] != occupied[(j + 1) % cells])
        .map(|j| k(j) + PI / cells as f64)
        .collect()
}

/// Distance on the circle.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}

pub fn accepted(trace: &RGTrace) -> impl Iterator<Item = &StepRecord> {
    trace.steps.iter().filter(|s| s.is_accepted())
}

/// Largest deviation of `V^dag V` from the identity.
pub fn isometry_residual(v: &CMat) -> f64 {
    linalg::isometry_residual(v.as_ref())
}

pub fn max_abs(a: &CMat) -> f64 {
    linalg::max_abs(a.as_ref())
}
