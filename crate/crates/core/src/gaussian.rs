//! Correlation-matrix toolkit for Gaussian (free-fermion) states.
//!
//! `CorrelationMatrix::data()` holds `C_{ij} = <c_i^dag c_j>`. A mode with
//! wavefunction `phi` (creation operator `sum_i phi_i c_i^dag`) has occupation
//! `phi^dag C^T phi`, so mode wavefunctions are eigenvectors of `C^T`, which
//! [`CorrelationMatrix::density`] returns.

use faer::c64;

use crate::linalg::{self, CMat};
use crate::{Error, Result};

/// Eigenvalue clipping before taking logarithms.
pub const DELTA_CLIP: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ModeLabel {
    pub cell: usize,
    pub orbital: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub cells: usize,
    pub orbitals: usize,
}

impl Lattice {
    pub fn modes(&self) -> usize {
        self.cells * self.orbitals
    }
}

#[derive(Clone, Debug)]
pub struct CorrelationMatrix {
    data: CMat,
    labels: Vec<ModeLabel>,
    lattice: Option<Lattice>,
    lattice_exponent: u32,
}

impl CorrelationMatrix {
    /// A matrix on a ring of `cells` cells with `orbitals` modes each,
    /// ordered cell-major.
    pub fn on_lattice(data: CMat, cells: usize, orbitals: usize, lattice_exponent: u32) -> Self {
        assert_eq!(data.nrows(), cells * orbitals);
        assert_eq!(data.ncols(), cells * orbitals);
        let labels = (0..cells)
            .flat_map(|cell| (0..orbitals).map(move |orbital| ModeLabel { cell, orbital }))
            .collect();
        CorrelationMatrix {
            data,
            labels,
            lattice: Some(Lattice { cells, orbitals }),
            lattice_exponent,
        }
    }

    pub fn with_labels(data: CMat, labels: Vec<ModeLabel>) -> Self {
        assert_eq!(data.nrows(), labels.len());
        assert_eq!(data.ncols(), labels.len());
        CorrelationMatrix {
            data,
            labels,
            lattice: None,
            lattice_exponent: 0,
        }
    }

    /// Builds from `C^T` rather than `C`.
    pub fn from_density(density: CMat, cells: usize, orbitals: usize, lattice_exponent: u32) -> Self {
        Self::on_lattice(linalg::transpose(density.as_ref()), cells, orbitals, lattice_exponent)
    }

    pub fn data(&self) -> &CMat {
        &self.data
    }

    /// `C^T`, the projector onto occupied mode wavefunctions for a pure state.
    pub fn density(&self) -> CMat {
        linalg::transpose(self.data.as_ref())
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }

    pub fn lattice(&self) -> Option<Lattice> {
        self.lattice
    }

    pub fn lattice_exponent(&self) -> u32 {
        self.lattice_exponent
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.data[(i, i)].re).sum()
    }

    /// Eigenvalues of `C`, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        linalg::eigvalsh(self.data.as_ref())
    }

    pub fn spectrum(&self) -> Result<EntanglementSpectrum> {
        Ok(EntanglementSpectrum::from_eigenvalues(self.eigenvalues()?))
    }

    pub fn idempotency_residual(&self) -> f64 {
        let sq = &self.data * &self.data;
        linalg::max_abs_diff(sq.as_ref(), self.data.as_ref())
    }

    /// `max |C_{(x+1)a,(y+1)b} - C_{xa,yb}|` over the ring; zero without a lattice.
    pub fn translation_residual(&self) -> f64 {
        let Some(Lattice { cells, orbitals: m }) = self.lattice else {
            return 0.0;
        };
        let n = cells * m;
        let mut worst = 0.0f64;
        for i in 0..n {
            let ii = (i + m) % n;
            for j in 0..n {
                let jj = (j + m) % n;
                worst = worst.max((self.data[(ii, jj)] - self.data[(i, j)]).norm());
            }
        }
        worst
    }

    pub(crate) fn relabeled(mut self, lattice: Lattice, lattice_exponent: u32) -> Self {
        assert_eq!(lattice.modes(), self.dim());
        self.labels = (0..lattice.cells)
            .flat_map(|cell| (0..lattice.orbitals).map(move |orbital| ModeLabel { cell, orbital }))
            .collect();
        self.lattice = Some(lattice);
        self.lattice_exponent = lattice_exponent;
        self
    }
}

/// Occupation spectrum of a (restricted) correlation matrix, clipped to
/// `[0, 1]` and sorted in descending order.
#[derive(Clone, Debug, PartialEq)]
pub struct EntanglementSpectrum {
    pub xi: Vec<f64>,
}

impl EntanglementSpectrum {
    pub fn from_eigenvalues(mut values: Vec<f64>) -> Self {
        for v in values.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        values.sort_by(|a, b| b.total_cmp(a));
        EntanglementSpectrum { xi: values }
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }
}

/// Principal submatrix on `modes`, inheriting their labels.
pub fn restrict(c: &CorrelationMatrix, modes: &[usize]) -> Result<CorrelationMatrix> {
    if modes.is_empty() {
        return Err(Error::ModeSet("empty mode set".into()));
    }
    let mut seen = vec![false; c.dim()];
    for &i in modes {
        if i >= c.dim() {
            return Err(Error::ModeSet(format!("mode {i} out of range 0..{}", c.dim())));
        }
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::ModeSet(format!("mode {i} repeated")));
        }
    }
    let data = linalg::principal(c.data.as_ref(), modes);
    let labels = modes.iter().map(|&i| c.labels[i]).collect();
    let mut out = CorrelationMatrix::with_labels(data, labels);
    if modes.len() == c.dim() && modes.iter().enumerate().all(|(k, &i)| k == i) {
        out.lattice = c.lattice;
        out.lattice_exponent = c.lattice_exponent;
    }
    Ok(out)
}

/// von Neumann entropy `-sum xi ln xi + (1 - xi) ln(1 - xi)` in nats.
pub fn entanglement_entropy(spectrum: &EntanglementSpectrum) -> f64 {
    spectrum.xi.iter().map(|&x| linalg::binary_entropy(x)).sum()
}

/// Entropy of the state restricted to an arbitrary orthonormal set of mode
/// wavefunctions (columns of `basis`).
pub fn subspace_entropy(c: &CorrelationMatrix, basis: faer::MatRef<'_, c64>) -> Result<f64> {
    if basis.ncols() == 0 {
        return Ok(0.0);
    }
    let restricted = basis.adjoint() * c.density() * basis;
    let values = linalg::eigvalsh(linalg::hermitize(restricted.as_ref()).as_ref())?;
    Ok(entanglement_entropy(&EntanglementSpectrum::from_eigenvalues(values)))
}

/// Single-particle entanglement Hamiltonian `(ln((1 - C_R) / C_R))^T`.
pub fn entanglement_hamiltonian(c_r: &CorrelationMatrix) -> Result<CMat> {
    let (vals, vecs) = linalg::eigh(c_r.data.as_ref())?;
    let singular: Vec<usize> = vals
        .iter()
        .enumerate()
        .filter(|(_, &x)| {
            let x = x.clamp(0.0, 1.0);
            x < DELTA_CLIP || x > 1.0 - DELTA_CLIP
        })
        .map(|(i, _)| i)
        .collect();
    if !singular.is_empty() {
        return Err(Error::FrozenEigenvalue(singular));
    }
    let energies: Vec<f64> = vals.iter().map(|&x| ((1.0 - x) / x).ln()).collect();
    let h = linalg::reassemble(&energies, vecs.as_ref());
    Ok(linalg::transpose(h.as_ref()))
}

/// Tolerance on `u^dag u = 1` accepted by [`rotate`].
pub const UNITARITY_TOL: f64 = 1e-10;

/// Basis rotation `C'^T = u^dag C^T u`. Labels are kept; callers relabel.
pub fn rotate(c: &CorrelationMatrix, u: &CMat) -> Result<CorrelationMatrix> {
    if u.nrows() != c.dim() || u.ncols() != c.dim() {
        return Err(Error::Dimension(format!(
            "rotation is {}x{} but the state has {} modes",
            u.nrows(),
            u.ncols(),
            c.dim()
        )));
    }
    let residual = linalg::isometry_residual(u.as_ref());
    if residual > UNITARITY_TOL {
        return Err(Error::NotUnitary(residual));
    }
    let rotated = u.adjoint() * c.density() * u;
    Ok(CorrelationMatrix {
        data: linalg::transpose(rotated.as_ref()),
        labels: c.labels.clone(),
        lattice: c.lattice,
        lattice_exponent: c.lattice_exponent,
    })
}

/// Reference mapping from entanglement energies back to occupations,
/// `xi = 1 / (1 + e^h)`.
pub fn occupation_from_energy(h: f64) -> f64 {
    1.0 / (1.0 + h.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ground_state_correlation, ModelSpec};
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, PI};
    use crate::testutil::random_unitary;
    use faer::Mat;

    fn identity(n: usize) -> CMat {
        Mat::identity(n, n)
    }

    /// Pure Gaussian state with `filled` random modes occupied.
    fn random_pure(n: usize, filled: usize, seed: u64) -> CorrelationMatrix {
        let u = random_unitary(n, seed);
        let occ = linalg::select_columns(u.as_ref(), &(0..filled).collect::<Vec<_>>());
        let density = &occ * occ.adjoint();
        CorrelationMatrix::from_density(density, n, 1, 0)
    }

    fn nn_chain(l: usize) -> CorrelationMatrix {
        ground_state_correlation(&ModelSpec::chain(l, -1.0, 0.0, 0.5).unwrap())
            .unwrap()
            .correlation
    }

    #[test]
    fn restrict_to_everything_is_identity() {
        let c = random_pure(6, 3, 1);
        let r = restrict(&c, &(0..6).collect::<Vec<_>>()).unwrap();
        assert_eq!(linalg::max_abs_diff(r.data().as_ref(), c.data().as_ref()), 0.0);
        assert_eq!(r.lattice(), c.lattice());
    }

    #[test]
    fn restrict_errors() {
        let c = random_pure(4, 2, 2);
        assert!(matches!(restrict(&c, &[]), Err(Error::ModeSet(_))));
        assert!(matches!(restrict(&c, &[0, 4]), Err(Error::ModeSet(_))));
        assert!(matches!(restrict(&c, &[1, 1]), Err(Error::ModeSet(_))));
    }

    #[test]
    fn two_site_chain_spectrum() {
        let c = nn_chain(1024);
        let r = restrict(&c, &[0, 1]).unwrap();
        let xi = r.spectrum().unwrap().xi;
        assert!((xi[0] - (0.5 + 1.0 / PI)).abs() < 1e-3);
        assert!((xi[1] - (0.5 - 1.0 / PI)).abs() < 1e-3);
    }

    #[test]
    fn full_dimer_is_frozen() {
        let spec = ModelSpec::ssh(8, 0.0, -1.0).unwrap();
        let c = ground_state_correlation(&spec).unwrap().correlation;
        // (cell 0, B) and (cell 1, A) form one dimer
        let xi = restrict(&c, &[1, 2]).unwrap().spectrum().unwrap().xi;
        assert!((xi[0] - 1.0).abs() < 1e-12 && xi[1].abs() < 1e-12);
    }

    #[test]
    fn entropy_examples() {
        let s = |xi: Vec<f64>| entanglement_entropy(&EntanglementSpectrum::from_eigenvalues(xi));
        assert!((s(vec![0.5]) - LN_2).abs() < 1e-15);
        assert_eq!(s(vec![0.0, 1.0, 1.0, 0.0]), 0.0);
        // -x ln x - (1-x) ln(1-x) at x = 1e-4
        let x: f64 = 1e-4;
        let expected = -x * x.ln() - (1.0 - x) * (1.0 - x).ln();
        assert!((s(vec![1e-4]) - expected).abs() < 1e-15);
        assert!((s(vec![1e-4]) - 1.0210e-3).abs() < 1e-7);
        // clipped upstream
        assert_eq!(s(vec![-1e-14, 1.0 + 1e-14]), 0.0);
    }

    #[test]
    fn entanglement_hamiltonian_examples() {
        let half = CorrelationMatrix::with_labels(
            Mat::from_fn(3, 3, |i, j| if i == j { c64::new(0.5, 0.0) } else { c64::new(0.0, 0.0) }),
            vec![ModeLabel { cell: 0, orbital: 0 }; 3],
        );
        assert!(linalg::max_abs(entanglement_hamiltonian(&half).unwrap().as_ref()) < 1e-15);

        let diag = CorrelationMatrix::with_labels(
            Mat::from_fn(2, 2, |i, j| match (i, j) {
                (0, 0) => c64::new(0.8183, 0.0),
                (1, 1) => c64::new(0.1817, 0.0),
                _ => c64::new(0.0, 0.0),
            }),
            vec![ModeLabel { cell: 0, orbital: 0 }; 2],
        );
        let h = entanglement_hamiltonian(&diag).unwrap();
        let e0 = (0.1817f64 / 0.8183).ln();
        assert!((h[(0, 0)].re - e0).abs() < 1e-12);
        assert!((h[(1, 1)].re + e0).abs() < 1e-12);
        assert!((e0 + 1.5048).abs() < 1e-4);
    }

    #[test]
    fn entanglement_hamiltonian_rejects_frozen_modes() {
        let spec = ModelSpec::ssh(8, 0.0, -1.0).unwrap();
        let c = ground_state_correlation(&spec).unwrap().correlation;
        let r = restrict(&c, &[1, 2]).unwrap();
        match entanglement_hamiltonian(&r) {
            Err(Error::FrozenEigenvalue(modes)) => assert_eq!(modes, vec![0, 1]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn entanglement_hamiltonian_spectrum_matches_occupations() {
        let c = random_pure(10, 5, 7);
        let r = restrict(&c, &[0, 3, 4, 8]).unwrap();
        let xi = r.eigenvalues().unwrap();
        let h = entanglement_hamiltonian(&r).unwrap();
        let mut energies = linalg::eigvalsh(h.as_ref()).unwrap();
        let mut expected: Vec<f64> = xi.iter().map(|&x| ((1.0 - x) / x).ln()).collect();
        energies.sort_by(f64::total_cmp);
        expected.sort_by(f64::total_cmp);
        for (a, b) in energies.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
        // and back
        let mut back: Vec<f64> = energies.iter().map(|&e| occupation_from_energy(e)).collect();
        let mut xi_sorted = xi.clone();
        back.sort_by(f64::total_cmp);
        xi_sorted.sort_by(f64::total_cmp);
        for (a, b) in back.iter().zip(&xi_sorted) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rotate_identity_and_permutation() {
        let c = random_pure(5, 2, 3);
        let same = rotate(&c, &identity(5)).unwrap();
        assert!(linalg::max_abs_diff(same.data().as_ref(), c.data().as_ref()) < 1e-15);

        let perm = [2usize, 0, 4, 1, 3];
        // column j of u is e_{perm[j]}: new mode j is old mode perm[j]
        let u = Mat::from_fn(5, 5, |i, j| if i == perm[j] { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) });
        let p = rotate(&c, &u).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                assert!((p.data()[(i, j)] - c.data()[(perm[i], perm[j])]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn rotate_rejects_non_unitary() {
        let c = random_pure(3, 1, 4);
        let mut u = identity(3);
        u[(0, 0)] = c64::new(1.0 + 1e-6, 0.0);
        assert!(matches!(rotate(&c, &u), Err(Error::NotUnitary(_))));
        assert!(matches!(rotate(&c, &identity(4)), Err(Error::Dimension(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rotation_preserves_spectrum_and_trace(seed in 0u64..10_000, filled in 1usize..7) {
            let c = random_pure(8, filled, seed);
            let u = random_unitary(8, seed ^ 0xabcdef);
            let r = rotate(&c, &u).unwrap();
            let a = c.eigenvalues().unwrap();
            let b = r.eigenvalues().unwrap();
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x - y).abs() < 1e-10);
            }
            prop_assert!((c.trace() - r.trace()).abs() < 1e-10);
        }

        #[test]
        fn complementary_regions_have_equal_entropy(seed in 0u64..10_000, filled in 1usize..9, cut in 1usize..9) {
            let c = random_pure(10, filled, seed);
            let a: Vec<usize> = (0..cut).collect();
            let b: Vec<usize> = (cut..10).collect();
            let sa = entanglement_entropy(&restrict(&c, &a).unwrap().spectrum().unwrap());
            let sb = entanglement_entropy(&restrict(&c, &b).unwrap().spectrum().unwrap());
            prop_assert!((sa - sb).abs() < 1e-8);
        }

        #[test]
        fn entropy_is_basis_independent_within_region(seed in 0u64..10_000) {
            let c = random_pure(8, 4, seed);
            let region = [1usize, 2, 5];
            let s0 = entanglement_entropy(&restrict(&c, &region).unwrap().spectrum().unwrap());
            // rotate only inside the region
            let local = random_unitary(3, seed + 17);
            let mut u = identity(8);
            for (a, &i) in region.iter().enumerate() {
                for (b, &j) in region.iter().enumerate() {
                    u[(i, j)] = local[(a, b)];
                }
            }
            let r = rotate(&c, &u).unwrap();
            let s1 = entanglement_entropy(&restrict(&r, &region).unwrap().spectrum().unwrap());
            prop_assert!((s0 - s1).abs() < 1e-10);
        }
    }
}
