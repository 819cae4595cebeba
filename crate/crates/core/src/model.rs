//! Translation-invariant tight-binding models on a ring and their
//! ground-state correlation matrices.
//!
//! A hopping `(delta, to, from, t)` is the term `t c^dag_{x+delta,to} c_{x,from}`
//! summed over all cells `x`. With this convention the Bloch Hamiltonian is
//! `h(k) = sum_delta exp(-i k delta) H_delta` where `(H_delta)_{to,from}`
//! collects the amplitudes. Every orbital sits at the position of its cell.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::gaussian::CorrelationMatrix;
use crate::linalg::{self, CMat};
use crate::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hopping {
    pub delta: i64,
    pub to: usize,
    pub from: usize,
    pub amplitude: c64,
}

impl Hopping {
    pub fn new(delta: i64, to: usize, from: usize, amplitude: c64) -> Self {
        Hopping {
            delta,
            to,
            from,
            amplitude,
        }
    }

    pub fn real(delta: i64, to: usize, from: usize, amplitude: f64) -> Self {
        Self::new(delta, to, from, c64::new(amplitude, 0.0))
    }

    /// The Hermitian-conjugate term.
    pub fn partner(&self) -> Hopping {
        Hopping::new(-self.delta, self.from, self.to, self.amplitude.conj())
    }

    fn key(&self) -> (i64, usize, usize) {
        (self.delta, self.to, self.from)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    cells: usize,
    orbitals_per_cell: usize,
    hoppings: Vec<Hopping>,
    filling: f64,
}

impl ModelSpec {
    /// Validates the model and closes the hopping list under Hermitian
    /// conjugation: a missing partner `(-delta, from, to, t*)` is implied,
    /// a partner present with a different amplitude is an error.
    pub fn new(
        cells: usize,
        orbitals_per_cell: usize,
        hoppings: Vec<Hopping>,
        filling: f64,
    ) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Model("cell count must be positive".into()));
        }
        if orbitals_per_cell == 0 {
            return Err(Error::Model("orbitals_per_cell must be positive".into()));
        }
        if !(filling > 0.0 && filling < 1.0) {
            return Err(Error::Model(format!("filling must lie in (0, 1), got {filling}")));
        }

        let mut terms: BTreeMap<(i64, usize, usize), c64> = BTreeMap::new();
        for h in &hoppings {
            if h.to >= orbitals_per_cell || h.from >= orbitals_per_cell {
                return Err(Error::Model(format!(
                    "hopping {:?} references an orbital outside 0..{orbitals_per_cell}",
                    h.key()
                )));
            }
            if 2 * h.delta.unsigned_abs() as usize >= cells {
                return Err(Error::Model(format!(
                    "hopping range |{}| must be below half the ring ({cells} cells)",
                    h.delta
                )));
            }
            if terms.insert(h.key(), h.amplitude).is_some() {
                return Err(Error::Model(format!("hopping {:?} listed twice", h.key())));
            }
        }
        let listed: Vec<_> = terms.iter().map(|(&k, &v)| (k, v)).collect();
        for ((delta, to, from), t) in listed {
            let partner = Hopping::new(delta, to, from, t).partner();
            match terms.get(&partner.key()) {
                Some(&p) if (p - partner.amplitude).norm() > HERMITIAN_TOL => {
                    return Err(Error::Model(format!(
                        "hopping {:?} = {t} and its partner {:?} = {p} are not conjugate",
                        (delta, to, from),
                        partner.key()
                    )));
                }
                Some(_) => {}
                None => {
                    terms.insert(partner.key(), partner.amplitude);
                }
            }
        }

        let spec = ModelSpec {
            cells,
            orbitals_per_cell,
            hoppings: terms
                .into_iter()
                .map(|((d, a, b), t)| Hopping::new(d, a, b, t))
                .collect(),
            filling,
        };
        spec.filled_count()?;
        Ok(spec)
    }

    /// Two-band SSH chain: `t1` inside the cell (A-B), `t2` between cells
    /// (B of cell x to A of cell x+1).
    pub fn ssh(cells: usize, t1: f64, t2: f64) -> Result<Self> {
        let mut hoppings = vec![Hopping::real(0, 0, 1, t1), Hopping::real(1, 0, 1, t2)];
        hoppings.retain(|h| h.amplitude.norm() > 0.0);
        ModelSpec::new(cells, 2, hoppings, 0.5)
    }

    /// One-band chain with nearest (`t1`) and next-nearest (`t2`) hopping.
    pub fn chain(cells: usize, t1: f64, t2: f64, filling: f64) -> Result<Self> {
        let mut hoppings = vec![Hopping::real(1, 0, 0, t1), Hopping::real(2, 0, 0, t2)];
        hoppings.retain(|h| h.amplitude.norm() > 0.0);
        ModelSpec::new(cells, 1, hoppings, filling)
    }

    pub fn with_filling(&self, filling: f64) -> Result<Self> {
        ModelSpec::new(self.cells, self.orbitals_per_cell, self.hoppings.clone(), filling)
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn orbitals_per_cell(&self) -> usize {
        self.orbitals_per_cell
    }

    pub fn modes(&self) -> usize {
        self.cells * self.orbitals_per_cell
    }

    /// The closed (Hermitian) hopping list, sorted by `(delta, to, from)`.
    pub fn hoppings(&self) -> &[Hopping] {
        &self.hoppings
    }

    pub fn filling(&self) -> f64 {
        self.filling
    }

    /// `round(filling * modes)`, which must leave at least one filled and one
    /// empty level.
    pub fn filled_count(&self) -> Result<usize> {
        let n = (self.filling * self.modes() as f64).round();
        if n < 1.0 || n >= self.modes() as f64 {
            return Err(Error::Model(format!(
                "filling {} of {} modes leaves no filled or no empty level",
                self.filling,
                self.modes()
            )));
        }
        Ok(n as usize)
    }

    pub fn momentum(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.cells as f64
    }

    /// `H_delta` matrices keyed by cell offset.
    pub fn hopping_blocks(&self) -> BTreeMap<i64, CMat> {
        let m = self.orbitals_per_cell;
        let mut blocks: BTreeMap<i64, CMat> = BTreeMap::new();
        for h in &self.hoppings {
            let block = blocks.entry(h.delta).or_insert_with(|| Mat::zeros(m, m));
            block[(h.to, h.from)] += h.amplitude;
        }
        blocks
    }

    /// Bloch Hamiltonian at an arbitrary momentum.
    pub fn bloch_hamiltonian(&self, k: f64) -> Result<CMat> {
        let m = self.orbitals_per_cell;
        let mut h = Mat::<c64>::zeros(m, m);
        for (delta, block) in self.hopping_blocks() {
            let phase = c64::from_polar(1.0, -k * delta as f64);
            h += block * faer::Scale(phase);
        }
        check_hermitian(&h)?;
        Ok(h)
    }

    /// Bloch Hamiltonian at the discrete momentum `2 pi j / L`, with exact
    /// phases.
    pub fn bloch_hamiltonian_at(&self, j: usize) -> Result<CMat> {
        let m = self.orbitals_per_cell;
        let mut h = Mat::<c64>::zeros(m, m);
        for (delta, block) in self.hopping_blocks() {
            let phase = linalg::root_of_unity(-(j as i64) * delta, self.cells);
            h += block * faer::Scale(phase);
        }
        check_hermitian(&h)?;
        Ok(h)
    }
}

fn check_hermitian(h: &CMat) -> Result<()> {
    let r = linalg::hermiticity_residual(h.as_ref());
    if r > HERMITIAN_TOL {
        return Err(Error::Model(format!("Bloch Hamiltonian is not Hermitian ({r:.3e})")));
    }
    Ok(())
}

/// How to resolve an exact degeneracy straddling the Fermi level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyPolicy {
    /// Fill degenerate levels by ascending momentum index, then band index.
    #[default]
    AscendingMomentum,
    Error,
}

/// Record of a Fermi-level tie and how it was resolved.
#[derive(Clone, Debug, PartialEq)]
pub struct FermiTieBreak {
    /// All `(momentum index, band)` levels at the Fermi energy.
    pub degenerate: Vec<(usize, usize)>,
    /// The subset that was filled.
    pub filled: Vec<(usize, usize)>,
}

#[derive(Clone, Debug)]
pub struct GroundState {
    pub correlation: CorrelationMatrix,
    pub filled: usize,
    /// `filled / modes`, which differs from the requested filling when it
    /// had to be rounded.
    pub actual_filling: f64,
    pub fermi_energy: f64,
    pub tie_break: Option<FermiTieBreak>,
}

pub fn ground_state_correlation(spec: &ModelSpec) -> Result<GroundState> {
    ground_state_correlation_with(spec, DegeneracyPolicy::default())
}

/// Fills the lowest `round(filling * modes)` levels over all `(k, band)` and
/// returns `C` with `C^T = sum over filled Bloch states |psi><psi|`.
pub fn ground_state_correlation_with(
    spec: &ModelSpec,
    policy: DegeneracyPolicy,
) -> Result<GroundState> {
    let l = spec.cells;
    let m = spec.orbitals_per_cell;
    let n_filled = spec.filled_count()?;

    struct Level {
        energy: f64,
        j: usize,
        band: usize,
    }
    let mut vectors = Vec::with_capacity(l);
    let mut levels = Vec::with_capacity(l * m);
    for j in 0..l {
        let (vals, vecs) = linalg::eigh(spec.bloch_hamiltonian_at(j)?.as_ref())?;
        for (band, &energy) in vals.iter().enumerate() {
            levels.push(Level { energy, j, band });
        }
        vectors.push(vecs);
    }
    levels.sort_by(|a, b| {
        a.energy
            .total_cmp(&b.energy)
            .then(a.j.cmp(&b.j))
            .then(a.band.cmp(&b.band))
    });

    let e_last = levels[n_filled - 1].energy;
    let e_next = levels[n_filled].energy;
    let tol = 1e-10 * (1.0 + e_last.abs());
    let mut occupied = vec![vec![false; m]; l];
    let mut tie_break = None;
    if (e_next - e_last).abs() <= tol {
        let mut degenerate: Vec<(usize, usize)> = levels
            .iter()
            .filter(|lv| (lv.energy - e_last).abs() <= tol)
            .map(|lv| (lv.j, lv.band))
            .collect();
        degenerate.sort();
        if policy == DegeneracyPolicy::Error {
            return Err(Error::FermiDegeneracy { levels: degenerate });
        }
        let below = levels
            .iter()
            .filter(|lv| lv.energy < e_last - tol)
            .inspect(|lv| occupied[lv.j][lv.band] = true)
            .count();
        let filled: Vec<_> = degenerate[..n_filled - below].to_vec();
        for &(j, band) in &filled {
            occupied[j][band] = true;
        }
        tie_break = Some(FermiTieBreak { degenerate, filled });
    } else {
        for lv in &levels[..n_filled] {
            occupied[lv.j][lv.band] = true;
        }
    }

    // Momentum-space projectors onto the filled states at each k.
    let projectors: Vec<CMat> = (0..l)
        .map(|j| {
            let cols: Vec<usize> = (0..m).filter(|&b| occupied[j][b]).collect();
            let u = linalg::select_columns(vectors[j].as_ref(), &cols);
            &u * u.adjoint()
        })
        .collect();

    // G_d = (1/L) sum_j exp(i k_j d) P_j is the cell-offset block of C^T.
    let blocks: Vec<CMat> = (0..l)
        .map(|d| {
            let mut g = Mat::<c64>::zeros(m, m);
            for (j, p) in projectors.iter().enumerate() {
                let phase = linalg::root_of_unity((j * d) as i64, l) / l as f64;
                g += p * faer::Scale(phase);
            }
            g
        })
        .collect();

    let n = l * m;
    let data = Mat::from_fn(n, n, |row, col| {
        // C_{(x,a),(y,b)} = (C^T)_{(y,b),(x,a)} = G_{y-x}[b,a]
        let (x, a) = (row / m, row % m);
        let (y, b) = (col / m, col % m);
        blocks[(y + l - x) % l][(b, a)]
    });

    Ok(GroundState {
        correlation: CorrelationMatrix::on_lattice(data, l, m, 0),
        filled: n_filled,
        actual_filling: n_filled as f64 / n as f64,
        fermi_energy: e_last,
        tie_break,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eigenvalues(h: &CMat) -> Vec<f64> {
        linalg::eigvalsh(h.as_ref()).unwrap()
    }

    #[test]
    fn ssh_bloch_at_pi() {
        let spec = ModelSpec::ssh(8, -0.4, -0.6).unwrap();
        let h = spec.bloch_hamiltonian(PI).unwrap();
        assert!((h[(0, 1)] - c64::new(0.2, 0.0)).norm() < 1e-12);
        assert!((h[(1, 0)] - c64::new(0.2, 0.0)).norm() < 1e-12);
        assert!(h[(0, 0)].norm() < 1e-12 && h[(1, 1)].norm() < 1e-12);
        let e = eigenvalues(&h);
        assert!((e[0] + 0.2).abs() < 1e-12 && (e[1] - 0.2).abs() < 1e-12);
        let h4 = spec.bloch_hamiltonian_at(4).unwrap();
        assert!(linalg::max_abs_diff(h.as_ref(), h4.as_ref()) < 1e-12);
    }

    #[test]
    fn zero_hopping_is_zero_matrix() {
        let spec = ModelSpec::new(6, 3, vec![], 1.0 / 3.0).unwrap();
        for k in [0.0, 0.7, 2.0] {
            assert_eq!(linalg::max_abs(spec.bloch_hamiltonian(k).unwrap().as_ref()), 0.0);
        }
    }

    #[test]
    fn chain_dispersion_vanishes_at_quarter() {
        let spec = ModelSpec::chain(16, -1.0, 0.0, 0.5).unwrap();
        let h = spec.bloch_hamiltonian(PI / 2.0).unwrap();
        assert!(h[(0, 0)].norm() < 1e-12);
        let h0 = spec.bloch_hamiltonian(0.0).unwrap();
        assert!((h0[(0, 0)].re + 2.0).abs() < 1e-12);
    }

    #[test]
    fn conjugate_partner_is_implied_or_checked() {
        let spec = ModelSpec::new(4, 1, vec![Hopping::real(1, 0, 0, -1.0)], 0.5).unwrap();
        assert_eq!(spec.hoppings().len(), 2);
        let both = ModelSpec::new(
            4,
            1,
            vec![Hopping::real(1, 0, 0, -1.0), Hopping::real(-1, 0, 0, -1.0)],
            0.5,
        )
        .unwrap();
        assert_eq!(spec, both);

        let bad = ModelSpec::new(
            4,
            1,
            vec![Hopping::real(1, 0, 0, -1.0), Hopping::real(-1, 0, 0, -2.0)],
            0.5,
        );
        assert!(matches!(bad, Err(Error::Model(_))));
        let complex_onsite =
            ModelSpec::new(4, 1, vec![Hopping::new(0, 0, 0, c64::new(0.0, 1.0))], 0.5);
        assert!(complex_onsite.is_err());
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(ModelSpec::chain(0, -1.0, 0.0, 0.5).is_err());
        assert!(ModelSpec::ssh(729, -0.4, -0.6).is_ok());
        assert!(ModelSpec::chain(0, -1.0, 0.0, 0.5).is_err());
        assert!(ModelSpec::chain(4, -1.0, -0.5, 0.5).is_err(), "|delta| = L/2");
        assert!(ModelSpec::chain(8, -1.0, 0.0, 0.01).is_err(), "no filled level");
        assert!(ModelSpec::chain(8, -1.0, 0.0, 1.0).is_err());
        assert!(ModelSpec::new(8, 1, vec![Hopping::real(1, 1, 0, 1.0)], 0.5).is_err());
    }

    #[test]
    fn diagonal_equals_filling() {
        let spec = ModelSpec::chain(40, -1.0, -2.0, 0.4).unwrap();
        let gs = ground_state_correlation(&spec).unwrap();
        let c = gs.correlation.data();
        for i in 0..40 {
            assert!((c[(i, i)].re - 0.4).abs() < 1e-10);
        }
    }

    #[test]
    fn half_filled_chain_nearest_correlation() {
        let spec = ModelSpec::chain(1024, -1.0, 0.0, 0.5).unwrap();
        let gs = ground_state_correlation(&spec).unwrap();
        let c = gs.correlation.data();
        // <c^dag_1 c_0> -> 1/pi in the thermodynamic limit
        assert!((c[(1, 0)].norm() - 1.0 / PI).abs() < 1e-3);
        assert!((c[(1, 0)].re - 1.0 / PI).abs() < 1e-3);
        for x in [3usize, 5, 7] {
            let expected = (PI * x as f64 / 2.0).sin() / (PI * x as f64);
            assert!((c[(x, 0)].re - expected).abs() < 1e-3, "x = {x}");
        }
        // L = 0 mod 4 puts two levels at the Fermi energy
        let tb = gs.tie_break.expect("degenerate Fermi level");
        assert_eq!(tb.degenerate, vec![(256, 0), (768, 0)]);
        assert_eq!(tb.filled, vec![(256, 0)]);
        let strict = ground_state_correlation_with(&spec, DegeneracyPolicy::Error);
        assert!(matches!(strict, Err(Error::FermiDegeneracy { .. })));
    }

    #[test]
    fn dimerized_ssh_is_direct_sum_of_dimers() {
        let l = 8;
        let spec = ModelSpec::ssh(l, 0.0, -1.0).unwrap();
        let gs = ground_state_correlation(&spec).unwrap();
        let c = gs.correlation.data();
        let n = 2 * l;
        for i in 0..n {
            for j in 0..n {
                // dimers pair (x, B) = 2x + 1 with (x + 1, A) = 2x + 2 mod n
                let partner = |s: usize| if s % 2 == 1 { (s + 1) % n } else { (s + n - 1) % n };
                let expected = if i == j {
                    0.5
                } else if partner(i) == j {
                    0.5
                } else {
                    0.0
                };
                assert!(
                    (c[(i, j)].norm() - expected).abs() < 1e-12,
                    "({i},{j}) = {}",
                    c[(i, j)]
                );
            }
        }
    }
}
