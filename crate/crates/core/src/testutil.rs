use faer::{c64, Mat};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::linalg::CMat;

/// Unitary from the QR factor of a seeded complex matrix.
pub(crate) fn random_unitary(n: usize, seed: u64) -> CMat {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut entry = || rng.random_range(-0.5..0.5);
    let a = Mat::<c64>::from_fn(n, n, |_, _| c64::new(entry(), entry()));
    a.qr().compute_Q()
}
