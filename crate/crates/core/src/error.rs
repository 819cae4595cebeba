use thiserror::Error;

use crate::wannier::BandGroup;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model: {0}")]
    Model(String),

    #[error("degenerate single-particle levels at the Fermi level: {levels:?} (momentum index, band)")]
    FermiDegeneracy { levels: Vec<(usize, usize)> },

    #[error("invalid mode set: {0}")]
    ModeSet(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("entanglement energy diverges for modes {0:?}")]
    FrozenEigenvalue(Vec<usize>),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("correlation matrix breaks translation invariance (max deviation {0:.3e})")]
    TranslationInvariance(f64),

    #[error("band group `{0}` is empty")]
    EmptyGroup(BandGroup),

    #[error("not a projector (max deviation {0:.3e})")]
    NotProjector(f64),

    #[error("orthonormalization is ill-conditioned (condition number {0:.3e}); reject the step")]
    IllConditioned(f64),

    #[error("zipper columns do not form a complete basis: {0}")]
    Incomplete(String),

    #[error("cannot block {cells} cells by a factor of {factor}")]
    Blocking { cells: usize, factor: usize },

    #[error("frozen residual {residual:.3e} exceeds the abort threshold {threshold:.3e}")]
    ResidualAbort { residual: f64, threshold: f64 },

    #[error("invalid RG configuration: {0}")]
    Config(String),

    #[error("linear algebra failure: {0}")]
    LinAlg(String),

    #[error("step {step} ({module}): {source}")]
    Step {
        step: usize,
        module: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, step: usize, module: &'static str) -> Error {
        match self {
            e @ Error::Step { .. } => e,
            e => Error::Step {
                step,
                module,
                source: Box::new(e),
            },
        }
    }
}
