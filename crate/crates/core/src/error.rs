use thiserror::Error;

/// Errors raised by grid construction, the collision kernels and the driver.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("vacuum state in cell {cell}: total density {rho:e} below floor")]
    Vacuum { cell: usize, rho: f64 },

    #[error("positivity loss in cell {cell}, species {species}: {what}")]
    PositivityLoss {
        cell: usize,
        species: usize,
        what: String,
    },

    #[error("singular moment Gram matrix in cell {cell}, species {species}")]
    GridDegeneracy { cell: usize, species: usize },

    #[error("Riemann problem generates vacuum")]
    RiemannVacuum,

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("solver failed at t = {time}: {source}")]
    Solver {
        time: f64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    /// Attaches the simulation time to a kernel error.
    pub fn at_time(self, time: f64) -> Self {
        match self {
            e @ Error::Solver { .. } => e,
            e => Error::Solver {
                time,
                source: Box::new(e),
            },
        }
    }

    /// Re-labels a per-cell error with a global cell index.
    pub(crate) fn with_cell(self, global: usize) -> Self {
        match self {
            Error::Vacuum { rho, .. } => Error::Vacuum { cell: global, rho },
            Error::PositivityLoss { species, what, .. } => Error::PositivityLoss {
                cell: global,
                species,
                what,
            },
            Error::GridDegeneracy { species, .. } => Error::GridDegeneracy {
                cell: global,
                species,
            },
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
