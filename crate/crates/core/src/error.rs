use thiserror::Error;

/// Errors raised by state construction, exchange procedures, and evaluators.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("amplitude vector has length {got}, layout requires {want}")]
    LengthMismatch { got: usize, want: usize },
    #[error("vector norm {norm} deviates from 1 beyond tolerance")]
    NotNormalized { norm: f64 },
    #[error("duplicate subsystem label `{0}`")]
    LabelClash(String),
    #[error("subsystem layouts differ")]
    LayoutMismatch,
    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),
    #[error("subsystem dimensions do not match")]
    DimensionMismatch,
    #[error("matrix is not an isometry (max deviation {0:.3e})")]
    NotIsometry(f64),
    #[error("operator is not unitary")]
    NotUnitary,
    #[error("states coincide up to a phase; exchange degenerates to a phase shift")]
    IdenticalStates,
    #[error("parameter out of domain: {0}")]
    DomainError(String),
    #[error("input state is not the declared source state of the resource")]
    WrongInput,
    #[error("control register is not a qubit")]
    ControlDimMismatch,
    #[error("state space dimension must be at least 3")]
    DimensionTooSmall,
    #[error("epsilon-net exceeds the desk-scale budget ({0} points/candidates)")]
    NetTooLarge(u128),
    #[error("epsilon-net is empty")]
    EmptyNet,
    #[error("returned state is missing register `{0}`")]
    MissingRegisters(String),
    #[error("dense evaluation needs {got} amplitudes, budget is {budget}")]
    TooLarge { got: usize, budget: usize },
    #[error("gram backend only evaluates prescribed strategies")]
    UnsupportedStrategy,
    #[error("requested backend does not support this computation")]
    BackendUnsupported,
    #[error("register `{0}` is not a qubit")]
    NotAQubit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
