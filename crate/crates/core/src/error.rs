//! Error type shared by all solver stages.

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("domain violation in {context}: a = {a}")]
    Domain { context: &'static str, a: f64 },

    #[error("contraction failure after {iterations} sweeps (last increment {increment:.3e}): {hint}")]
    ContractionFailure {
        iterations: usize,
        increment: f64,
        hint: &'static str,
    },

    #[error("Newton stagnation: residual {residual:.3e} after {iterations} iterations (trail: {trail:?})")]
    NewtonStagnation {
        residual: f64,
        iterations: usize,
        trail: Vec<(f64, f64)>,
    },

    #[error("singular approach: step-size underflow near a = {a:.6e}")]
    SingularApproach { a: f64 },

    #[error("degenerate interval: {0}")]
    DegenerateInterval(String),

    #[error("tail model error {error:.3e} exceeds tolerance {tol:.3e} at A_max = {a_max:.3e}")]
    TailModel { error: f64, tol: f64, a_max: f64 },

    #[error("no admissible matching point below cap {cap:.3e}; smallest |Q|+|Q'| seen: {best:.3e} at a = {at:.3e}")]
    NoSmallPoint { cap: f64, best: f64, at: f64 },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("CFL violation: dt/dr = {cfl} exceeds {max}")]
    CflViolation { cfl: f64, max: f64 },

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("inadmissible exponent pair (p, q) = ({p}, {q})")]
    InadmissiblePair { p: f64, q: f64 },

    #[error("assembly error: {0}")]
    Assembly(String),

    #[error("focusing sign rejected: {0}")]
    FocusingRejected(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("stage {stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Tags an error with the pipeline stage it came from.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| e.in_stage(stage))
    }
}
