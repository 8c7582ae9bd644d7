use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("frame is rank deficient (relative singular value {sigma:e})")]
    RankDeficient { sigma: f64 },
    #[error("frame is not isotropic (defect {defect:e})")]
    NotIsotropic { defect: f64 },
    #[error("matrix is not unitary (defect {defect:e})")]
    NotUnitary { defect: f64 },
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },
    #[error("matrix is not symplectic (defect {defect:e})")]
    NotSymplectic { defect: f64 },
    #[error("rank decision ambiguous: singular value {sigma:e} is too close to threshold {tol:e}")]
    RankAmbiguous { sigma: f64, tol: f64 },
    #[error("angle {theta} lies on the spectrum")]
    ThetaOnSpectrum { theta: f64 },
    #[error("path refinement limit reached near t = {t}")]
    RefinementLimit { t: f64 },
    #[error("samples too coarse near t = {t} and no evaluator available")]
    NoEvaluator { t: f64 },
    #[error("P is singular or badly conditioned at t = {t}")]
    SingularP { t: f64 },
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("integrator diverged at t = {t} (lambda = {lambda})")]
    IntegratorDivergence { t: f64, lambda: f64 },
    #[error("symplectic defect {defect:e} above bound at lambda = {lambda}")]
    SymplecticDefect { defect: f64, lambda: f64 },
    #[error("eigenvalue crossing near lambda = {lambda} could not be resolved")]
    CrossingUnresolved { lambda: f64 },
    #[error("window endpoint {lambda} is an eigenvalue")]
    EndpointOnSpectrum { lambda: f64 },
    #[error("no certified lower spectral bound found down to lambda = {lambda}")]
    LowerBoundNotFound { lambda: f64 },
    #[error("mass matrix is not positive definite")]
    MassNotPositive,
    #[error("requested {requested} eigenvalues but the trial space has dimension {available}")]
    MeshTooCoarse { requested: usize, available: usize },
    #[error("D is not constant in t")]
    DNotConstant,
    #[error("closed endpoint not attainable: {0}")]
    CasePrecludesAttainment(String),
    #[error("witness tuning failed: {0}")]
    TuningFailed(String),
    #[error("Dirichlet cluster gap {gap:e} too small for case selection")]
    ClusterAmbiguous { gap: f64 },
    #[error("path does not follow the layer pattern: {0}")]
    PatternViolation(String),
    #[error("premise failed: {0}")]
    PremiseFailed(String),
}
