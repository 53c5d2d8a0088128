use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, GdeError>;

#[derive(Debug, Error)]
pub enum GdeError {
    #[error("z = {z} is {dist:.3e} from a free level, below the proximity tolerance {tol:.3e}")]
    PoleProximity { z: Complex64, dist: f64, tol: f64 },

    #[error("label {n} out of range for dimension {dim}")]
    UnknownLabel { n: usize, dim: usize },

    #[error("z = {z} has nonpositive imaginary part; the half-line transform needs Im z > 0")]
    LowerHalfPlane { z: Complex64 },

    #[error("quadrature failed: {0}")]
    QuadratureFailure(String),

    #[error("instantaneous kernels are distributional on a grid; take the small-duration limit instead")]
    DistributionalKernel,

    #[error("total Hamiltonian is only defined for instantaneous interactions")]
    NotInstantaneous,

    #[error("start radius outside the asymptotic regime: |B|*|G0| = {product:.3e} at z = {z} (need < {limit})")]
    BoundaryRegimeViolation {
        z: Complex64,
        product: f64,
        limit: f64,
    },

    #[error("adaptive step collapsed to {step:.3e} near z = {z}")]
    StepFailure { z: Complex64, step: f64 },

    #[error("singular linear solve: {0}")]
    SingularSolve(String),

    #[error("interaction is not rank one")]
    NotRankOne,

    #[error("z = {z} is outside the solved region (seeding radius {radius:.3e})")]
    OutOfContour { z: Complex64, radius: f64 },

    #[error("sample window too narrow: {0}")]
    WindowTooNarrow(String),

    #[error("kernel relation defect {defect:.3e} at separation {separation} exceeds {threshold:.3e}")]
    QuadratureBreakdown {
        separation: usize,
        defect: f64,
        threshold: f64,
    },

    #[error("Im z * t_max = {product:.3} < {required}; transform tail not damped")]
    InsufficientDamping { product: f64, required: f64 },

    #[error("|<n|G|n>| = {magnitude:.3e} below tolerance at z = {z}")]
    VanishingDiagonal { z: Complex64, magnitude: f64 },

    #[error("no convergence after {iterations} iterations (last step {last_step:.3e})")]
    NoConvergence { iterations: usize, last_step: f64 },

    #[error("two roots inside the trust window: {first} and {second}")]
    MultipleRoots { first: Complex64, second: Complex64 },

    #[error("derivative estimates disagree by {disagreement:.3e} (limit {limit:.3e})")]
    DerivativeUnstable { disagreement: f64, limit: f64 },

    #[error("E = {e} is outside the branch region (need Im E >= 0)")]
    BranchViolation { e: Complex64 },

    #[error("iterated energy {e} left the analyticity region")]
    RegionExit { e: Complex64 },

    #[error("operation needs the regulated family")]
    NotRegulated,

    #[error("window doubling changed the result by {rel_change:.3e} (limit {limit:.3e})")]
    WindowUnstable { rel_change: f64, limit: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("malformed input: {0}")]
    Parse(String),
}
