use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid parameters: t={t}, n={n}")]
    InvalidParams { t: u32, n: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("coordinate {index} has value {value}, outside [1, {t}]")]
    CoordinateOutOfRange { index: usize, value: u32, t: u32 },

    #[error("t^n does not fit the 62-bit point codec (t={t}, n={n})")]
    CodecOverflow { t: u32, n: usize },

    #[error("code {code} is outside [0, {size})")]
    CodeOutOfRange { code: u64, size: u64 },

    #[error("coordinate index {index} is outside [1, {n}]")]
    CoordinateIndex { index: usize, n: usize },

    #[error("match threshold {threshold} exceeds |I| = {len}")]
    ThresholdTooLarge { threshold: usize, len: usize },

    #[error("down_(i,a) needs 2 <= a <= t, got a={a}, t={t}")]
    ShiftValue { a: u32, t: u32 },

    #[error("table is not concave at l={at}")]
    NotConcave { at: usize },

    #[error("empty table")]
    EmptyTable,

    #[error("point is not in down(K)")]
    NotInDownSet,

    #[error("operation needs a non-empty set")]
    EmptySet,

    #[error("no box witness found (mu={mu}, k={k})")]
    NoWitness { mu: f64, k: f64 },

    #[error("exhaustive mode needs t^n <= {bound}, got {size}")]
    ExhaustiveTooLarge { size: u128, bound: u128 },

    #[error("enumeration budget exceeded: {count} subsets > {budget}")]
    BudgetExceeded { count: u128, budget: u128 },

    #[error("match threshold M={raw:.4} rounds below 1; the bounds are vacuous at this scale")]
    VacuousThreshold { raw: f64 },

    #[error("iterated logarithm undefined: intermediate value {value} is not positive")]
    UndefinedLog { value: f64 },

    #[error("r={r} exceeds log*(k)={max}")]
    TooManyRounds { r: u32, max: u32 },

    #[error("invalid protocol parameter: {0}")]
    InvalidParameter(String),

    #[error("set element {value} outside [1, {m}]")]
    ElementOutOfRange { value: u64, m: u64 },

    #[error("set has {len} elements, more than k={k}")]
    SetTooLarge { len: usize, k: usize },

    #[error("protocol violated the channel rules: {0}")]
    Channel(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("embedding parameters inconsistent: {0}")]
    Embedding(String),
}
