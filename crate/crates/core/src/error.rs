use crate::geom::Sym2;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("degenerate triangle: area {area:e}, diameter {diameter:e}")]
    DegenerateTriangle { area: f64, diameter: f64 },
    #[error("matrix [{a}, {b}; {b}, {c}] is not positive definite")]
    NotPositiveDefinite { a: f64, b: f64, c: f64 },
    #[error("singular metric {0:?} (univariate polynomial)")]
    SingularMetric(Sym2),
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unsupported order m = {0} for closed-form metric")]
    UnsupportedOrder(usize),
    #[error("singular linear system")]
    SingularSystem,
    #[error("optimizer failure: {0}")]
    Optimizer(String),
    #[error("mesh generation failed: {0}")]
    Mesh(String),
    #[error("parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
