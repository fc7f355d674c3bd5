use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("insufficient primes: found {found} of {requested} primes = 1 mod {two_n} below 2^{bitwidth}")]
    InsufficientPrimes {
        requested: usize,
        found: usize,
        bitwidth: u32,
        two_n: u64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Basis, degree, domain or shape disagreement between operands.
    #[error("structural mismatch: {0}")]
    Mismatch(String),

    #[error("modulus {0} appears in both bases")]
    SharedModulus(u32),

    #[error("moduli {0} and {1} are not coprime")]
    NotCoprime(u32, u32),

    #[error("deferred reduction unsafe: output row {row} accumulates up to {bound} >= 2^64")]
    OverflowRisk { row: usize, bound: u128 },

    #[error("overflow-free moduli search failed: accepted {accepted} of {requested} output moduli, best row sum {best_sum} (2^64 = 18446744073709551616)")]
    SearchFailed {
        requested: usize,
        accepted: usize,
        best_sum: u128,
    },

    #[error("message coefficient {value} exceeds the decryption budget {budget}")]
    MessageOverflow { value: i64, budget: i128 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
