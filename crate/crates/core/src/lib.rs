//! RNS-CKKS polynomial arithmetic: word-size modular arithmetic, negacyclic
//! NTT (single- and two-phase), fast base conversion with deferred
//! reduction, and three-stage hybrid key-switching.

pub mod arith;
pub mod bconv;
pub mod dump;
pub mod error;
pub mod exec;
pub mod keyswitch;
pub mod ntt;
pub mod oracle;
pub mod params;
pub mod poly;

pub use arith::{find_ntt_primes, ArithOp, Modulus};
pub use bconv::{bconv, bconv_with_intermediate_reduction, search_overflow_free_moduli, BConvTable};
pub use error::{Error, Result};
pub use exec::Exec;
pub use keyswitch::{Ciphertext, CkksContext, KeySwitcher, SecretKey, SwitchingKey};
pub use ntt::{Direction, NttContext, TwiddleTable, TwoPhaseConfig};
pub use params::ParameterSet;
pub use poly::{Domain, Polynomial};
