//! Robertson uncertainty matrices on truncated Hilbert spaces.
//!
//! * [`algebra`]: ladder, su(1,1), su(2), sp(N,R) and q-deformed operator
//!   matrices with multimode embedding.
//! * [`moments`]: the uncertainty matrix sigma, the mean-commutator matrix C,
//!   and the determinant, product and trace inequalities between them.
//! * [`transform`]: congruence maps, orthogonal and Williamson
//!   diagonalization, spin decorrelation.
//! * [`ris`]: intelligent states that minimize det sigma >= det C.
//!
//! Units have hbar = 1 and a = (q + ip)/sqrt(2). Canonical observable lists
//! are always ordered (p_1..p_N, q_1..q_N).

pub mod algebra;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod ris;
pub mod transform;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
