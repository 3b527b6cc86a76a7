pub mod adversary;
pub mod bits;
pub mod error;
pub mod gf2n;
pub mod harness;
pub mod pqc;
pub mod qauth;
pub mod qpke;
pub mod qstate;
pub mod rng;
pub mod stabilizer;
