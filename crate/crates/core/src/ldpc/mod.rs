//! Finite-length LDPC codes: construction, alist I/O, sum-product decoding,
//! encoding and BER simulation.

mod ber;
mod construct;
mod decode;
mod encode;
mod matrix;

pub use ber::{append_ber_csv, simulate_ber, BerPoint, SimulationOptions, BER_CSV_HEADER};
pub use construct::{construct_code, degree_sequence, DegreeSequence};
pub use decode::{boxplus, decode_sum_product, DecodeOutcome, SumProductDecoder, DEFAULT_DECODER_ITERATIONS};
pub use encode::SystematicEncoder;
pub use matrix::ParityCheckMatrix;
