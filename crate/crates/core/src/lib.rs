//! Multi-kernel polar codes: construction, encoding, decoding, and
//! reliability analysis.
//!
//! A multi-kernel polar code of length `N = l_1 * l_2 * ... * l_m` is defined
//! by the generator matrix `G_N = T_{l_1} ⊗ T_{l_2} ⊗ ... ⊗ T_{l_m}`, a
//! Kronecker product of small binary kernels of possibly different sizes.
//! Mixing kernel sizes lifts the power-of-two restriction on the block length
//! while keeping the recursive channel-splitting structure that makes polar
//! coding work.
//!
//! The crate provides:
//!
//! - [`gf2`]: dense bit matrices with the small GF(2) toolbox (Kronecker
//!   products, invertibility, row spans) the rest of the crate builds on;
//! - [`kernel`]: polarization kernels, their partial distances, and the
//!   rate-of-polarization exponent computed from them;
//! - [`channel`]: binary-input discrete channels, mutual information,
//!   Bhattacharyya parameters, and the binary-entropy toolbox;
//! - [`synthesis`]: one-step virtual-channel synthesis, the exact erasure
//!   recursion, Bhattacharyya bound propagation, and reliability trees with
//!   log-domain tracking;
//! - [`construction`]: mixed-radix indexing, generator assembly, frozen-set
//!   selection, and the persistent [`construction::CodeSpec`] format;
//! - [`codec`]: the staged encoder and exact successive-cancellation decoder;
//! - [`analysis`]: martingale, polarization-step, entropy-inequality, bound
//!   containment, and convergence diagnostics;
//! - [`sim`]: a seeded, partition-invariant Monte-Carlo frame-error harness;
//! - [`verify`]: named self-check suites tying all of the above together.

pub mod analysis;
pub mod channel;
pub mod codec;
pub mod construction;
mod error;
pub mod gf2;
pub mod kernel;
pub mod sim;
pub mod synthesis;
pub mod verify;

pub use error::{Error, Result};

pub(crate) mod util {
    /// Compensated (Neumaier) summation.
    ///
    /// Stage means and pmf normalization checks are compared against
    /// tolerances tighter than what naive summation guarantees at the
    /// instance sizes this crate handles, so every tolerance-sensitive sum
    /// goes through this.
    pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for v in values {
            let t = sum + v;
            if sum.abs() >= v.abs() {
                comp += (sum - t) + v;
            } else {
                comp += (v - t) + sum;
            }
            sum = t;
        }
        sum + comp
    }

    #[cfg(test)]
    mod tests {
        use super::neumaier_sum;

        #[test]
        fn compensates_cancellation() {
            // Naive summation loses the small term entirely.
            let v = [1e16, 1.0, -1e16];
            assert_eq!(neumaier_sum(v.iter().copied()), 1.0);
        }

        #[test]
        fn empty_sum_is_zero() {
            assert_eq!(neumaier_sum(std::iter::empty()), 0.0);
        }
    }
}
