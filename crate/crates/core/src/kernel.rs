//! Polarization kernels and their distance profiles.
//!
//! A kernel is a small invertible binary matrix `T_l`. Its polarization
//! behaviour is summarized by the partial distances
//! `D_i = d(t_i, span(t_{i+1}, ..., t_l))` (with `D_l` the weight of the last
//! row) and by the exponent
//!
//! ```text
//! E(T_l) = (1/l) * sum_i log_l(D_i),
//! ```
//!
//! which governs how fast the synthesized channels' Bhattacharyya parameters
//! decay as the construction deepens. A kernel is accepted as polarizing when
//! it is invertible, every partial distance lies in `[1, l]`, and at least
//! one partial distance is 2 or more (a kernel with all-unit partial
//! distances, such as the identity, does not polarize).
//!
//! Two kernels are built in: the classic 2x2 kernel `T2 = [10; 11]` and the
//! 3x3 kernel `T3 = [111; 101; 011]` with partial distances `[1, 2, 2]`.

use std::fmt;

use crate::gf2::{row_space, BitMatrix};
use crate::{Error, Result};

/// Largest supported kernel size (partial-distance enumeration is 2^size).
pub const MAX_KERNEL_SIZE: usize = 20;

/// An invertible polarization kernel with its cached distance profile.
#[derive(Clone, PartialEq)]
pub struct Kernel {
    name: String,
    matrix: BitMatrix,
    partial_distances: Vec<usize>,
    exponent: f64,
}

/// Acceptance report for a candidate kernel matrix.
///
/// Carries the individual conditions rather than erroring, so rejected
/// candidates can be inspected.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelValidity {
    /// Matrix is square and invertible over GF(2).
    pub invertible: bool,
    /// Partial distances of the candidate rows.
    pub partial_distances: Vec<usize>,
    /// Every partial distance lies in `[1, size]`.
    pub distances_in_range: bool,
    /// At least one partial distance is `>= 2`.
    pub has_distance_at_least_two: bool,
}

impl KernelValidity {
    /// Whether the candidate satisfies all acceptance conditions.
    pub fn accepted(&self) -> bool {
        self.invertible && self.distances_in_range && self.has_distance_at_least_two
    }
}

impl Kernel {
    /// The 2x2 kernel `[10; 11]` with partial distances `[1, 2]` and
    /// exponent exactly 0.5.
    pub fn t2() -> Kernel {
        Kernel::from_matrix("T2", "10\n11".parse().unwrap()).unwrap()
    }

    /// The 3x3 kernel `[111; 101; 011]` with partial distances `[1, 2, 2]`
    /// and exponent `2 log_3(2) / 3 ≈ 0.4206`.
    pub fn t3() -> Kernel {
        Kernel::from_matrix("T3", "111\n101\n011".parse().unwrap()).unwrap()
    }

    /// Looks up a built-in kernel by name (case-insensitive: `T2`, `T3`).
    pub fn by_name(name: &str) -> Result<Kernel> {
        match name.to_ascii_uppercase().as_str() {
            "T2" => Ok(Kernel::t2()),
            "T3" => Ok(Kernel::t3()),
            _ => Err(Error::UnknownKernel(name.to_string())),
        }
    }

    /// Looks up the built-in kernel of the given size (2 or 3).
    pub fn by_size(size: usize) -> Result<Kernel> {
        match size {
            2 => Ok(Kernel::t2()),
            3 => Ok(Kernel::t3()),
            _ => Err(Error::UnknownKernel(format!(
                "no built-in kernel of size {size}"
            ))),
        }
    }

    /// Wraps an invertible square matrix as a kernel, computing its distance
    /// profile.
    ///
    /// Errors on non-square or singular matrices, sizes below 2, and sizes
    /// above [`MAX_KERNEL_SIZE`].
    pub fn from_matrix(name: impl Into<String>, matrix: BitMatrix) -> Result<Kernel> {
        if !matrix.is_square() {
            return Err(Error::NotSquare {
                rows: matrix.rows(),
                cols: matrix.cols(),
            });
        }
        let l = matrix.rows();
        if l < 2 {
            return Err(Error::InvalidParameter(format!(
                "kernel size must be at least 2, got {l}"
            )));
        }
        if l > MAX_KERNEL_SIZE {
            return Err(Error::GuardExceeded {
                what: "kernel distance enumeration",
                needed: 1u128 << l,
                limit: 1u128 << MAX_KERNEL_SIZE,
            });
        }
        if !matrix.is_invertible()? {
            return Err(Error::Singular);
        }
        let partial_distances = partial_distances(&matrix)?;
        let exponent = exponent_from_distances(l, &partial_distances);
        Ok(Kernel {
            name: name.into(),
            matrix,
            partial_distances,
            exponent,
        })
    }

    /// Parses a kernel from the matrix text format (one `'0'`/`'1'` line per
    /// row).
    pub fn from_text(name: impl Into<String>, text: &str) -> Result<Kernel> {
        Kernel::from_matrix(name, text.parse()?)
    }

    /// Kernel name (built-ins: `T2`, `T3`).
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Kernel size `l`.
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// The kernel matrix.
    pub fn matrix(&self) -> &BitMatrix {
        &self.matrix
    }

    /// Partial distances `D_1..D_l`.
    pub fn partial_distances(&self) -> &[usize] {
        &self.partial_distances
    }

    /// The exponent `(1/l) * sum_i log_l(D_i)`.
    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    /// The matrix text format for this kernel.
    pub fn to_text(&self) -> String {
        self.matrix.to_string()
    }
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Kernel {} ({}x{}, D={:?}, E={})",
            self.name,
            self.size(),
            self.size(),
            self.partial_distances,
            self.exponent
        )
    }
}

/// Partial distances of the rows of `m`: `D_i` is the Hamming distance from
/// row `i` to the span of all later rows (`D_last` is the weight of the last
/// row, the span being trivial).
///
/// Defined for any matrix whose row span can be enumerated; invertibility is
/// not required here so that rejected candidates can still be profiled.
pub fn partial_distances(m: &BitMatrix) -> Result<Vec<usize>> {
    let rows = m.rows();
    (0..rows)
        .map(|i| {
            let span = row_space(m, i + 1..rows)?;
            let row = m.row_mask(i);
            Ok(span
                .iter()
                .map(|c| (row ^ c).count_ones() as usize)
                .min()
                .expect("span contains at least the zero word"))
        })
        .collect()
}

/// The exponent `(1/l) * sum_i log_l(d_i)` for a size-`l` kernel with the
/// given partial distances.
pub fn exponent_from_distances(l: usize, distances: &[usize]) -> f64 {
    let log_l = (l as f64).ln();
    distances
        .iter()
        .map(|&d| (d as f64).ln() / log_l)
        .sum::<f64>()
        / l as f64
}

/// Profiles a candidate kernel matrix against the acceptance conditions.
///
/// Unlike [`Kernel::from_matrix`] this never rejects: the report carries the
/// failures. Only the enumeration guards error (more than
/// [`MAX_KERNEL_SIZE`] rows, or more than 64 columns).
pub fn validate_matrix(m: &BitMatrix) -> Result<KernelValidity> {
    if m.rows() > MAX_KERNEL_SIZE {
        return Err(Error::GuardExceeded {
            what: "kernel distance enumeration",
            needed: 1u128 << m.rows().min(127),
            limit: 1u128 << MAX_KERNEL_SIZE,
        });
    }
    let invertible = m.is_square() && m.is_invertible()?;
    let partial_distances = partial_distances(m)?;
    let bound = m.cols();
    let distances_in_range = partial_distances.iter().all(|&d| d >= 1 && d <= bound);
    let has_distance_at_least_two = partial_distances.iter().any(|&d| d >= 2);
    Ok(KernelValidity {
        invertible,
        partial_distances,
        distances_in_range,
        has_distance_at_least_two,
    })
}
