//! Floor-function inequalities that make the mechanism thresholds consistent.
//!
//! For positive integers `x > y` and `q`:
//!
//! ```text
//! ⌊y·q/x⌋ ≥ y·⌊q/x⌋
//! ⌊y·q/x⌋ + ⌊(x−y)·q/x⌋ + 1 ≥ q
//! ```
//!
//! These are identities, so [`floor_inequalities_hold`] exists as a self-test
//! of the integer arithmetic the thresholds are built from.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum FloorArgsError {
    #[error("all arguments must be positive (x={x}, y={y}, q={q})")]
    NonPositive { x: u64, y: u64, q: u64 },
    #[error("x must exceed y (x={x}, y={y})")]
    NotOrdered { x: u64, y: u64 },
}

/// Evaluates both inequalities for `(x, y, q)`.
///
/// Returns `Err` on a precondition violation so that a bad call can never be
/// mistaken for a counterexample.
pub fn floor_inequalities_hold(x: u64, y: u64, q: u64) -> Result<bool, FloorArgsError> {
    if x == 0 || y == 0 || q == 0 {
        return Err(FloorArgsError::NonPositive { x, y, q });
    }
    if x <= y {
        return Err(FloorArgsError::NotOrdered { x, y });
    }
    let yq = (y * q) / x;
    let first = yq >= y * (q / x);
    let second = yq + ((x - y) * q) / x + 1 >= q;
    Ok(first && second)
}
