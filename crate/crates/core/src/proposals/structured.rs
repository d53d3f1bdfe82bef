//! The 52 x 102 table with row sums (51, 1, ..., 1) and unit column sums.
//!
//! Uniform sampling is exact here by symmetry: the first row's 51 columns are a
//! uniform subset and the other rows take the remaining columns in uniform order.

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::table::{BinaryMatrix, MarginFiber};
use crate::{Error, Result};

pub const STRUCTURED_ROWS: usize = 52;
pub const STRUCTURED_COLS: usize = 102;

/// 1-based first-row column indices of the two embedded observations; both have
/// column-index sum 2813.
pub const STRUCTURED_OBSERVED_ONES: [[usize; 51]; 2] = [
    [
        1, 7, 8, 10, 11, 15, 16, 17, 20, 21, 28, 29, 30, 36, 37, 40, 41, 42, 48, 49, 51, 54, 55, 56, 57, 58,
        60, 61, 62, 63, 65, 67, 68, 69, 70, 73, 75, 77, 80, 81, 82, 85, 86, 87, 91, 92, 94, 95, 96, 97, 100,
    ],
    [
        1, 2, 6, 8, 10, 14, 16, 18, 19, 20, 21, 23, 25, 29, 32, 33, 36, 38, 42, 44, 46, 49, 50, 53, 54, 57,
        60, 62, 63, 67, 68, 69, 70, 72, 73, 76, 78, 81, 82, 88, 89, 92, 93, 94, 95, 96, 97, 99, 100, 101, 102,
    ],
];

pub fn structured_fiber() -> MarginFiber {
    let mut rows = vec![1; STRUCTURED_ROWS];
    rows[0] = STRUCTURED_COLS / 2;
    MarginFiber::new(rows, vec![1; STRUCTURED_COLS]).expect("structured margins are feasible")
}

/// Table whose first row has ones at the given 1-based columns; row `k >= 1` takes the
/// `k`-th remaining column in increasing order.
pub fn structured_from_first_row(ones: &[usize]) -> Result<BinaryMatrix> {
    if ones.len() != STRUCTURED_COLS / 2 {
        return Err(Error::shape(format!("first row needs {} ones, got {}", STRUCTURED_COLS / 2, ones.len())));
    }
    let mut x = BinaryMatrix::zeros(STRUCTURED_ROWS, STRUCTURED_COLS);
    for &l in ones {
        if l == 0 || l > STRUCTURED_COLS || x.get(0, l - 1) {
            return Err(Error::InvalidValue(format!("bad or repeated column index {l}")));
        }
        x.set(0, l - 1, true);
    }
    let mut row = 1;
    for j in 0..STRUCTURED_COLS {
        if !x.get(0, j) {
            x.set(row, j, true);
            row += 1;
        }
    }
    Ok(x)
}

/// One of the embedded observations (`which` is 0 or 1).
pub fn structured_observed(which: usize) -> Result<BinaryMatrix> {
    let ones = STRUCTURED_OBSERVED_ONES
        .get(which)
        .ok_or_else(|| Error::domain(format!("no embedded observation {which}")))?;
    structured_from_first_row(ones)
}

/// Exact uniform draw from the fiber.
pub fn structured_table_direct_sample<R: Rng + ?Sized>(rng: &mut R) -> BinaryMatrix {
    let mut x = BinaryMatrix::zeros(STRUCTURED_ROWS, STRUCTURED_COLS);
    for j in index::sample(rng, STRUCTURED_COLS, STRUCTURED_COLS / 2) {
        x.set(0, j, true);
    }
    let mut rest: Vec<usize> = (0..STRUCTURED_COLS).filter(|&j| !x.get(0, j)).collect();
    rest.shuffle(rng);
    for (k, j) in rest.into_iter().enumerate() {
        x.set(k + 1, j, true);
    }
    x
}

/// Column-index sum of the first row of a uniform draw, without building the table.
pub fn structured_first_row_stat<R: Rng + ?Sized>(rng: &mut R) -> usize {
    index::sample(rng, STRUCTURED_COLS, STRUCTURED_COLS / 2).into_iter().map(|j| j + 1).sum()
}
