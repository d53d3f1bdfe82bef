//! Binary matrices, margin fibers and Gale–Ryser feasibility.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense row-major 0/1 matrix.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BinaryMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u8>,
}

impl BinaryMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        BinaryMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let ncols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != ncols {
                return Err(Error::shape(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
            if let Some(v) = r.iter().find(|&&v| v > 1) {
                return Err(Error::InvalidValue(format!("entry {v} in row {i} is not 0/1")));
            }
            data.extend_from_slice(r);
        }
        Ok(BinaryMatrix { rows: rows.len(), cols: ncols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.data[i * self.cols + j] != 0
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.data[i * self.cols + j] = u8::from(v);
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn clear(&mut self) {
        self.data.fill(0);
    }

    pub fn row_sums(&self) -> Vec<usize> {
        (0..self.rows).map(|i| self.row(i).iter().map(|&v| usize::from(v)).sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<usize> {
        let mut sums = vec![0; self.cols];
        for i in 0..self.rows {
            for (s, &v) in sums.iter_mut().zip(self.row(i)) {
                *s += usize::from(v);
            }
        }
        sums
    }

    /// Parse a comma-separated grid of 0/1 entries, one row per line.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let row = rec
                .iter()
                .map(|f| match f {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::Parse { line, msg: format!("expected 0 or 1, got {other:?}") }),
                })
                .collect::<Result<Vec<u8>>>()?;
            rows.push(row);
        }
        Self::from_rows(&rows)
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::with_capacity(self.rows * self.cols * 2);
        for i in 0..self.rows {
            let line: Vec<&str> = self.row(i).iter().map(|&v| if v == 1 { "1" } else { "0" }).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Debug for BinaryMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BinaryMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let line: String = self.row(i).iter().map(|&v| if v == 1 { '1' } else { '.' }).collect();
            writeln!(f, "  {line}")?;
        }
        Ok(())
    }
}

/// Gale–Ryser: does a 0/1 matrix with these row and column sums exist?
pub fn gale_ryser_feasible(row_sums: &[usize], col_sums: &[usize]) -> bool {
    if row_sums.iter().sum::<usize>() != col_sums.iter().sum::<usize>() {
        return false;
    }
    let mut rows = row_sums.to_vec();
    rows.sort_unstable_by(|a, b| b.cmp(a));
    let mut lhs = 0;
    for (k, &r) in rows.iter().enumerate() {
        lhs += r;
        let rhs: usize = col_sums.iter().map(|&c| c.min(k + 1)).sum();
        if lhs > rhs {
            return false;
        }
    }
    true
}

/// All binary matrices with the given row and column sums.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MarginFiber {
    row_sums: Vec<usize>,
    col_sums: Vec<usize>,
}

impl MarginFiber {
    pub fn new(row_sums: Vec<usize>, col_sums: Vec<usize>) -> Result<Self> {
        if !gale_ryser_feasible(&row_sums, &col_sums) {
            return Err(Error::InfeasibleMargins);
        }
        Ok(MarginFiber { row_sums, col_sums })
    }

    pub fn of_matrix(x: &BinaryMatrix) -> Self {
        MarginFiber { row_sums: x.row_sums(), col_sums: x.col_sums() }
    }

    pub fn row_sums(&self) -> &[usize] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[usize] {
        &self.col_sums
    }

    pub fn rows(&self) -> usize {
        self.row_sums.len()
    }

    pub fn cols(&self) -> usize {
        self.col_sums.len()
    }

    pub fn contains(&self, x: &BinaryMatrix) -> bool {
        x.rows() == self.rows()
            && x.cols() == self.cols()
            && x.row_sums() == self.row_sums
            && x.col_sums() == self.col_sums
    }

    pub fn check_contains(&self, x: &BinaryMatrix) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::NotInFiber("matrix margins differ from the fiber".into()))
        }
    }

    /// Two CSV lines: row sums, then column sums.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut lines = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            let sums = rec
                .iter()
                .map(|f| {
                    f.parse::<usize>().map_err(|e| Error::Parse { line, msg: format!("{f:?}: {e}") })
                })
                .collect::<Result<Vec<_>>>()?;
            lines.push(sums);
        }
        match <[Vec<usize>; 2]>::try_from(lines) {
            Ok([rows, cols]) => Self::new(rows, cols),
            Err(lines) => Err(Error::Parse {
                line: lines.len() as u64,
                msg: format!("expected 2 lines (row sums, column sums), found {}", lines.len()),
            }),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let join = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(",");
        format!("{}\n{}\n", join(&self.row_sums), join(&self.col_sums))
    }
}

/// Fast repeated Gale–Ryser checks of residual row sums against a column suffix.
///
/// `cap[s][k] = sum_{j >= s} min(c_j, k)` is tabulated once per fiber.
#[derive(Debug, Clone)]
pub(crate) struct ResidualChecker {
    rows: usize,
    cap: Vec<Vec<usize>>,
    suffix_total: Vec<usize>,
}

impl ResidualChecker {
    pub fn new(fiber: &MarginFiber) -> Self {
        let m = fiber.rows();
        let n = fiber.cols();
        let mut cap = vec![vec![0; m + 1]; n + 1];
        let mut suffix_total = vec![0; n + 1];
        for s in (0..n).rev() {
            let c = fiber.col_sums()[s];
            suffix_total[s] = suffix_total[s + 1] + c;
            for k in 0..=m {
                cap[s][k] = cap[s + 1][k] + c.min(k);
            }
        }
        ResidualChecker { rows: m, cap, suffix_total }
    }

    /// Can `residual` rows be completed with columns `start..`? `counts` is scratch.
    pub fn feasible(&self, residual: &[usize], start: usize, counts: &mut Vec<usize>) -> bool {
        let remaining_cols = self.cap.len() - 1 - start;
        let mut total = 0;
        counts.clear();
        counts.resize(remaining_cols + 1, 0);
        for &r in residual {
            if r > remaining_cols {
                return false;
            }
            total += r;
            counts[r] += 1;
        }
        if total != self.suffix_total[start] {
            return false;
        }
        let cap = &self.cap[start];
        let mut k = 0;
        let mut lhs = 0;
        for v in (1..=remaining_cols).rev() {
            for _ in 0..counts[v] {
                k += 1;
                lhs += v;
                if lhs > cap[k] {
                    return false;
                }
            }
        }
        debug_assert!(k <= self.rows);
        true
    }
}

/// Real-valued covariate matrix aligned with a binary matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Covariates {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Covariates {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "{} covariate values for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue("covariates must be finite".into()));
        }
        Ok(Covariates { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut data = Vec::new();
        let mut rows = 0;
        let mut cols = 0;
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            cols = rec.len();
            for f in rec.iter() {
                data.push(
                    f.parse::<f64>().map_err(|e| Error::Parse { line, msg: format!("{f:?}: {e}") })?,
                );
            }
            rows += 1;
        }
        Self::new(rows, cols, data)
    }

    /// `sum_ij v_ij x_ij`
    pub fn dot(&self, x: &BinaryMatrix) -> Result<f64> {
        if x.rows() != self.rows || x.cols() != self.cols {
            return Err(Error::shape("covariates and matrix differ in shape"));
        }
        Ok(self.dot_unchecked(x))
    }

    pub(crate) fn dot_unchecked(&self, x: &BinaryMatrix) -> f64 {
        self.data.iter().zip(&x.data).filter(|(_, &b)| b == 1).map(|(v, _)| v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gale_ryser_small_cases() {
        assert!(gale_ryser_feasible(&[1, 1], &[1, 1]));
        assert!(gale_ryser_feasible(&[2, 0], &[1, 1]));
        assert!(!gale_ryser_feasible(&[2, 0], &[2, 0]));
        assert!(!gale_ryser_feasible(&[3], &[1, 1]));
        assert!(!gale_ryser_feasible(&[1, 1], &[1]));
        assert!(gale_ryser_feasible(&[2, 1, 1], &[2, 1, 1]));
    }

    #[test]
    fn residual_checker_agrees_with_direct_check() {
        let fiber = MarginFiber::new(vec![3, 2, 2, 1, 0], vec![2, 2, 2, 1, 1]).unwrap();
        let chk = ResidualChecker::new(&fiber);
        let mut scratch = Vec::new();
        // exhaustive residual vectors up to 4 per row
        for code in 0..5usize.pow(5) {
            let mut r = Vec::new();
            let mut c = code;
            for _ in 0..5 {
                r.push(c % 5);
                c /= 5;
            }
            for start in 0..=5 {
                let cols = &fiber.col_sums()[start..];
                assert_eq!(chk.feasible(&r, start, &mut scratch), gale_ryser_feasible(&r, cols), "{r:?} {start}");
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let x = BinaryMatrix::from_csv_str("1,0,1\n0,1,1\n").unwrap();
        assert_eq!(x.row_sums(), vec![2, 2]);
        assert_eq!(x.col_sums(), vec![1, 1, 2]);
        assert_eq!(BinaryMatrix::from_csv_str(&x.to_csv_string()).unwrap(), x);
        let f = MarginFiber::from_csv_str("2,2\n1,1,2\n").unwrap();
        assert!(f.contains(&x));
        assert!(matches!(BinaryMatrix::from_csv_str("1,2\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(MarginFiber::from_csv_str("2,0\n2,0\n"), Err(Error::InfeasibleMargins)));
        assert!(MarginFiber::from_csv_str("1,1\n").is_err());
    }
}
