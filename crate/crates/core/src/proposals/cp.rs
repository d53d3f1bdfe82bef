//! Sequential column sampling of binary tables with conditional-Poisson row subsets.

use rand::Rng;

use super::{Draw, Proposal};
use crate::special::log_sum_exp;
use crate::table::{BinaryMatrix, Covariates, MarginFiber, ResidualChecker};
use crate::{Error, Result};

/// Exact log-probability that conditional-Poisson sampling with `weights` picks
/// `subset` among all subsets of the same size.
pub fn conditional_poisson_subset_log_prob(weights: &[f64], subset: &[bool]) -> Result<f64> {
    if weights.len() != subset.len() {
        return Err(Error::shape("weights and subset differ in length"));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(Error::domain("conditional-Poisson weights must be positive and finite"));
    }
    let size = subset.iter().filter(|&&s| s).count();
    let log_w: Vec<f64> = weights.iter().map(|w| w.ln()).collect();
    // log e_k over all items, by the same recursion the sampler uses
    let mut le = vec![f64::NEG_INFINITY; size + 1];
    le[0] = 0.0;
    for &lw in &log_w {
        for k in (1..=size).rev() {
            le[k] = log_sum_exp([le[k], lw + le[k - 1]]);
        }
    }
    let num: f64 = log_w.iter().zip(subset).filter(|(_, &s)| s).map(|(l, _)| l).sum();
    Ok(num - le[size])
}

/// Reusable buffers for [`ColumnSampler`]; one per thread.
#[derive(Debug, Clone, Default)]
pub struct ColumnWorkspace {
    residual: Vec<usize>,
    free: Vec<usize>,
    log_w: Vec<f64>,
    w: Vec<f64>,
    e: Vec<f64>,
    chosen: Vec<bool>,
    counts: Vec<usize>,
}

impl ColumnWorkspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// How a column's row subset is decided: drawn at random or read off a given table.
enum Pick<'r, 'x, R: ?Sized> {
    Draw(&'r mut R),
    Read(&'x BinaryMatrix),
}

/// Columns are filled left to right. In column `j` a row with residual sum `r` gets
/// inclusion weight `r / (n - r)` where `n` is the number of columns still open,
/// optionally times `exp(theta * v_ij)`. Rows with `r = n` are forced in.
#[derive(Debug, Clone)]
pub struct ColumnSampler<'a> {
    fiber: &'a MarginFiber,
    tilt: Option<(&'a Covariates, f64)>,
    checker: ResidualChecker,
}

impl<'a> ColumnSampler<'a> {
    pub fn new(fiber: &'a MarginFiber) -> Self {
        ColumnSampler { fiber, tilt: None, checker: ResidualChecker::new(fiber) }
    }

    pub fn tilted(fiber: &'a MarginFiber, covariates: &'a Covariates, theta: f64) -> Result<Self> {
        if covariates.rows() != fiber.rows() || covariates.cols() != fiber.cols() {
            return Err(Error::shape(format!(
                "covariates are {}x{}, fiber is {}x{}",
                covariates.rows(),
                covariates.cols(),
                fiber.rows(),
                fiber.cols()
            )));
        }
        if !theta.is_finite() {
            return Err(Error::domain("tilt must be finite"));
        }
        Ok(ColumnSampler { fiber, tilt: Some((covariates, theta)), checker: ResidualChecker::new(fiber) })
    }

    pub fn fiber(&self) -> &MarginFiber {
        self.fiber
    }

    pub fn theta(&self) -> f64 {
        self.tilt.map_or(0.0, |(_, t)| t)
    }

    /// Fills `out` with a draw and returns its log-probability, or `None` on a dead end
    /// (then `out` holds a partial table).
    pub fn sample_into<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        out: &mut BinaryMatrix,
        ws: &mut ColumnWorkspace,
    ) -> Option<f64> {
        if out.rows() != self.fiber.rows() || out.cols() != self.fiber.cols() {
            *out = BinaryMatrix::zeros(self.fiber.rows(), self.fiber.cols());
        } else {
            out.clear();
        }
        let mut pick = Pick::Draw(rng);
        self.walk(&mut pick, out, ws)
    }

    /// Exact log-probability of producing `x`.
    pub fn log_prob_in(&self, x: &BinaryMatrix, ws: &mut ColumnWorkspace) -> Result<f64> {
        self.fiber.check_contains(x)?;
        let mut scratch = BinaryMatrix::zeros(x.rows(), x.cols());
        let mut pick: Pick<'_, '_, crate::rng::StreamRng> = Pick::Read(x);
        Ok(self.walk(&mut pick, &mut scratch, ws).unwrap_or(f64::NEG_INFINITY))
    }

    fn walk<R: Rng + ?Sized>(
        &self,
        pick: &mut Pick<'_, '_, R>,
        out: &mut BinaryMatrix,
        ws: &mut ColumnWorkspace,
    ) -> Option<f64> {
        let ncols = self.fiber.cols();
        ws.residual.clear();
        ws.residual.extend_from_slice(self.fiber.row_sums());
        let mut log_q = 0.0;
        for j in 0..ncols {
            log_q += self.column(j, pick, out, ws)?;
            if !self.checker.feasible(&ws.residual, j + 1, &mut ws.counts) {
                return None;
            }
        }
        Some(log_q)
    }

    fn column<R: Rng + ?Sized>(
        &self,
        j: usize,
        pick: &mut Pick<'_, '_, R>,
        out: &mut BinaryMatrix,
        ws: &mut ColumnWorkspace,
    ) -> Option<f64> {
        let open = self.fiber.cols() - j;
        let c = self.fiber.col_sums()[j];
        ws.free.clear();
        ws.log_w.clear();
        let mut forced = 0;
        for (i, &r) in ws.residual.iter().enumerate() {
            if r == 0 {
                continue;
            }
            if r >= open {
                forced += 1;
                out.set(i, j, true);
                continue;
            }
            let mut lw = (r as f64).ln() - ((open - r) as f64).ln();
            if let Some((v, theta)) = self.tilt {
                if theta != 0.0 {
                    lw += theta * v.get(i, j);
                }
            }
            ws.free.push(i);
            ws.log_w.push(lw);
        }
        if forced > c || ws.free.len() < c - forced {
            return None;
        }
        let need = c - forced;
        let nfree = ws.free.len();
        let max = ws.log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for lw in ws.log_w.iter_mut() {
            *lw -= max;
        }
        // e[i * (need+1) + k] = e_k(w_i, ..., w_{nfree-1})
        let width = need + 1;
        ws.e.clear();
        ws.e.resize((nfree + 1) * width, 0.0);
        ws.w.clear();
        ws.w.extend(ws.log_w.iter().map(|l| l.exp()));
        let log_space = !fill_table(&mut ws.e, &ws.w, width);
        if log_space {
            fill_log_table(&mut ws.e, &ws.log_w, width);
        }

        ws.chosen.clear();
        ws.chosen.resize(nfree, false);
        let mut k = need;
        for a in 0..nfree {
            if k == 0 {
                break;
            }
            let here = a * width;
            let next = (a + 1) * width;
            let take = match pick {
                Pick::Draw(rng) => {
                    let p = if log_space {
                        (ws.log_w[a] + ws.e[next + k - 1] - ws.e[here + k]).exp()
                    } else {
                        ws.w[a] * ws.e[next + k - 1] / ws.e[here + k]
                    };
                    let u: f64 = rng.random();
                    u < p
                }
                Pick::Read(x) => x.get(ws.free[a], j),
            };
            if take {
                ws.chosen[a] = true;
                k -= 1;
            }
        }
        if k != 0 {
            return None;
        }
        let mut num = 0.0;
        for a in 0..nfree {
            if ws.chosen[a] {
                num += ws.log_w[a];
                out.set(ws.free[a], j, true);
            }
        }
        let total = if log_space { ws.e[need] } else { ws.e[need].ln() };
        for i in 0..ws.residual.len() {
            if out.get(i, j) {
                ws.residual[i] -= 1;
            }
        }
        Some(num - total)
    }
}

/// Elementary symmetric sums of suffixes; `false` if the top entry under- or overflowed.
fn fill_table(e: &mut [f64], w: &[f64], width: usize) -> bool {
    let n = w.len();
    e[n * width] = 1.0;
    for a in (0..n).rev() {
        let (here, next) = e[a * width..].split_at_mut(width);
        here[0] = 1.0;
        for k in 1..width {
            here[k] = next[k] + w[a] * next[k - 1];
        }
    }
    let top = e[width - 1];
    top.is_finite() && top > f64::MIN_POSITIVE
}

fn fill_log_table(e: &mut [f64], log_w: &[f64], width: usize) {
    let n = log_w.len();
    e.fill(f64::NEG_INFINITY);
    e[n * width] = 0.0;
    for a in (0..n).rev() {
        let (here, next) = e[a * width..].split_at_mut(width);
        here[0] = 0.0;
        for k in 1..width {
            here[k] = log_sum_exp([next[k], log_w[a] + next[k - 1]]);
        }
    }
}

impl Proposal for ColumnSampler<'_> {
    type Point = BinaryMatrix;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Draw<BinaryMatrix>> {
        let mut out = BinaryMatrix::zeros(self.fiber.rows(), self.fiber.cols());
        let mut ws = ColumnWorkspace::new();
        Ok(match self.sample_into(rng, &mut out, &mut ws) {
            Some(log_q) => Draw::Point { point: out, log_q },
            None => Draw::DeadEnd,
        })
    }

    fn log_prob(&self, point: &BinaryMatrix) -> Result<f64> {
        self.log_prob_in(point, &mut ColumnWorkspace::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::table::gale_ryser_feasible;

    /// Brute-force conditional-Poisson probability over all subsets of the same size.
    fn brute_subset_prob(w: &[f64], subset: &[bool]) -> f64 {
        let size = subset.iter().filter(|&&s| s).count();
        let n = w.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == size {
                total += (0..n).filter(|&i| mask >> i & 1 == 1).map(|i| w[i]).product::<f64>();
            }
        }
        let num: f64 = (0..n).filter(|&i| subset[i]).map(|i| w[i]).product();
        num / total
    }

    #[test]
    fn subset_probability_matches_brute_force() {
        let w = [0.3, 2.0, 1.0, 5.5, 0.01];
        for mask in 0u32..32 {
            let s: Vec<bool> = (0..5).map(|i| mask >> i & 1 == 1).collect();
            let got = conditional_poisson_subset_log_prob(&w, &s).unwrap().exp();
            assert!((got - brute_subset_prob(&w, &s)).abs() < 1e-13);
        }
        assert!(conditional_poisson_subset_log_prob(&[1.0, 0.0], &[true, false]).is_err());
    }

    #[test]
    fn two_by_two_is_fair() {
        let fiber = MarginFiber::new(vec![1, 1], vec![1, 1]).unwrap();
        let s = ColumnSampler::new(&fiber);
        let a = BinaryMatrix::from_rows(&[vec![1, 0], vec![0, 1]]).unwrap();
        let b = BinaryMatrix::from_rows(&[vec![0, 1], vec![1, 0]]).unwrap();
        for x in [a, b] {
            assert!((s.log_prob(&x).unwrap() - 0.5f64.ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn forced_table_has_probability_one() {
        let fiber = MarginFiber::new(vec![2, 0], vec![1, 1]).unwrap();
        let s = ColumnSampler::new(&fiber);
        let mut rng = stream(1, 0);
        let d = s.sample(&mut rng).unwrap();
        assert_eq!(d.log_q(), Some(0.0));
        assert_eq!(d.point().unwrap().row(0), &[1, 1]);
    }

    #[test]
    fn not_in_fiber() {
        let fiber = MarginFiber::new(vec![1, 1], vec![1, 1]).unwrap();
        let s = ColumnSampler::new(&fiber);
        let x = BinaryMatrix::from_rows(&[vec![1, 1], vec![0, 0]]).unwrap();
        assert!(matches!(s.log_prob(&x), Err(Error::NotInFiber(_))));
    }

    /// Walks every branch of the sequential sampler with brute-force subset
    /// probabilities; returns (table probabilities, dead-end mass).
    fn tree_walk(fiber: &MarginFiber, v: Option<(&Covariates, f64)>) -> (Vec<(BinaryMatrix, f64)>, f64) {
        fn rec(
            fiber: &MarginFiber,
            v: Option<(&Covariates, f64)>,
            j: usize,
            residual: Vec<usize>,
            x: BinaryMatrix,
            p: f64,
            tables: &mut Vec<(BinaryMatrix, f64)>,
            dead: &mut f64,
        ) {
            let n = fiber.cols();
            if j == n {
                tables.push((x, p));
                return;
            }
            let open = n - j;
            let c = fiber.col_sums()[j];
            let m = fiber.rows();
            let forced: Vec<usize> = (0..m).filter(|&i| residual[i] == open).collect();
            let free: Vec<usize> = (0..m).filter(|&i| residual[i] > 0 && residual[i] < open).collect();
            if forced.len() > c || free.len() < c - forced.len() {
                *dead += p;
                return;
            }
            let w: Vec<f64> = free
                .iter()
                .map(|&i| {
                    let r = residual[i] as f64;
                    r / (open as f64 - r) * v.map_or(1.0, |(cv, t)| (t * cv.get(i, j)).exp())
                })
                .collect();
            let need = c - forced.len();
            for mask in 0u32..(1 << free.len()) {
                if mask.count_ones() as usize != need {
                    continue;
                }
                let s: Vec<bool> = (0..free.len()).map(|a| mask >> a & 1 == 1).collect();
                let q = brute_subset_prob(&w, &s);
                let mut y = x.clone();
                let mut res = residual.clone();
                for &i in &forced {
                    y.set(i, j, true);
                    res[i] -= 1;
                }
                for (a, &i) in free.iter().enumerate() {
                    if s[a] {
                        y.set(i, j, true);
                        res[i] -= 1;
                    }
                }
                let rest: Vec<usize> = fiber.col_sums()[j + 1..].to_vec();
                if gale_ryser_feasible(&res, &rest) {
                    rec(fiber, v, j + 1, res, y, p * q, tables, dead);
                } else {
                    *dead += p * q;
                }
            }
        }
        let mut tables = Vec::new();
        let mut dead = 0.0;
        let x = BinaryMatrix::zeros(fiber.rows(), fiber.cols());
        rec(fiber, v, 0, fiber.row_sums().to_vec(), x, 1.0, &mut tables, &mut dead);
        (tables, dead)
    }

    #[test]
    fn three_by_three_normalizes_with_dead_ends() {
        let fiber = MarginFiber::new(vec![2, 1, 1], vec![2, 1, 1]).unwrap();
        let v = Covariates::new(3, 3, vec![0.5, -1.0, 0.2, 1.0, 0.0, -0.3, -0.7, 0.9, 0.4]).unwrap();
        for theta in [0.0, 1.5] {
            let s = ColumnSampler::tilted(&fiber, &v, theta).unwrap();
            let (tables, dead) = tree_walk(&fiber, Some((&v, theta)));
            let mut total = dead;
            for (x, p) in &tables {
                let lp = s.log_prob(x).unwrap();
                assert!((lp.exp() - p).abs() < 1e-13, "{x:?}: {} vs {p}", lp.exp());
                total += lp.exp();
            }
            assert!((total - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_log_q_is_reproduced_exactly() {
        let fiber = MarginFiber::new(vec![3, 2, 2, 1, 4], vec![2, 3, 1, 3, 2, 1]).unwrap();
        let v = Covariates::new(5, 6, (0..30).map(|k| ((k * 7) % 11) as f64 / 5.0 - 1.0).collect()).unwrap();
        let s = ColumnSampler::tilted(&fiber, &v, 2.0).unwrap();
        let mut rng = stream(2, 0);
        let mut ws = ColumnWorkspace::new();
        let mut x = BinaryMatrix::zeros(5, 6);
        let mut seen = 0;
        for _ in 0..500 {
            if let Some(lq) = s.sample_into(&mut rng, &mut x, &mut ws) {
                assert!(fiber.contains(&x));
                assert_eq!(lq, s.log_prob_in(&x, &mut ws).unwrap());
                seen += 1;
            }
        }
        assert!(seen > 0);
    }

    #[test]
    fn zero_tilt_is_bitwise_untilted() {
        let fiber = MarginFiber::new(vec![3, 2, 2, 1, 4], vec![2, 3, 1, 3, 2, 1]).unwrap();
        let v = Covariates::new(5, 6, vec![0.7; 30]).unwrap();
        let plain = ColumnSampler::new(&fiber);
        let tilted = ColumnSampler::tilted(&fiber, &v, 0.0).unwrap();
        let (mut r1, mut r2) = (stream(9, 0), stream(9, 0));
        for _ in 0..200 {
            assert_eq!(plain.sample(&mut r1).unwrap(), tilted.sample(&mut r2).unwrap());
        }
    }

    #[test]
    fn log_space_fallback_agrees() {
        let w = [1.0, 0.5, 0.25, 2.0];
        let lw: Vec<f64> = w.iter().map(|x: &f64| x.ln()).collect();
        let width = 3;
        let mut e = vec![0.0; 5 * width];
        let mut le = vec![0.0; 5 * width];
        assert!(fill_table(&mut e, &w, width));
        fill_log_table(&mut le, &lw, width);
        for (a, b) in e.iter().zip(&le) {
            if *a == 0.0 {
                assert_eq!(*b, f64::NEG_INFINITY);
            } else {
                assert!((a.ln() - b).abs() < 1e-14);
            }
        }
    }
}
