//! Exact maximization of the log-likelihood L(λ) = Σ log g(xᵢ − λ) over a
//! uniform λ grid.
//!
//! Best-first branch and bound over index ranges. On a cell [λa, λb] with
//! pivot λm, L'' ≤ K where K sums, over the samples whose offsets can reach a
//! curvature zone of the model, that zone's bound on s'. Then
//! L(λ) ≤ L(λm) + L'(λm)(λ − λm) + K(λ − λm)²/2. Cells with K = 0 are concave
//! and are solved by bisection on the sign of L'.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::model::LocationModel;

/// The points start + i·step for i < len.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaGrid {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

impl LambdaGrid {
    /// Grid covering [lo, hi] with spacing at most `step`.
    pub fn covering(lo: f64, hi: f64, step: f64) -> Self {
        let len = ((hi - lo) / step).ceil().max(0.0) as usize + 1;
        Self { start: lo, step, len }
    }

    #[inline]
    pub fn at(&self, i: usize) -> f64 {
        self.start + self.step * i as f64
    }
}

/// Grid maximizer and its log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridArgmax {
    pub index: usize,
    pub lambda: f64,
    pub log_lik: f64,
    pub evaluations: usize,
}

struct Problem<'a, M: LocationModel> {
    model: &'a M,
    samples: &'a [f64],
    grid: LambdaGrid,
    evaluations: usize,
}

impl<M: LocationModel> Problem<'_, M> {
    /// (L, L') at grid index i.
    fn eval(&mut self, i: usize) -> (f64, f64) {
        self.evaluations += 1;
        let lambda = self.grid.at(i);
        let mut l = 0.0;
        let mut d = 0.0;
        for &x in self.samples {
            let e = self.model.eval(x - lambda);
            l += e.log_pdf;
            d -= e.score;
        }
        (l, d)
    }

    fn curvature_bound(&self, a: usize, b: usize) -> f64 {
        let (la, lb) = (self.grid.at(a), self.grid.at(b));
        let mut k = 0.0;
        for z in self.model.curvature_zones() {
            let lo = self.samples.partition_point(|&x| x < z.lo + la);
            let hi = self.samples.partition_point(|&x| x <= z.hi + lb);
            if hi > lo {
                k += z.max_deriv * (hi - lo) as f64;
            }
        }
        k
    }
}

struct Cell {
    a: usize,
    b: usize,
    m: usize,
    l: f64,
    d: f64,
    k: f64,
    bound: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound.total_cmp(&other.bound).then_with(|| other.a.cmp(&self.a))
    }
}

fn better(l: f64, i: usize, best: (f64, usize)) -> bool {
    l > best.0 || (l == best.0 && i < best.1)
}

/// Maximizes Σ log g(xᵢ − λ) over the grid. `samples` must be sorted.
pub fn grid_argmax<M: LocationModel>(model: &M, samples: &[f64], grid: LambdaGrid) -> GridArgmax {
    debug_assert!(samples.windows(2).all(|w| w[0] <= w[1]));
    assert!(grid.len > 0, "empty λ grid");
    let mut p = Problem { model, samples, grid, evaluations: 0 };
    if model.has_bounded_support() {
        return brute_force(&mut p);
    }
    let slack = |l: f64| 1e-12 * (l.abs() + samples.len() as f64);

    let make = |p: &mut Problem<'_, M>, a: usize, b: usize| -> Cell {
        let m = a + (b - a) / 2;
        let (l, d) = p.eval(m);
        let k = p.curvature_bound(a, b);
        let (la, lb, lm) = (p.grid.at(a), p.grid.at(b), p.grid.at(m));
        let lin = (d * (la - lm)).max(d * (lb - lm));
        let w = (lm - la).max(lb - lm);
        Cell { a, b, m, l, d, k, bound: l + lin + 0.5 * k * w * w }
    };

    let root = make(&mut p, 0, grid.len - 1);
    let mut best = (root.l, root.m);
    let mut heap = BinaryHeap::new();
    heap.push(root);
    while let Some(cell) = heap.pop() {
        if cell.bound + slack(cell.bound) < best.0 {
            break;
        }
        if better(cell.l, cell.m, best) {
            best = (cell.l, cell.m);
        }
        if cell.k == 0.0 {
            let (l, i) = concave_max(&mut p, &cell);
            if better(l, i, best) {
                best = (l, i);
            }
            continue;
        }
        if cell.m > cell.a {
            let c = make(&mut p, cell.a, cell.m - 1);
            if c.bound + slack(c.bound) >= best.0 {
                heap.push(c);
            }
        }
        if cell.m < cell.b {
            let c = make(&mut p, cell.m + 1, cell.b);
            if c.bound + slack(c.bound) >= best.0 {
                heap.push(c);
            }
        }
    }
    GridArgmax { index: best.1, lambda: grid.at(best.1), log_lik: best.0, evaluations: p.evaluations }
}

/// Maximum of a concave L over the cell's grid points.
fn concave_max<M: LocationModel>(p: &mut Problem<'_, M>, cell: &Cell) -> (f64, usize) {
    // first index with L' ≤ 0; L' is nonincreasing
    let (mut lo, mut hi) = if cell.d > 0.0 { (cell.m + 1, cell.b + 1) } else { (cell.a, cell.m) };
    let mut known = if cell.d > 0.0 { None } else { Some((cell.l, cell.m)) };
    while lo < hi {
        let mid = lo + (hi - lo) / 2;
        let (l, d) = p.eval(mid);
        if d > 0.0 {
            lo = mid + 1;
        } else {
            hi = mid;
            known = Some((l, mid));
        }
    }
    // argmax is lo − 1 or lo
    let mut best: Option<(f64, usize)> = None;
    if lo <= cell.b {
        let l = match known {
            Some((l, i)) if i == lo => l,
            _ => p.eval(lo).0,
        };
        best = Some((l, lo));
    }
    if lo > cell.a {
        let i = lo - 1;
        let l = if i == cell.m { cell.l } else { p.eval(i).0 };
        if best.is_none_or(|b| l >= b.0) {
            best = Some((l, i));
        }
    }
    best.expect("nonempty cell")
}

fn brute_force<M: LocationModel>(p: &mut Problem<'_, M>) -> GridArgmax {
    let mut best = (f64::NEG_INFINITY, 0usize);
    for i in 0..p.grid.len {
        let lambda = p.grid.at(i);
        let mut l = 0.0;
        for &x in p.samples {
            l += p.model.log_pdf(x - lambda);
            if l == f64::NEG_INFINITY {
                break;
            }
        }
        p.evaluations += 1;
        if better(l, i, best) {
            best = (l, i);
        }
    }
    GridArgmax { index: best.1, lambda: p.grid.at(best.1), log_lik: best.0, evaluations: p.evaluations }
}

/// Reference maximizer evaluating every grid point.
pub fn grid_argmax_brute<M: LocationModel>(model: &M, samples: &[f64], grid: LambdaGrid) -> GridArgmax {
    let mut p = Problem { model, samples, grid, evaluations: 0 };
    brute_force(&mut p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Distribution;
    use crate::fixtures::FixtureSpec;
    use crate::model::RawModel;
    use crate::rng::stream;
    use crate::smoothing::smooth;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn gaussian_argmax_is_mean() {
        let m = smooth(&Distribution::standard_normal(), 0.5).unwrap();
        let xs = sorted(vec![-1.0, 3.0, 0.25, 0.5]);
        let grid = LambdaGrid::covering(-5.0, 5.0, 1e-4);
        let r = grid_argmax(&m, &xs, grid);
        assert!((r.lambda - 0.6875).abs() <= 0.5e-4 + 1e-12);
        assert!(r.evaluations < 60);
    }

    #[test]
    fn matches_brute_force_on_spiked_models() {
        let d = FixtureSpec::spiked_laplace().build().unwrap();
        for (seed, r) in [(1u64, 0.01), (2, 0.003), (3, 0.05)] {
            let m = smooth(&d, r).unwrap();
            let xs = sorted(d.sample(40, &mut stream(seed, "bb", &[])));
            let grid = LambdaGrid::covering(xs[0] - 1.0, xs[39] + 1.0, r / 8.0);
            let fast = grid_argmax(&m, &xs, grid);
            let slow = grid_argmax_brute(&m, &xs, grid);
            assert_eq!(fast.index, slow.index, "seed {seed}: {} vs {}", fast.log_lik, slow.log_lik);
        }
    }

    #[test]
    fn matches_brute_force_unsmoothed() {
        let d = FixtureSpec::spiked_laplace().build().unwrap();
        let m = RawModel::new(&d).unwrap();
        // plant samples near the spike so the likelihood has several modes
        let mut xs = d.sample(30, &mut stream(9, "bb", &[]));
        xs.extend([4.0005, 3.9991, 4.0022]);
        let xs = sorted(xs);
        let grid = LambdaGrid::covering(-3.0, 3.0, 0.0005);
        let fast = grid_argmax(&m, &xs, grid);
        let slow = grid_argmax_brute(&m, &xs, grid);
        assert_eq!(fast.index, slow.index);
    }
}
