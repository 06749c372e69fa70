//! Minimization of small polynomial blocks over the unit box and the per-block
//! value tables `ψ(z) = min_x f(x, z)` over binary neighborhood assignments.
//!
//! Quadratics are solved exactly by enumerating the faces of the box and
//! solving the stationarity system of each face over the rationals. Higher
//! degrees go through a numeric solver that combines a uniform grid,
//! projected-gradient polishing and a branch-and-bound refinement whose cell
//! lower bounds come from the Taylor expansion of the polynomial at the cell
//! center; the reported gap bound is certified by those lower bounds.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{format_rational, int, rational_to_f64, Polynomial, Rational};

pub const DEFAULT_QUADRATIC_CAP: usize = 20;
pub const DEFAULT_NUMERIC_CAP: usize = 6;
/// Largest neighborhood tabulated (`2^20` entries).
pub const DEFAULT_TABLE_ARITY_CAP: usize = 20;

/// Iterations of the projected-gradient polish.
pub const POLISH_ITERATIONS: usize = 200;
const ARMIJO: f64 = 1e-4;
const GRID_POINT_BUDGET: usize = 1 << 14;
const REFINE_CELL_BUDGET: usize = 200_000;

/// Position of a coordinate on a face of the box.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FaceCode {
    Zero,
    One,
    Free,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticBoxSolution {
    pub value: Rational,
    pub argmin: Vec<Rational>,
    /// Face the minimizer was found on.
    pub face: Vec<FaceCode>,
}

/// Exact global minimum of a polynomial of degree at most two over `[0,1]^k`.
pub fn solve_quadratic_box(q: &Polynomial) -> Result<QuadraticBoxSolution> {
    solve_quadratic_box_capped(q, DEFAULT_QUADRATIC_CAP)
}

pub fn solve_quadratic_box_capped(q: &Polynomial, cap: usize) -> Result<QuadraticBoxSolution> {
    let k = q.nvars();
    if k > cap {
        return Err(Error::CapExceeded {
            what: "variables for exact box quadratic",
            actual: k,
            cap,
        });
    }
    let parts = q.quadratic_parts()?;
    let qm = &parts.q;
    let c = &parts.c;

    // Free sets J whose Hessian block 2Q_JJ is positive semidefinite. No face
    // with an indefinite block can hold a minimizer in its relative interior,
    // and semidefiniteness is inherited by principal submatrices, so the
    // search stops extending a set once it fails.
    let mut free_sets: Vec<Vec<usize>> = Vec::new();
    let mut stack: Vec<Vec<usize>> = vec![vec![]];
    while let Some(j) = stack.pop() {
        let next_start = j.last().map_or(0, |&l| l + 1);
        for v in next_start..k {
            let mut jj = j.clone();
            jj.push(v);
            if is_psd(&submatrix(qm, &jj)) {
                stack.push(jj);
            }
        }
        free_sets.push(j);
    }

    let results: Vec<Option<Candidate>> = free_sets
        .par_iter()
        .map(|j| best_on_free_set(qm, c, &parts.c0, k, j))
        .collect();
    let best = results
        .into_iter()
        .flatten()
        .min_by(|a, b| a.cmp_key(b))
        .ok_or_else(|| Error::Internal("no vertex evaluated".into()))?;
    Ok(QuadraticBoxSolution {
        value: best.value,
        argmin: best.point,
        face: best.code,
    })
}

struct Candidate {
    value: Rational,
    code: Vec<FaceCode>,
    point: Vec<Rational>,
}

impl Candidate {
    fn cmp_key(&self, other: &Candidate) -> Ordering {
        self.value
            .cmp(&other.value)
            .then_with(|| self.code.cmp(&other.code))
    }
}

fn submatrix(q: &[Vec<Rational>], idx: &[usize]) -> Vec<Vec<Rational>> {
    idx.iter()
        .map(|&a| idx.iter().map(|&b| q[a][b].clone()).collect())
        .collect()
}

/// Exact positive semidefiniteness test by symmetric elimination.
fn is_psd(m: &[Vec<Rational>]) -> bool {
    let mut a: Vec<Vec<Rational>> = m.to_vec();
    let n = a.len();
    let mut alive: Vec<usize> = (0..n).collect();
    while let Some(pos) = alive.iter().position(|&i| !a[i][i].is_zero()) {
        let p = alive[pos];
        if a[p][p].is_negative() {
            return false;
        }
        alive.remove(pos);
        let pivot = a[p][p].clone();
        for &i in &alive {
            if a[i][p].is_zero() {
                continue;
            }
            let f = &a[i][p] / &pivot;
            for &j in &alive {
                let t = &f * &a[p][j];
                a[i][j] -= t;
            }
        }
    }
    // remaining diagonal is zero: rows must vanish
    alive
        .iter()
        .all(|&i| alive.iter().all(|&j| a[i][j].is_zero()))
}

/// Gauss–Jordan reduction `T·A = R` with `R` in reduced row echelon form.
struct Reduced {
    t: Vec<Vec<Rational>>,
    /// pivot column of each nonzero row of `R`, in row order
    pivots: Vec<usize>,
}

fn reduce(a: &[Vec<Rational>]) -> Reduced {
    let n = a.len();
    let mut r: Vec<Vec<Rational>> = a.to_vec();
    let mut t: Vec<Vec<Rational>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { int(1) } else { int(0) }).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..n).find(|&i| !r[i][col].is_zero()) else {
            continue;
        };
        r.swap(row, p);
        t.swap(row, p);
        let inv = Rational::one() / &r[row][col];
        for x in r[row].iter_mut() {
            *x *= &inv;
        }
        for x in t[row].iter_mut() {
            *x *= &inv;
        }
        for i in 0..n {
            if i != row && !r[i][col].is_zero() {
                let f = r[i][col].clone();
                for j in 0..n {
                    let (rr, tt) = (&r[row][j] * &f, &t[row][j] * &f);
                    r[i][j] -= rr;
                    t[i][j] -= tt;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    Reduced { t, pivots }
}

impl Reduced {
    /// `T·b`; the system `A y = b` is consistent iff the entries past the
    /// rank vanish, and then `y[pivots[row]] = (T·b)[row]` with the other
    /// unknowns at zero is a solution.
    fn apply(&self, b: &[Rational]) -> Vec<Rational> {
        self.t
            .iter()
            .map(|row| {
                row.iter()
                    .zip(b)
                    .filter(|(x, y)| !x.is_zero() && !y.is_zero())
                    .fold(Rational::zero(), |acc, (x, y)| acc + x * y)
            })
            .collect()
    }
}

#[cfg(test)]
fn quad_value(q: &[Vec<Rational>], c: &[Rational], c0: &Rational, x: &[Rational]) -> Rational {
    let mut v = c0.clone();
    for i in 0..x.len() {
        if x[i].is_zero() {
            continue;
        }
        let mut row = c[i].clone();
        for j in 0..x.len() {
            if !x[j].is_zero() && !q[i][j].is_zero() {
                row += &q[i][j] * &x[j];
            }
        }
        v += row * &x[i];
    }
    v
}

/// Best stationary point over all faces whose free set is `j`.
///
/// The fixings of the remaining coordinates are visited in Gray-code order so
/// that the right-hand side, the reduced system and the constant part of the
/// face objective change by one rank-one update per step. At a stationary
/// point `y` of `g(y) = yᵀQ_JJ y + rᵀy + s` the value is `rᵀy/2 + s`.
fn best_on_free_set(
    q: &[Vec<Rational>],
    c: &[Rational],
    c0: &Rational,
    k: usize,
    j: &[usize],
) -> Option<Candidate> {
    let fixed: Vec<usize> = (0..k).filter(|v| !j.contains(v)).collect();
    let two = int(2);
    let a: Vec<Vec<Rational>> = submatrix(q, j)
        .into_iter()
        .map(|row| row.into_iter().map(|x| x * &two).collect())
        .collect();
    let red = reduce(&a);
    let rank = red.pivots.len();
    let zero = Rational::zero();
    let one = Rational::one();
    let half = Rational::new(1.into(), 2.into());

    // state for the all-zero fixing
    let mut r: Vec<Rational> = j.iter().map(|&a| c[a].clone()).collect();
    let neg_r: Vec<Rational> = r.iter().map(|x| -x).collect();
    let mut tb = red.apply(&neg_r);
    let mut s = c0.clone();
    // u[b] = 2 Σ_{l fixed at one, l ≠ fixed[b]} q_{fixed[b], l}
    let mut u: Vec<Rational> = vec![Rational::zero(); fixed.len()];
    // change of T·(-r) when fixed[b] switches on
    let deltas: Vec<Vec<Rational>> = fixed
        .iter()
        .map(|&v| {
            let col: Vec<Rational> = j.iter().map(|&a| -(&q[a][v] * &two)).collect();
            red.apply(&col)
        })
        .collect();

    let mut best: Option<Candidate> = None;
    let mut mask = 0u64;
    for step in 0u64..(1u64 << fixed.len()) {
        if step > 0 {
            let b = step.trailing_zeros() as usize;
            let v = fixed[b];
            mask ^= 1 << b;
            let on = mask >> b & 1 == 1;
            let ds = &c[v] + &q[v][v] + &u[b];
            if on {
                s += ds;
            } else {
                s -= ds;
            }
            for (b2, &w) in fixed.iter().enumerate() {
                if b2 != b && !q[w][v].is_zero() {
                    let t = &q[w][v] * &two;
                    if on {
                        u[b2] += t;
                    } else {
                        u[b2] -= t;
                    }
                }
            }
            for (idx, &a) in j.iter().enumerate() {
                if !q[a][v].is_zero() {
                    let t = &q[a][v] * &two;
                    if on {
                        r[idx] += t;
                    } else {
                        r[idx] -= t;
                    }
                }
            }
            for (x, d) in tb.iter_mut().zip(&deltas[b]) {
                if !d.is_zero() {
                    if on {
                        *x += d;
                    } else {
                        *x -= d;
                    }
                }
            }
        }
        if tb[rank..].iter().any(|x| !x.is_zero()) {
            continue;
        }
        if tb[..rank].iter().any(|x| *x < zero || *x > one) {
            continue;
        }
        let mut value = s.clone();
        for (row, &col) in red.pivots.iter().enumerate() {
            if !tb[row].is_zero() && !r[col].is_zero() {
                value += &r[col] * &tb[row] * &half;
            }
        }
        if let Some(b) = &best {
            if value > b.value {
                continue;
            }
        }
        let mut code = vec![FaceCode::Free; k];
        for (b, &v) in fixed.iter().enumerate() {
            code[v] = if mask >> b & 1 == 1 { FaceCode::One } else { FaceCode::Zero };
        }
        if let Some(b) = &best {
            if value == b.value && code >= b.code {
                continue;
            }
        }
        let mut point = vec![Rational::zero(); k];
        for (b, &v) in fixed.iter().enumerate() {
            if mask >> b & 1 == 1 {
                point[v] = one.clone();
            }
        }
        for (row, &col) in red.pivots.iter().enumerate() {
            point[j[col]] = tb[row].clone();
        }
        best = Some(Candidate { value, code, point });
    }
    best
}

/// Dense-exponent float copy of a polynomial for fast evaluation.
#[derive(Clone, Debug)]
pub(crate) struct FloatPoly {
    k: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl FloatPoly {
    pub(crate) fn new(p: &Polynomial) -> Self {
        let k = p.nvars();
        let terms = p
            .terms()
            .map(|(m, c)| {
                let mut e = vec![0u32; k];
                for &(v, x) in m.exps() {
                    e[v] = x;
                }
                (e, rational_to_f64(c))
            })
            .collect();
        FloatPoly { k, terms }
    }

    pub(crate) fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                c * e
                    .iter()
                    .zip(x)
                    .filter(|(&p, _)| p > 0)
                    .map(|(&p, &xi)| xi.powi(p as i32))
                    .product::<f64>()
            })
            .sum()
    }

    pub(crate) fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.k];
        for (e, c) in &self.terms {
            for i in 0..self.k {
                if e[i] == 0 {
                    continue;
                }
                let mut t = c * e[i] as f64;
                for (j, (&p, &xj)) in e.iter().zip(x).enumerate() {
                    let p = if j == i { p - 1 } else { p };
                    if p > 0 {
                        t *= xj.powi(p as i32);
                    }
                }
                g[i] += t;
            }
        }
        g
    }

    /// `Σ |c_α| |α|`, a bound on the 1-norm (hence 2-norm) of the gradient
    /// over the unit box.
    pub(crate) fn gradient_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c.abs() * e.iter().sum::<u32>() as f64)
            .sum()
    }
}

/// Taylor coefficients `b_β(c) = ∂^β f(c) / β!`, each kept as a polynomial in
/// the expansion point `c`, for every multi-index `β ≠ 0` that occurs.
struct TaylorModel {
    f: FloatPoly,
    /// `(|β|, all exponents of β even, b_β)`
    parts: Vec<(i32, bool, FloatPoly)>,
}

impl TaylorModel {
    fn new(f: &FloatPoly) -> Self {
        let k = f.k;
        let mut by_beta: BTreeMap<Vec<u32>, Vec<(Vec<u32>, f64)>> = BTreeMap::new();
        for (e, c) in &f.terms {
            // every β ≤ e
            let mut beta = vec![0u32; k];
            loop {
                let mut j = 0;
                while j < k && beta[j] == e[j] {
                    beta[j] = 0;
                    j += 1;
                }
                if j == k {
                    break;
                }
                beta[j] += 1;
                let mut coef = *c;
                for i in 0..k {
                    coef *= binomial(e[i], beta[i]);
                }
                let rest: Vec<u32> = e.iter().zip(&beta).map(|(a, b)| a - b).collect();
                by_beta.entry(beta.clone()).or_default().push((rest, coef));
            }
        }
        let parts = by_beta
            .into_iter()
            .map(|(beta, terms)| {
                let deg: u32 = beta.iter().sum();
                let even = beta.iter().all(|p| p % 2 == 0);
                (deg as i32, even, FloatPoly { k, terms })
            })
            .collect();
        TaylorModel { f: f.clone(), parts }
    }

    /// Lower bound of `f` over the cube `center ± half`.
    ///
    /// Bounds each nonconstant term of `f(center + t) = Σ b_β t^β` by its
    /// worst value for `|t_j| ≤ half`; terms with all-even exponents are
    /// nonnegative in `t`.
    fn lower_bound(&self, center: &[f64], half: f64) -> f64 {
        let b0 = self.f.eval(center);
        let mut lb = b0;
        let mut scale = b0.abs();
        for (deg, even, poly) in &self.parts {
            let b = poly.eval(center);
            scale += b.abs();
            let r = half.powi(*deg);
            lb += if *even { b.min(0.0) * r } else { -b.abs() * r };
        }
        lb - 1e-12 * (1.0 + scale)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn project(x: &mut [f64]) {
    for v in x.iter_mut() {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Projected gradient descent with backtracking line search.
fn polish(f: &FloatPoly, start: &[f64]) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut fx = f.eval(&x);
    for _ in 0..POLISH_ITERATIONS {
        let g = f.grad(&x);
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let mut y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            project(&mut y);
            let decrease: f64 = g.iter().zip(y.iter().zip(&x)).map(|(gi, (yi, xi))| gi * (yi - xi)).sum();
            if decrease >= 0.0 {
                break;
            }
            let fy = f.eval(&y);
            if fy <= fx + ARMIJO * decrease {
                x = y;
                fx = fy;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (x, fx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NumericBoxSolution {
    pub value: f64,
    pub argmin: Vec<f64>,
    /// Certified bound on `value - min`.
    pub gap_bound: f64,
    /// Grid spacing of the initial uniform stage.
    pub grid_step: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct NumericOptions {
    pub tol: f64,
    /// Points per axis of the initial grid minus one; chosen from the point
    /// budget and the tolerance when `None`.
    pub grid_divisions: Option<usize>,
    pub refine_cell_budget: usize,
    pub cap: usize,
}

impl NumericOptions {
    pub fn with_tol(tol: f64) -> Self {
        NumericOptions {
            tol,
            grid_divisions: None,
            refine_cell_budget: REFINE_CELL_BUDGET,
            cap: DEFAULT_NUMERIC_CAP,
        }
    }
}

/// Approximate minimum of a polynomial over `[0,1]^k` with a certified gap
/// bound; the bound is at most `tol` unless the refinement budget runs out.
pub fn solve_poly_box_numeric(q: &Polynomial, tol: f64) -> Result<NumericBoxSolution> {
    solve_poly_box_numeric_with(q, &NumericOptions::with_tol(tol))
}

pub fn solve_poly_box_numeric_with(q: &Polynomial, opts: &NumericOptions) -> Result<NumericBoxSolution> {
    let k = q.nvars();
    if k > opts.cap {
        return Err(Error::CapExceeded {
            what: "variables for numeric box solve",
            actual: k,
            cap: opts.cap,
        });
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance {} must be positive", opts.tol)));
    }
    let f = FloatPoly::new(q);
    let taylor = TaylorModel::new(&f);
    if k == 0 {
        let v = f.eval(&[]);
        return Ok(NumericBoxSolution {
            value: v,
            argmin: vec![],
            gap_bound: 0.0,
            grid_step: 1.0,
        });
    }
    let lip = f.gradient_bound();
    let sqrt_k = (k as f64).sqrt();
    let divisions = opts.grid_divisions.unwrap_or_else(|| {
        let by_budget = (GRID_POINT_BUDGET as f64).powf(1.0 / k as f64).floor() as usize - 1;
        let by_tol = (lip * sqrt_k / (2.0 * opts.tol)).ceil().max(1.0);
        (by_tol as usize).clamp(1, by_budget.max(1))
    });
    let h = 1.0 / divisions as f64;
    let grid_gap = lip * h * sqrt_k / 2.0;

    // uniform grid
    let per_axis = divisions + 1;
    let total = per_axis.pow(k as u32);
    let mut grid: Vec<(f64, Vec<f64>)> = (0..total)
        .map(|mut idx| {
            let x: Vec<f64> = (0..k)
                .map(|_| {
                    let j = idx % per_axis;
                    idx /= per_axis;
                    j as f64 * h
                })
                .collect();
            (f.eval(&x), x)
        })
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best_x = grid[0].1.clone();
    let mut best_v = grid[0].0;

    let consider = |x: Vec<f64>, v: f64, best_x: &mut Vec<f64>, best_v: &mut f64| {
        if v < *best_v {
            *best_v = v;
            *best_x = x;
        }
    };

    // polish from the best grid points and every vertex
    let mut starts: Vec<Vec<f64>> = grid.iter().take(8).map(|(_, x)| x.clone()).collect();
    for mask in 0..(1usize << k) {
        starts.push((0..k).map(|j| (mask >> j & 1) as f64).collect());
    }
    for s in starts {
        let (x, v) = polish(&f, &s);
        consider(x, v, &mut best_x, &mut best_v);
    }

    // branch-and-bound refinement over the grid cells
    let mut heap: BinaryHeap<Cell> = BinaryHeap::new();
    for idx in 0..divisions.pow(k as u32) {
        let mut r = idx;
        let center: Vec<f64> = (0..k)
            .map(|_| {
                let j = r % divisions;
                r /= divisions;
                (j as f64 + 0.5) * h
            })
            .collect();
        let lb = taylor.lower_bound(&center, h / 2.0);
        heap.push(Cell { lb, center, half: h / 2.0 });
    }
    // smallest lower bound among cells dropped without refinement
    let mut pruned_lb = f64::INFINITY;
    let mut processed = 0;
    while let Some(cell) = heap.peek() {
        if best_v - cell.lb <= opts.tol || processed >= opts.refine_cell_budget {
            break;
        }
        let cell = heap.pop().expect("peeked");
        processed += 1;
        let vc = f.eval(&cell.center);
        if vc < best_v {
            let (x, v) = polish(&f, &cell.center);
            consider(cell.center.clone(), vc, &mut best_x, &mut best_v);
            consider(x, v, &mut best_x, &mut best_v);
        }
        let half = cell.half / 2.0;
        for mask in 0..(1usize << k) {
            let center: Vec<f64> = cell
                .center
                .iter()
                .enumerate()
                .map(|(j, c)| if mask >> j & 1 == 1 { c + half } else { c - half })
                .collect();
            let lb = taylor.lower_bound(&center, half);
            if lb < best_v - opts.tol {
                heap.push(Cell { lb, center, half });
            } else {
                pruned_lb = pruned_lb.min(lb);
            }
        }
    }
    // every part of the box is covered by a queued or a pruned cell
    let global_lb = heap.peek().map_or(pruned_lb, |c| c.lb.min(pruned_lb));
    let certified_gap = (best_v - global_lb).max(0.0);
    Ok(NumericBoxSolution {
        value: best_v,
        argmin: best_x,
        gap_bound: certified_gap.min(grid_gap),
        grid_step: h,
    })
}

struct Cell {
    lb: f64,
    center: Vec<f64>,
    half: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.lb == other.lb
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    // min-heap on the lower bound
    fn cmp(&self, other: &Self) -> Ordering {
        other.lb.total_cmp(&self.lb)
    }
}

/// Minimum over a uniform grid with `divisions` steps per axis.
pub fn grid_minimum(q: &Polynomial, divisions: usize) -> (f64, Vec<f64>) {
    let f = FloatPoly::new(q);
    let k = q.nvars();
    let per_axis = divisions + 1;
    let h = 1.0 / divisions as f64;
    let mut best = (f64::INFINITY, vec![0.0; k]);
    for mut idx in 0..per_axis.pow(k as u32) {
        let x: Vec<f64> = (0..k)
            .map(|_| {
                let j = idx % per_axis;
                idx /= per_axis;
                j as f64 * h
            })
            .collect();
        let v = f.eval(&x);
        if v < best.0 {
            best = (v, x);
        }
    }
    best
}

/// A component objective `f_C(x_C, x_N)` over continuous variables `C` and
/// binary neighbors `N`, in the original variable numbering.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockProblem {
    pub objective: Polynomial,
    pub cont_vars: Vec<usize>,
    pub bin_vars: Vec<usize>,
}

impl BlockProblem {
    /// Objective renumbered to `C` as `0..k` followed by `N` as `k..k+m`.
    pub fn local_objective(&self) -> Result<Polynomial> {
        let mut map = BTreeMap::new();
        for (k, &v) in self.cont_vars.iter().chain(&self.bin_vars).enumerate() {
            map.insert(v, k);
        }
        for (m, _) in self.objective.terms() {
            if let Some(v) = m.support().find(|v| !map.contains_key(v)) {
                return Err(Error::Internal(format!(
                    "block objective mentions x{v} outside its variables"
                )));
            }
        }
        self.objective
            .map_vars(self.cont_vars.len() + self.bin_vars.len(), |v| map[&v])
    }

    /// Local objective restricted to the binary assignment `z` (bit `j` is
    /// the value of `bin_vars[j]`), as a polynomial in `|C|` variables.
    pub fn restricted(&self, local: &Polynomial, z: usize) -> Result<Polynomial> {
        let k = self.cont_vars.len();
        let fix: BTreeMap<usize, Rational> = (0..self.bin_vars.len())
            .map(|j| (k + j, int((z >> j & 1) as i64)))
            .collect();
        local.substitute(&fix)?.with_nvars(k)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Exact,
    Numeric,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PsiEntries {
    Exact {
        values: Vec<Rational>,
        witnesses: Vec<Vec<Rational>>,
    },
    Numeric {
        values: Vec<f64>,
        witnesses: Vec<Vec<f64>>,
        gap_bounds: Vec<f64>,
    },
}

/// `ψ(z)` for every `z ∈ {0,1}^N` with a minimizing `x_C` for each entry.
/// Entry `z` is indexed by the bitmask whose bit `j` is the value of
/// `bin_vars[j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct PsiTable {
    pub cont_vars: Vec<usize>,
    pub bin_vars: Vec<usize>,
    pub entries: PsiEntries,
}

impl PsiTable {
    pub fn arity(&self) -> usize {
        self.bin_vars.len()
    }

    pub fn len(&self) -> usize {
        match &self.entries {
            PsiEntries::Exact { values, .. } => values.len(),
            PsiEntries::Numeric { values, .. } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn value_f64(&self, z: usize) -> f64 {
        match &self.entries {
            PsiEntries::Exact { values, .. } => rational_to_f64(&values[z]),
            PsiEntries::Numeric { values, .. } => values[z],
        }
    }

    /// Largest certified gap over the entries (zero for exact tables).
    pub fn max_gap_bound(&self) -> f64 {
        match &self.entries {
            PsiEntries::Exact { .. } => 0.0,
            PsiEntries::Numeric { gap_bounds, .. } => gap_bounds.iter().copied().fold(0.0, f64::max),
        }
    }

    /// JSON form: entries sorted by `z`, written as a little-endian bit string
    /// (`z[j]` is the value of `bin_vars[j]`).
    pub fn to_json_value(&self) -> serde_json::Value {
        let arity = self.arity();
        let zstr = |z: usize| -> String {
            (0..arity).map(|j| if z >> j & 1 == 1 { '1' } else { '0' }).collect()
        };
        let (mode, entries): (&str, Vec<serde_json::Value>) = match &self.entries {
            PsiEntries::Exact { values, witnesses } => (
                "exact",
                values
                    .iter()
                    .zip(witnesses)
                    .enumerate()
                    .map(|(z, (v, w))| {
                        serde_json::json!({
                            "z": zstr(z),
                            "value": format_rational(v),
                            "witness": w.iter().map(format_rational).collect::<Vec<_>>(),
                        })
                    })
                    .collect(),
            ),
            PsiEntries::Numeric {
                values,
                witnesses,
                gap_bounds,
            } => (
                "numeric",
                values
                    .iter()
                    .zip(witnesses)
                    .zip(gap_bounds)
                    .enumerate()
                    .map(|(z, ((v, w), g))| {
                        serde_json::json!({
                            "z": zstr(z),
                            "value": v,
                            "witness": w,
                            "gap_bound": g,
                        })
                    })
                    .collect(),
            ),
        };
        serde_json::json!({
            "cont_vars": self.cont_vars,
            "bin_vars": self.bin_vars,
            "mode": mode,
            "entries": entries,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TableOptions {
    pub mode: SolveMode,
    pub tol: f64,
    pub arity_cap: usize,
    pub quadratic_cap: usize,
    pub numeric_cap: usize,
}

impl TableOptions {
    pub fn new(mode: SolveMode, tol: f64) -> Self {
        TableOptions {
            mode,
            tol,
            arity_cap: DEFAULT_TABLE_ARITY_CAP,
            quadratic_cap: DEFAULT_QUADRATIC_CAP,
            numeric_cap: DEFAULT_NUMERIC_CAP,
        }
    }
}

/// Tabulates `ψ` for a block, one independent box problem per entry.
pub fn build_psi_table(bp: &BlockProblem, opts: &TableOptions) -> Result<PsiTable> {
    let m = bp.bin_vars.len();
    if m > opts.arity_cap {
        return Err(Error::CapExceeded {
            what: "neighborhood size for tabulation",
            actual: m,
            cap: opts.arity_cap,
        });
    }
    let local = bp.local_objective()?;
    if opts.mode == SolveMode::Exact && local.degree() > 2 {
        return Err(Error::DegreeTooHigh {
            max: 2,
            got: local.degree(),
        });
    }
    let size = 1usize << m;
    let entries = match opts.mode {
        SolveMode::Exact => {
            let solved: Vec<QuadraticBoxSolution> = (0..size)
                .into_par_iter()
                .map(|z| solve_quadratic_box_capped(&bp.restricted(&local, z)?, opts.quadratic_cap))
                .collect::<Result<_>>()?;
            let (values, witnesses) = solved.into_iter().map(|s| (s.value, s.argmin)).unzip();
            PsiEntries::Exact { values, witnesses }
        }
        SolveMode::Numeric => {
            let nopts = NumericOptions {
                cap: opts.numeric_cap,
                ..NumericOptions::with_tol(opts.tol)
            };
            let solved: Vec<NumericBoxSolution> = (0..size)
                .into_par_iter()
                .map(|z| solve_poly_box_numeric_with(&bp.restricted(&local, z)?, &nopts))
                .collect::<Result<_>>()?;
            let mut values = Vec::with_capacity(size);
            let mut witnesses = Vec::with_capacity(size);
            let mut gap_bounds = Vec::with_capacity(size);
            for s in solved {
                values.push(s.value);
                witnesses.push(s.argmin);
                gap_bounds.push(s.gap_bound);
            }
            PsiEntries::Numeric {
                values,
                witnesses,
                gap_bounds,
            }
        }
    };
    Ok(PsiTable {
        cont_vars: bp.cont_vars.clone(),
        bin_vars: bp.bin_vars.clone(),
        entries,
    })
}
