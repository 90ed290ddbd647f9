//! The update steps and the driver that iterates them.
//!
//! One simultaneous step is `Q(t+1) = Q*(P*(Q(t)))`, which in matrix form reads
//!
//! ```text
//! Q-'(i,l) = Q-(i,l) sum_j Q+(l,j) P(i,j) / (Q- Q+)(i,j)
//! Q+'(l,j) ∝ Q+(l,j) sum_i Q-(i,l) P(i,j) / (Q- Q+)(i,j)     (rows normalized)
//! ```
//!
//! The sequential variant feeds the new `Q-` into the `Q+` update. The
//! unnormalized variant runs the same recursion on `(W, H)` against the raw
//! data and is reported through its normalized image `(W / sum W, H)`.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::divergence::{idiv, idiv_slices, ExtendedReal};
use crate::error::{Error, Result};
use crate::lifted::{best_p_tensor, normalize_row, tensor_from_pair};
use crate::matrix::{NonnegMatrix, ProbMatrix};
use crate::pair::FactorPair;
use crate::problem::{denormalize_solution, normalize_problem};

/// Lower end of the uniform draw used by [`init_random`].
pub const RANDOM_INIT_FLOOR: f64 = 1e-6;

/// A `Q-` column whose mass is at or below this is counted as dead.
pub const DEAD_COLUMN_MASS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// Both factors updated from the same iterate.
    Simultaneous,
    /// `Q-` first, then `Q+` using the new `Q-`.
    Sequential,
    /// The original recursion on `(W, H)` against the unnormalized data.
    Unnormalized,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Simultaneous => "simultaneous",
            Variant::Sequential => "sequential",
            Variant::Unnormalized => "unnormalized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Init {
    Deterministic,
    Random,
}

impl Init {
    pub fn as_str(self) -> &'static str {
        match self {
            Init::Deterministic => "deterministic",
            Init::Random => "random",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub inner_size: usize,
    pub max_iters: usize,
    /// Stop once `gain <= tol_gain * max(1, divergence)`.
    pub tol_gain: f64,
    pub variant: Variant,
    pub init: Init,
    /// Only read when `init` is [`Init::Random`].
    pub seed: u64,
    /// Compute the two gain components on every step.
    pub record_components: bool,
    /// Halt with [`Status::Underflow`] when the model vanishes on the data's support.
    pub underflow_guard: bool,
}

impl SolverConfig {
    pub fn new(inner_size: usize) -> Self {
        Self {
            inner_size,
            max_iters: 1000,
            tol_gain: 1e-10,
            variant: Variant::Simultaneous,
            init: Init::Deterministic,
            seed: 0,
            record_components: false,
            underflow_guard: true,
        }
    }

    pub fn validate(&self, rows: usize, cols: usize) -> Result<()> {
        if self.inner_size == 0 || self.inner_size > rows.min(cols) {
            return Err(Error::InvalidInnerSize {
                k: self.inner_size,
                rows,
                cols,
            });
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1"));
        }
        if !(self.tol_gain.is_finite() && self.tol_gain > 0.0) {
            return Err(Error::InvalidConfig("tol_gain must be finite and positive"));
        }
        Ok(())
    }
}

/// One step of the trace: the iterate `t` and what the step to `t + 1` gained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// `D(P||Q(t))`.
    pub divergence: f64,
    /// `D(P||Q(t)) - D(P||Q(t+1))`.
    pub gain: f64,
    /// Gain of the marginal-set projections, `D(P(t)||P(t+1))`.
    pub gain_p: Option<f64>,
    /// Gain of the product-set projections, `D(Q(t+1)||Q(t))`.
    pub gain_q: Option<f64>,
    /// `|gain - gain_p - gain_q|`.
    pub gain_residual: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Converged,
    MaxIters,
    Underflow,
    /// An observer passed to [`solve_with`] stopped the run.
    Aborted,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Converged => "converged",
            Status::MaxIters => "max_iters",
            Status::Underflow => "underflow",
            Status::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    /// Final normalized iterate.
    pub pair: FactorPair,
    pub trace: Vec<IterationRecord>,
    pub status: Status,
    /// `D(P||Q- Q+)` at the final iterate.
    pub final_divergence: ExtendedReal,
    /// Number of `Q-` columns with mass above [`DEAD_COLUMN_MASS`].
    pub effective_inner_size: usize,
    /// Sum of the input matrix, the factor that maps `Q-` to `W`.
    pub total: f64,
}

impl SolveResult {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    /// Indices `l` of dead `Q-` columns.
    pub fn dead_columns(&self) -> Vec<usize> {
        dead_columns(&self.pair)
    }

    /// `(W, H)` with `W = total * Q-`.
    pub fn factors(&self) -> (NonnegMatrix, NonnegMatrix) {
        denormalize_solution(&self.pair, self.total).expect("total is positive")
    }
}

pub(crate) fn dead_columns(pair: &FactorPair) -> Vec<usize> {
    pair.column_masses()
        .iter()
        .enumerate()
        .filter(|(_, &mass)| mass <= DEAD_COLUMN_MASS)
        .map(|(l, _)| l)
        .collect()
}

fn check_inner_size(v: &NonnegMatrix, k: usize) -> Result<()> {
    if k == 0 || k > v.rows().min(v.cols()) {
        return Err(Error::InvalidInnerSize {
            k,
            rows: v.rows(),
            cols: v.cols(),
        });
    }
    if !v.has_positive_entry() {
        return Err(Error::DegenerateInput);
    }
    Ok(())
}

/// The existence-proof starting point `W = (1/k) V e e'`, `H = e e' V / (e'Ve)`,
/// normalized: every column of `Q-` is the row sums of `P` divided by `k`, and
/// every row of `Q+` is the column sums of `P`.
pub fn init_deterministic(v: &NonnegMatrix, k: usize) -> Result<FactorPair> {
    check_inner_size(v, k)?;
    let total = v.sum();
    let scale = k as f64 * total;
    let mut qminus = Vec::with_capacity(v.rows() * k);
    for row_sum in v.row_sums() {
        qminus.extend(core::iter::repeat_n(row_sum / scale, k));
    }
    let row: Vec<f64> = v.col_sums().iter().map(|c| c / total).collect();
    let mut qplus = Vec::with_capacity(k * v.cols());
    for _ in 0..k {
        qplus.extend_from_slice(&row);
    }
    Ok(FactorPair::from_parts(
        NonnegMatrix::from_parts(v.rows(), k, qminus),
        NonnegMatrix::from_parts(k, v.cols(), qplus),
    ))
}

/// A strictly positive random start: entries uniform on `[1e-6, 1)` from a
/// ChaCha8 stream seeded with `seed` (`Q-` row-major first, then `Q+`), then
/// `Q-` scaled to unit mass and each `Q+` row to unit sum.
pub fn init_random(v: &NonnegMatrix, k: usize, seed: u64) -> Result<FactorPair> {
    check_inner_size(v, k)?;
    let (m, n) = v.shape();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut qminus: Vec<f64> = (0..m * k)
        .map(|_| rng.random_range(RANDOM_INIT_FLOOR..1.0))
        .collect();
    let mut qplus: Vec<f64> = (0..k * n)
        .map(|_| rng.random_range(RANDOM_INIT_FLOOR..1.0))
        .collect();
    normalize_row(&mut qminus);
    for row in qplus.chunks_exact_mut(n) {
        normalize_row(row);
    }
    Ok(FactorPair::from_parts(
        NonnegMatrix::from_parts(m, k, qminus),
        NonnegMatrix::from_parts(k, n, qplus),
    ))
}

/// `data / model` entrywise with `0/0 = 0`. A zero model entry against
/// positive data is an error when `guard` is set and contributes zero
/// otherwise.
fn ratio(data: &NonnegMatrix, model: &NonnegMatrix, guard: bool) -> Result<Vec<f64>> {
    let n = data.cols();
    let mut out = Vec::with_capacity(data.as_slice().len());
    for (idx, (&d, &q)) in data.as_slice().iter().zip(model.as_slice()).enumerate() {
        if q > 0.0 {
            out.push(d / q);
        } else if d > 0.0 && guard {
            return Err(Error::Underflow {
                row: idx / n,
                col: idx % n,
            });
        } else {
            out.push(0.0);
        }
    }
    Ok(out)
}

/// `left(i,l) * sum_j right(l,j) r(i,j)`.
fn update_left(left: &NonnegMatrix, right: &NonnegMatrix, r: &[f64]) -> NonnegMatrix {
    let (m, k) = left.shape();
    let n = right.cols();
    let mut out = vec![0.0; m * k];
    for i in 0..m {
        let r_row = &r[i * n..(i + 1) * n];
        for l in 0..k {
            let dot: f64 = right.row(l).iter().zip(r_row).map(|(h, x)| h * x).sum();
            out[i * k + l] = left.get(i, l) * dot;
        }
    }
    NonnegMatrix::from_parts(m, k, out)
}

/// `right(l,j) * sum_i left(i,l) r(i,j)`, rows scaled to unit sum.
fn update_right(left: &NonnegMatrix, right: &NonnegMatrix, r: &[f64]) -> NonnegMatrix {
    let (m, k) = left.shape();
    let n = right.cols();
    let mut acc = vec![0.0; k * n];
    for i in 0..m {
        let r_row = &r[i * n..(i + 1) * n];
        for l in 0..k {
            let w = left.get(i, l);
            for (a, x) in acc[l * n..(l + 1) * n].iter_mut().zip(r_row) {
                *a += w * x;
            }
        }
    }
    for (a, h) in acc.iter_mut().zip(right.as_slice()) {
        *a *= h;
    }
    for row in acc.chunks_exact_mut(n) {
        normalize_row(row);
    }
    NonnegMatrix::from_parts(k, n, acc)
}

/// Unguarded steps drop the data mass that falls where the model vanishes;
/// rescale `Q-` back to unit mass in that case.
fn restore_mass(qminus: NonnegMatrix, guard: bool) -> NonnegMatrix {
    if guard {
        return qminus;
    }
    let (rows, cols) = qminus.shape();
    let mut data = qminus.into_vec();
    normalize_row(&mut data);
    NonnegMatrix::from_parts(rows, cols, data)
}

fn check_problem_shape(p: &ProbMatrix, pair: &FactorPair) -> Result<()> {
    let shape = pair.outer_shape();
    if (p.rows(), p.cols()) != shape {
        return Err(Error::ShapeMismatch {
            expected: shape,
            found: (p.rows(), p.cols()),
        });
    }
    Ok(())
}

pub(crate) fn simultaneous(p: &ProbMatrix, pair: &FactorPair, guard: bool) -> Result<FactorPair> {
    check_problem_shape(p, pair)?;
    let r = ratio(p.matrix(), &pair.product(), guard)?;
    let qminus = restore_mass(update_left(pair.qminus(), pair.qplus(), &r), guard);
    let qplus = update_right(pair.qminus(), pair.qplus(), &r);
    Ok(FactorPair::from_parts(qminus, qplus))
}

/// Returns the half step `(Q-', Q+)` and the full step `(Q-', Q+')`.
pub(crate) fn sequential(
    p: &ProbMatrix,
    pair: &FactorPair,
    guard: bool,
) -> Result<(FactorPair, FactorPair)> {
    check_problem_shape(p, pair)?;
    let r = ratio(p.matrix(), &pair.product(), guard)?;
    let qminus = restore_mass(update_left(pair.qminus(), pair.qplus(), &r), guard);
    let half = FactorPair::from_parts(qminus, pair.qplus().clone());
    let r = ratio(p.matrix(), &half.product(), guard)?;
    let qplus = update_right(half.qminus(), half.qplus(), &r);
    let full = FactorPair::from_parts(half.qminus().clone(), qplus);
    Ok((half, full))
}

/// One simultaneous update of both factors.
pub fn step_simultaneous(p: &ProbMatrix, pair: &FactorPair) -> Result<FactorPair> {
    simultaneous(p, pair, true)
}

/// `Q-` update followed by a `Q+` update that uses the new `Q-`.
pub fn step_sequential(p: &ProbMatrix, pair: &FactorPair) -> Result<FactorPair> {
    sequential(p, pair, true).map(|(_, full)| full)
}

pub(crate) fn unnormalized(
    v: &NonnegMatrix,
    w: &NonnegMatrix,
    h: &NonnegMatrix,
    guard: bool,
) -> Result<(NonnegMatrix, NonnegMatrix)> {
    if w.cols() != h.rows() || (w.rows(), h.cols()) != v.shape() {
        return Err(Error::ShapeMismatch {
            expected: v.shape(),
            found: (w.rows(), h.cols()),
        });
    }
    let r = ratio(v, &w.matmul(h)?, guard)?;
    Ok((update_left(w, h, &r), update_right(w, h, &r)))
}

/// The multiplicative update on raw factors:
/// `W'(i,l) = W(i,l) sum_j H(l,j) V(i,j) / (WH)(i,j)` and `H'` the row-normalized
/// `H(l,j) sum_i W(i,l) V(i,j) / (WH)(i,j)`.
///
/// After one step `W'e = Ve` and `H'e = e`.
pub fn step_unnormalized(
    v: &NonnegMatrix,
    w: &NonnegMatrix,
    h: &NonnegMatrix,
) -> Result<(NonnegMatrix, NonnegMatrix)> {
    unnormalized(v, w, h, true)
}

/// `D(P||Q- Q+)`.
pub fn objective(p: &ProbMatrix, pair: &FactorPair) -> Result<ExtendedReal> {
    check_problem_shape(p, pair)?;
    Ok(ExtendedReal::new(idiv_slices(p.matrix().as_slice(), pair.product().as_slice()))
        .unwrap_or(ExtendedReal::INFINITY))
}

/// The exact split of one step's gain into its two projection gains.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainComponents {
    pub gain: f64,
    pub gain_p: f64,
    pub gain_q: f64,
    /// `|gain - gain_p - gain_q|`.
    pub residual: f64,
}

impl GainComponents {
    fn new(gain: f64, gain_p: f64, gain_q: f64) -> Self {
        Self {
            gain,
            gain_p,
            gain_q,
            residual: libm::fabs(gain - gain_p - gain_q),
        }
    }
}

/// Splits the gain of a simultaneous step from `pair_t` to `pair_t1` into
/// `D(P*(Q(t))||P*(Q(t+1)))` and `D(Q(t+1)||Q(t))`.
///
/// If `pair_t1` is not the step from `pair_t` the residual is large; it is
/// reported, not raised.
pub fn gain_components(
    p: &ProbMatrix,
    pair_t: &FactorPair,
    pair_t1: &FactorPair,
) -> Result<GainComponents> {
    let d_t = objective(p, pair_t)?.value();
    let d_t1 = objective(p, pair_t1)?.value();
    let q_t = tensor_from_pair(pair_t);
    let q_t1 = tensor_from_pair(pair_t1);
    let p_t = best_p_tensor(p, &q_t)?;
    let p_t1 = best_p_tensor(p, &q_t1)?;
    let gain_p = idiv_slices(p_t.as_slice(), p_t1.as_slice());
    let gain_q = idiv_slices(q_t1.as_slice(), q_t.as_slice());
    Ok(GainComponents::new(d_t - d_t1, gain_p, gain_q))
}

/// Gain split for a sequential step `pair_t -> half -> pair_t1`.
///
/// Each half step is a partial minimization of the auxiliary function, so its
/// gain is the posterior term `D(P*(Q_a)||P*(Q_b))` plus the closed-form
/// auxiliary gap: `sum Q-' log(Q-'/Q-)` for the first half and
/// `sum_l w_l KL(Q+'(l,.)||Q+(l,.))` with `w_l` the `l`-mass of `P*(Q_half)`
/// for the second. The components are the sums over both halves. Both gaps
/// compare probability vectors, so they are summed as I-divergence terms,
/// which are nonnegative one by one.
pub fn sequential_gain_components(
    p: &ProbMatrix,
    pair_t: &FactorPair,
    half: &FactorPair,
    pair_t1: &FactorPair,
) -> Result<GainComponents> {
    let d_t = objective(p, pair_t)?.value();
    let d_t1 = objective(p, pair_t1)?.value();
    let p_t = best_p_tensor(p, &tensor_from_pair(pair_t))?;
    let p_half = best_p_tensor(p, &tensor_from_pair(half))?;
    let p_t1 = best_p_tensor(p, &tensor_from_pair(pair_t1))?;
    let gain_p = idiv_slices(p_t.as_slice(), p_half.as_slice())
        + idiv_slices(p_half.as_slice(), p_t1.as_slice());

    let first: f64 = half
        .qminus()
        .as_slice()
        .iter()
        .zip(pair_t.qminus().as_slice())
        .map(|(&a, &b)| idiv(a, b))
        .sum();
    let weights = p_half.slice_masses();
    let n = pair_t1.qplus().cols();
    let mut second = 0.0;
    for (l, w) in weights.iter().enumerate() {
        let row_kl: f64 = (0..n)
            .map(|j| idiv(pair_t1.qplus().get(l, j), half.qplus().get(l, j)))
            .sum();
        second += w * row_kl;
    }
    Ok(GainComponents::new(d_t - d_t1, gain_p, first + second))
}

/// What an observer of [`solve_with`] sees after each step.
#[derive(Debug)]
pub struct StepView<'a> {
    pub p: &'a ProbMatrix,
    pub variant: Variant,
    pub before: &'a FactorPair,
    pub after: &'a FactorPair,
    /// The intermediate `(Q-', Q+)` of a sequential step.
    pub half: Option<&'a FactorPair>,
    pub record: &'a IterationRecord,
}

/// Runs the alternating minimization on `v` with `config`.
pub fn solve(v: &NonnegMatrix, config: &SolverConfig) -> Result<SolveResult> {
    solve_with(v, config, |_| ControlFlow::Continue(()))
}

fn gain_between(d_t: f64, d_t1: f64) -> f64 {
    match (d_t.is_finite(), d_t1.is_finite()) {
        (true, true) => d_t - d_t1,
        (false, true) => f64::INFINITY,
        (true, false) => f64::NEG_INFINITY,
        (false, false) => 0.0,
    }
}

/// [`solve`] with a callback after every step; returning `Break` stops the
/// run with [`Status::Aborted`] at the iterate just produced.
pub fn solve_with<F>(v: &NonnegMatrix, config: &SolverConfig, mut observer: F) -> Result<SolveResult>
where
    F: FnMut(&StepView<'_>) -> ControlFlow<()>,
{
    config.validate(v.rows(), v.cols())?;
    let problem = normalize_problem(v)?;
    let p = problem.p();
    let total = problem.total();
    let guard = config.underflow_guard;

    let mut pair = match config.init {
        Init::Deterministic => init_deterministic(v, config.inner_size)?,
        Init::Random => init_random(v, config.inner_size, config.seed)?,
    };
    // Raw factors for the unnormalized recursion; the sum of W equals `total`.
    let mut raw = match config.variant {
        Variant::Unnormalized => Some(denormalize_solution(&pair, total)?),
        _ => None,
    };
    let mut divergence = objective(p, &pair)?.value();
    let mut trace = Vec::new();
    let mut status = Status::MaxIters;

    for iter in 0..config.max_iters {
        let stepped = match config.variant {
            Variant::Simultaneous => simultaneous(p, &pair, guard).map(|next| (None, next)),
            Variant::Sequential => sequential(p, &pair, guard).map(|(h, next)| (Some(h), next)),
            Variant::Unnormalized => {
                let (w, h) = raw.as_ref().expect("raw factors are tracked");
                unnormalized(v, w, h, guard).and_then(|(w1, h1)| {
                    let mass = w1.sum();
                    let qminus = w1.scaled(1.0 / mass)?;
                    raw = Some((w1, h1.clone()));
                    Ok((None, FactorPair::from_parts(qminus, h1)))
                })
            }
        };
        let (half, next) = match stepped {
            Ok(ok) => ok,
            Err(Error::Underflow { .. }) => {
                status = Status::Underflow;
                break;
            }
            Err(e) => return Err(e),
        };
        let next_divergence = objective(p, &next)?.value();
        let gain = gain_between(divergence, next_divergence);

        let components = if config.record_components && divergence.is_finite() && next_divergence.is_finite() {
            Some(match &half {
                Some(h) => sequential_gain_components(p, &pair, h, &next)?,
                None => gain_components(p, &pair, &next)?,
            })
        } else {
            None
        };
        let record = IterationRecord {
            iter,
            divergence,
            gain,
            gain_p: components.map(|c| c.gain_p),
            gain_q: components.map(|c| c.gain_q),
            gain_residual: components.map(|c| c.residual),
        };
        trace.push(record);

        let flow = observer(&StepView {
            p,
            variant: config.variant,
            before: &pair,
            after: &next,
            half: half.as_ref(),
            record: &record,
        });
        let previous = divergence;
        let converged = previous.is_finite() && gain <= config.tol_gain * previous.max(1.0);
        // A step that only adds rounding error is not taken.
        if !(converged && gain < 0.0) {
            pair = next;
            divergence = next_divergence;
        }
        if flow.is_break() {
            status = Status::Aborted;
            break;
        }
        if converged {
            status = Status::Converged;
            break;
        }
    }

    let effective_inner_size = pair.inner_size() - dead_columns(&pair).len();
    Ok(SolveResult {
        final_divergence: ExtendedReal::new(divergence).unwrap_or(ExtendedReal::INFINITY),
        pair,
        trace,
        status,
        effective_inner_size,
        total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lifted::best_q_pair;

    fn m(rows: &[&[f64]]) -> NonnegMatrix {
        NonnegMatrix::from_rows(rows).unwrap()
    }

    fn v22() -> NonnegMatrix {
        m(&[&[3.0, 2.0], &[1.0, 4.0]])
    }

    #[test]
    fn deterministic_init_examples() {
        let pair = init_deterministic(&v22(), 1).unwrap();
        assert_eq!(pair.qminus().as_slice(), &[0.5, 0.5]);
        assert_eq!(pair.qplus().as_slice(), &[0.4, 0.6]);

        let pair = init_deterministic(&v22(), 2).unwrap();
        assert_eq!(pair.qminus().as_slice(), &[0.25; 4]);
        assert_eq!(pair.qplus().as_slice(), &[0.4, 0.6, 0.4, 0.6]);
    }

    #[test]
    fn init_errors() {
        assert!(matches!(
            init_deterministic(&v22(), 3),
            Err(Error::InvalidInnerSize { .. })
        ));
        assert!(matches!(
            init_deterministic(&v22(), 0),
            Err(Error::InvalidInnerSize { .. })
        ));
        let zero = NonnegMatrix::zeros(2, 3).unwrap();
        assert_eq!(init_deterministic(&zero, 1), Err(Error::DegenerateInput));
        assert_eq!(init_random(&zero, 1, 7), Err(Error::DegenerateInput));
    }

    #[test]
    fn deterministic_init_on_zero_row_is_boundary_but_finite() {
        let v = m(&[&[3.0, 2.0, 0.0], &[0.0, 0.0, 0.0], &[1.0, 4.0, 1.0]]);
        let pair = init_deterministic(&v, 2).unwrap();
        assert!(!pair.is_interior());
        let sp = normalize_problem(&v).unwrap();
        assert!(objective(sp.p(), &pair).unwrap().is_finite());
    }

    #[test]
    fn random_init_is_reproducible_and_interior() {
        let v = m(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0], &[7.0, 8.0, 9.0]]);
        let a = init_random(&v, 2, 42).unwrap();
        let b = init_random(&v, 2, 42).unwrap();
        assert_eq!(a, b);
        assert!(a.is_interior());
        // Q- entries are at least the floor over the (at most m*k) mass.
        let min = a.qminus().as_slice().iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min >= RANDOM_INIT_FLOOR / 6.0);
        FactorPair::new(a.qminus().clone(), a.qplus().clone()).unwrap();
        let c = init_random(&v, 2, 43).unwrap();
        assert!(a.max_abs_diff(&c).unwrap() > 0.0);
    }

    #[test]
    fn k1_step_lands_on_marginals() {
        let p = ProbMatrix::from_rows(&[[0.3, 0.2], [0.1, 0.4]]).unwrap();
        let start = FactorPair::new(m(&[&[0.9], &[0.1]]), m(&[&[0.7, 0.3]])).unwrap();
        for next in [
            step_simultaneous(&p, &start).unwrap(),
            step_sequential(&p, &start).unwrap(),
        ] {
            assert!((next.qminus().get(0, 0) - 0.5).abs() < 1e-15);
            assert!((next.qminus().get(1, 0) - 0.5).abs() < 1e-15);
            assert!((next.qplus().get(0, 0) - 0.4).abs() < 1e-15);
            assert!((next.qplus().get(0, 1) - 0.6).abs() < 1e-15);
        }
    }

    #[test]
    fn k1_deterministic_start_is_a_fixed_point() {
        let v = v22();
        let sp = normalize_problem(&v).unwrap();
        let start = init_deterministic(&v, 1).unwrap();
        let next = step_simultaneous(sp.p(), &start).unwrap();
        assert!(next.max_abs_diff(&start).unwrap() < 1e-15);
    }

    #[test]
    fn exact_factorization_is_a_fixed_point() {
        let pair = FactorPair::new(
            m(&[&[0.1, 0.2], &[0.3, 0.1], &[0.05, 0.25]]),
            m(&[&[0.2, 0.3, 0.5], &[0.6, 0.1, 0.3]]),
        )
        .unwrap();
        let p = ProbMatrix::new(pair.product()).unwrap();
        for next in [
            step_simultaneous(&p, &pair).unwrap(),
            step_sequential(&p, &pair).unwrap(),
        ] {
            assert!(next.max_abs_diff(&pair).unwrap() < 1e-14);
        }
        let w = pair.qminus().scaled(7.0).unwrap();
        let v = p.matrix().scaled(7.0).unwrap();
        let (w1, h1) = step_unnormalized(&v, &w, pair.qplus()).unwrap();
        assert!(w1.max_abs_diff(&w).unwrap() < 1e-13);
        assert!(h1.max_abs_diff(pair.qplus()).unwrap() < 1e-14);
    }

    #[test]
    fn simultaneous_step_is_the_composition_of_projections() {
        let p = ProbMatrix::from_rows(&[[0.1, 0.2, 0.05], [0.15, 0.1, 0.1], [0.05, 0.05, 0.2]]).unwrap();
        let v = m(&[&[1.0, 2.0, 3.0], &[2.0, 2.0, 1.0], &[5.0, 1.0, 1.0]]);
        let pair = init_random(&v, 2, 3).unwrap();
        let via_tensors =
            best_q_pair(&best_p_tensor(&p, &tensor_from_pair(&pair)).unwrap()).unwrap();
        let direct = step_simultaneous(&p, &pair).unwrap();
        assert!(direct.max_abs_diff(&via_tensors).unwrap() <= 1e-14);
    }

    #[test]
    fn unnormalized_step_example() {
        let (w1, h1) = step_unnormalized(&v22(), &m(&[&[2.0], &[2.0]]), &m(&[&[0.5, 0.5]])).unwrap();
        assert!(w1.max_abs_diff(&m(&[&[5.0], &[5.0]])).unwrap() < 1e-14);
        assert!(h1.max_abs_diff(&m(&[&[0.4, 0.6]])).unwrap() < 1e-15);
    }

    #[test]
    fn underflow_is_detected() {
        let p = ProbMatrix::from_rows(&[[0.5, 0.5]]).unwrap();
        let pair = FactorPair::new(m(&[&[1.0]]), m(&[&[1.0, 0.0]])).unwrap();
        assert_eq!(
            step_simultaneous(&p, &pair),
            Err(Error::Underflow { row: 0, col: 1 })
        );
        assert!(matches!(
            step_sequential(&p, &pair),
            Err(Error::Underflow { .. })
        ));
        // Without the guard the zero-fiber convention applies.
        assert!(simultaneous(&p, &pair, false).is_ok());
    }

    #[test]
    fn solve_uniform_rank_one() {
        let v = m(&[&[1.0, 1.0], &[1.0, 1.0]]);
        let result = solve(&v, &SolverConfig::new(1)).unwrap();
        assert_eq!(result.status, Status::Converged);
        assert!(result.iterations() <= 2);
        assert_eq!(result.final_divergence, ExtendedReal::ZERO);
        assert_eq!(result.pair.qminus().as_slice(), &[0.5, 0.5]);
        assert_eq!(result.pair.qplus().as_slice(), &[0.5, 0.5]);
    }

    #[test]
    fn solve_k1_reaches_independence_fit() {
        let v = v22();
        let result = solve(&v, &SolverConfig::new(1)).unwrap();
        assert_eq!(result.status, Status::Converged);
        assert_eq!(result.iterations(), 1);
        let d = result.final_divergence.value();
        assert!((d - 0.086_304_6).abs() < 1e-7, "{d}");
        let (w, h) = result.factors();
        assert!(w.max_abs_diff(&m(&[&[5.0], &[5.0]])).unwrap() < 1e-14);
        assert!(h.max_abs_diff(&m(&[&[0.4, 0.6]])).unwrap() < 1e-15);
    }

    #[test]
    fn solve_rejects_bad_configs() {
        let v = v22();
        assert!(matches!(
            solve(&v, &SolverConfig::new(0)),
            Err(Error::InvalidInnerSize { .. })
        ));
        let mut config = SolverConfig::new(1);
        config.max_iters = 0;
        assert!(matches!(solve(&v, &config), Err(Error::InvalidConfig(_))));
        config.max_iters = 5;
        config.tol_gain = 0.0;
        assert!(matches!(solve(&v, &config), Err(Error::InvalidConfig(_))));
        assert_eq!(
            solve(&NonnegMatrix::zeros(2, 2).unwrap(), &SolverConfig::new(1)),
            Err(Error::DegenerateInput)
        );
    }

    #[test]
    fn observer_can_abort() {
        let v = m(&[&[1.0, 2.0, 3.0], &[4.0, 1.0, 6.0], &[7.0, 8.0, 1.0]]);
        let mut config = SolverConfig::new(2);
        config.init = Init::Random;
        let mut seen = 0;
        let result = solve_with(&v, &config, |view| {
            seen += 1;
            assert_eq!(view.record.iter + 1, seen);
            if seen == 3 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        })
        .unwrap();
        assert_eq!(result.status, Status::Aborted);
        assert_eq!(result.iterations(), 3);
    }

    #[test]
    fn max_iters_status() {
        let v = m(&[&[1.0, 2.0, 3.0], &[4.0, 1.0, 6.0], &[7.0, 8.0, 1.0]]);
        let mut config = SolverConfig::new(2);
        config.init = Init::Random;
        config.max_iters = 4;
        let result = solve(&v, &config).unwrap();
        assert_eq!(result.status, Status::MaxIters);
        assert_eq!(result.iterations(), 4);
    }

    #[test]
    fn underflow_status_from_solver() {
        // P(1,1) = 1e-200 but its row and column masses multiply below the
        // smallest subnormal.
        let v = m(&[&[1.0, 0.0], &[0.0, 1e-200]]);
        let result = solve(&v, &SolverConfig::new(1)).unwrap();
        assert_eq!(result.status, Status::Underflow);
        assert!(result.trace.is_empty());
        assert!(result.final_divergence.is_infinite());

        let mut config = SolverConfig::new(1);
        config.underflow_guard = false;
        config.max_iters = 3;
        let result = solve(&v, &config).unwrap();
        assert_eq!(result.status, Status::MaxIters);
        assert_eq!(result.iterations(), 3);
    }
}
