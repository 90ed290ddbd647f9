//! Checkable optimality and descent certificates.
//!
//! * [`grad`] and [`finite_diff_grad`] give the raw partial derivatives of
//!   `D(P||Q- Q+)`; the constraints on the factors are not projected out.
//! * [`kkt_report`] evaluates complementarity `Q * dD/dQ = 0` and the sign
//!   condition `dD/dQ >= 0` on zero entries, the first-order conditions met by
//!   limit points of the solver.
//! * [`aux_g`], [`aux_g_minus`] and [`aux_g_plus`] evaluate the auxiliary
//!   function `G(Q, Q') = D(P*(Q)||Q')`, which majorizes `D(P||Q')` and touches
//!   it at `Q' = Q`.
//! * [`aux_gain_identities`] and [`gain_representation`] check the closed forms
//!   of the gaps `D(P||Q) - G` and of the gain of one step.
//! * [`audit_step`] bundles every identity that must hold across one solver step.

use alloc::vec;
use alloc::vec::Vec;

use crate::divergence::{idiv_slices, kl_term, ExtendedReal};
use crate::error::{Error, Result};
use crate::lifted::{
    best_p_tensor, check_pythagorean_p, check_pythagorean_q, product_tensor, tensor_from_pair,
};
use crate::matrix::{NonnegMatrix, ProbMatrix};
use crate::pair::FactorPair;
use crate::solver::{dead_columns, gain_components, objective, sequential_gain_components, simultaneous};

/// Default step of the central-difference oracle.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Partial derivatives of `D(P||Q- Q+)` with respect to each factor entry.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    m: usize,
    k: usize,
    n: usize,
    qminus: Vec<f64>,
    qplus: Vec<f64>,
}

impl Gradient {
    /// `dD/dQ-(i, l)`.
    #[inline]
    pub fn d_qminus(&self, i: usize, l: usize) -> f64 {
        self.qminus[i * self.k + l]
    }

    /// `dD/dQ+(l, j)`.
    #[inline]
    pub fn d_qplus(&self, l: usize, j: usize) -> f64 {
        self.qplus[l * self.n + j]
    }

    /// Row-major `m x k` block.
    pub fn qminus(&self) -> &[f64] {
        &self.qminus
    }

    /// Row-major `k x n` block.
    pub fn qplus(&self) -> &[f64] {
        &self.qplus
    }

    /// `(m, k, n)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.m, self.k, self.n)
    }
}

fn check_shape(p: &ProbMatrix, pair: &FactorPair) -> Result<()> {
    let shape = pair.outer_shape();
    if (p.rows(), p.cols()) != shape {
        return Err(Error::ShapeMismatch {
            expected: shape,
            found: (p.rows(), p.cols()),
        });
    }
    Ok(())
}

/// `dD/dQ-(i,l) = sum_j Q+(l,j) (1 - P(i,j)/Q(i,j))` and
/// `dD/dQ+(l,j) = sum_i Q-(i,l) (1 - P(i,j)/Q(i,j))` with `Q = Q- Q+`.
pub fn grad(p: &ProbMatrix, pair: &FactorPair) -> Result<Gradient> {
    check_shape(p, pair)?;
    let (m, n) = pair.outer_shape();
    let k = pair.inner_size();
    let model = pair.product();
    // 1 - P/Q, with 0/0 = 0.
    let mut slack = Vec::with_capacity(m * n);
    for (idx, (&pv, &qv)) in p.matrix().as_slice().iter().zip(model.as_slice()).enumerate() {
        if qv > 0.0 {
            slack.push(1.0 - pv / qv);
        } else if pv > 0.0 {
            return Err(Error::GradientUndefined {
                row: idx / n,
                col: idx % n,
            });
        } else {
            slack.push(1.0);
        }
    }
    let (qm, qp) = (pair.qminus(), pair.qplus());
    let mut d_minus = vec![0.0; m * k];
    let mut d_plus = vec![0.0; k * n];
    for i in 0..m {
        let s_row = &slack[i * n..(i + 1) * n];
        for l in 0..k {
            d_minus[i * k + l] = qp.row(l).iter().zip(s_row).map(|(h, s)| h * s).sum();
            let w = qm.get(i, l);
            for (acc, s) in d_plus[l * n..(l + 1) * n].iter_mut().zip(s_row) {
                *acc += w * s;
            }
        }
    }
    Ok(Gradient {
        m,
        k,
        n,
        qminus: d_minus,
        qplus: d_plus,
    })
}

/// The simultaneous step written through the raw partials:
/// `Q-'(i,l) = Q-(i,l) (1 - dD/dQ-(i,l))` and
/// `Q+'(l,j) = Q+(l,j) (c_l - dD/dQ+(l,j)) / c'_l`, where `c` and `c'` are the
/// column masses of `Q-` and `Q-'`.
///
/// Agrees with [`crate::step_simultaneous`] up to rounding.
pub fn gradient_step(p: &ProbMatrix, pair: &FactorPair) -> Result<FactorPair> {
    let g = grad(p, pair)?;
    let (m, k, n) = g.shape();
    let qminus: Vec<f64> = pair
        .qminus()
        .as_slice()
        .iter()
        .zip(g.qminus())
        .map(|(q, d)| (q * (1.0 - d)).max(0.0))
        .collect();
    let qminus = NonnegMatrix::from_parts(m, k, qminus);
    let before = pair.column_masses();
    let after = qminus.col_sums();
    let mut qplus = vec![0.0; k * n];
    for l in 0..k {
        let row = &mut qplus[l * n..(l + 1) * n];
        if after[l] > 0.0 {
            for (j, out) in row.iter_mut().enumerate() {
                let raw = pair.qplus().get(l, j) * (before[l] - g.d_qplus(l, j));
                *out = raw.max(0.0) / after[l];
            }
        } else {
            row.copy_from_slice(pair.qplus().row(l));
        }
    }
    Ok(FactorPair::from_parts(qminus, NonnegMatrix::from_parts(k, n, qplus)))
}

fn raw_objective(p: &ProbMatrix, qminus: &NonnegMatrix, qplus: &NonnegMatrix) -> Result<f64> {
    let value = idiv_slices(p.matrix().as_slice(), qminus.matmul(qplus)?.as_slice());
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::OracleFailure)
    }
}

fn central_differences(
    target: &NonnegMatrix,
    objective_at: impl Fn(&NonnegMatrix) -> Result<f64>,
    h: f64,
) -> Result<Vec<f64>> {
    let (rows, cols) = target.shape();
    let mut out = Vec::with_capacity(rows * cols);
    let mut data = target.as_slice().to_vec();
    for idx in 0..data.len() {
        let x = data[idx];
        if x - h < 0.0 {
            out.push(f64::NAN);
            continue;
        }
        data[idx] = x + h;
        let up = objective_at(&NonnegMatrix::from_parts(rows, cols, data.clone()))?;
        data[idx] = x - h;
        let down = objective_at(&NonnegMatrix::from_parts(rows, cols, data.clone()))?;
        data[idx] = x;
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Central differences of `D(P||Q- Q+)` entry by entry, without re-imposing
/// the constraints. Entries closer to zero than `h` are skipped and reported
/// as `NaN`.
pub fn finite_diff_grad(p: &ProbMatrix, pair: &FactorPair, h: f64) -> Result<Gradient> {
    check_shape(p, pair)?;
    if !(1e-8..=1e-4).contains(&h) {
        return Err(Error::InvalidStep(h));
    }
    let (m, n) = pair.outer_shape();
    let k = pair.inner_size();
    let d_minus = central_differences(pair.qminus(), |qm| raw_objective(p, qm, pair.qplus()), h)?;
    let d_plus = central_differences(pair.qplus(), |qp| raw_objective(p, pair.qminus(), qp), h)?;
    Ok(Gradient {
        m,
        k,
        n,
        qminus: d_minus,
        qplus: d_plus,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    QMinus,
    QPlus,
}

/// Gradient at a (numerically) zero factor entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroEntryGradient {
    pub factor: Factor,
    pub row: usize,
    pub col: usize,
    pub gradient: f64,
}

/// First-order optimality report for a factor pair.
#[derive(Debug, Clone, PartialEq)]
pub struct KktReport {
    /// `Q-(i,l) dD/dQ-(i,l)`, row-major `m x k`.
    pub complementarity_qminus: Vec<f64>,
    /// `Q+(l,j) dD/dQ+(l,j)`, row-major `k x n`.
    pub complementarity_qplus: Vec<f64>,
    /// Entries with value at most `tol`, outside dead columns.
    pub zero_entries: Vec<ZeroEntryGradient>,
    /// Largest `|Q dD/dQ|` outside dead columns.
    pub max_complementarity: f64,
    /// Smallest gradient over `zero_entries`; `None` when there are none.
    pub min_zero_gradient: Option<f64>,
    /// Inner indices whose `Q-` column mass is at most `1e-12`. No sign
    /// condition is asserted on them.
    pub dead_columns: Vec<usize>,
    pub tol: f64,
    pub satisfied: bool,
}

/// Evaluates complementarity and the zero-entry sign condition at `pair`.
///
/// Satisfied iff `max |Q dD/dQ| <= tol` and every entry with value `<= tol`
/// has `dD/dQ >= -tol`. Both factors are constraint-normalized, so `tol` is
/// used as an absolute threshold for "zero" entries.
pub fn kkt_report(p: &ProbMatrix, pair: &FactorPair, tol: f64) -> Result<KktReport> {
    let g = grad(p, pair)?;
    let (m, k, n) = g.shape();
    let dead = dead_columns(pair);
    let is_dead = |l: usize| dead.contains(&l);

    let mut max_complementarity: f64 = 0.0;
    let mut zero_entries = Vec::new();
    let mut complementarity_qminus = Vec::with_capacity(m * k);
    for i in 0..m {
        for l in 0..k {
            let value = pair.qminus().get(i, l);
            let c = value * g.d_qminus(i, l);
            complementarity_qminus.push(c);
            if is_dead(l) {
                continue;
            }
            max_complementarity = max_complementarity.max(libm::fabs(c));
            if value <= tol {
                zero_entries.push(ZeroEntryGradient {
                    factor: Factor::QMinus,
                    row: i,
                    col: l,
                    gradient: g.d_qminus(i, l),
                });
            }
        }
    }
    let mut complementarity_qplus = Vec::with_capacity(k * n);
    for l in 0..k {
        for j in 0..n {
            let value = pair.qplus().get(l, j);
            let c = value * g.d_qplus(l, j);
            complementarity_qplus.push(c);
            if is_dead(l) {
                continue;
            }
            max_complementarity = max_complementarity.max(libm::fabs(c));
            if value <= tol {
                zero_entries.push(ZeroEntryGradient {
                    factor: Factor::QPlus,
                    row: l,
                    col: j,
                    gradient: g.d_qplus(l, j),
                });
            }
        }
    }
    let min_zero_gradient = zero_entries
        .iter()
        .map(|z| z.gradient)
        .reduce(f64::min);
    let satisfied = max_complementarity <= tol && min_zero_gradient.is_none_or(|g| g >= -tol);
    Ok(KktReport {
        complementarity_qminus,
        complementarity_qplus,
        zero_entries,
        max_complementarity,
        min_zero_gradient,
        dead_columns: dead,
        tol,
        satisfied,
    })
}

/// An auxiliary-function value next to the objective it majorizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxEval {
    pub g_value: ExtendedReal,
    /// The objective at the second argument.
    pub d_value: ExtendedReal,
    /// `g_value - d_value`; `+inf` if only `g_value` is infinite, `NaN` if both are.
    pub slack: f64,
}

impl AuxEval {
    fn new(g: f64, d: f64) -> Self {
        let slack = match (g.is_finite(), d.is_finite()) {
            (true, true) => g - d,
            (false, true) => f64::INFINITY,
            (_, false) => f64::NAN,
        };
        Self {
            g_value: ExtendedReal::new(g).unwrap_or(ExtendedReal::ZERO),
            d_value: ExtendedReal::new(d).unwrap_or(ExtendedReal::ZERO),
            slack,
        }
    }
}

fn aux_eval(p: &ProbMatrix, pair: &FactorPair, qminus: &NonnegMatrix, qplus: &NonnegMatrix) -> Result<AuxEval> {
    check_shape(p, pair)?;
    let prime = product_tensor(qminus, qplus)?;
    if prime.shape() != (pair.outer_shape().0, pair.inner_size(), pair.outer_shape().1) {
        return Err(Error::TensorShapeMismatch {
            expected: (pair.outer_shape().0, pair.inner_size(), pair.outer_shape().1),
            found: prime.shape(),
        });
    }
    let pstar = best_p_tensor(p, &tensor_from_pair(pair))?;
    let g = idiv_slices(pstar.as_slice(), prime.as_slice());
    let d = idiv_slices(p.matrix().as_slice(), qminus.matmul(qplus)?.as_slice());
    Ok(AuxEval::new(g, d))
}

/// `G(Q, Q') = D(P*(Q)||Q')` against `D(P||Q')`.
pub fn aux_g(p: &ProbMatrix, pair: &FactorPair, pair_prime: &FactorPair) -> Result<AuxEval> {
    aux_eval(p, pair, pair_prime.qminus(), pair_prime.qplus())
}

/// `G-(Q-') = G(Q, (Q-', Q+))`, the auxiliary function for the `Q-` update.
pub fn aux_g_minus(p: &ProbMatrix, pair: &FactorPair, qminus_prime: &NonnegMatrix) -> Result<AuxEval> {
    aux_eval(p, pair, qminus_prime, pair.qplus())
}

/// `G+(Q+') = G(Q, (Q-, Q+'))`, the auxiliary function for the `Q+` update.
pub fn aux_g_plus(p: &ProbMatrix, pair: &FactorPair, qplus_prime: &NonnegMatrix) -> Result<AuxEval> {
    aux_eval(p, pair, pair.qminus(), qplus_prime)
}

/// Both sides of the three auxiliary gap identities at the update minimizers
/// `(Q-', Q+')`:
///
/// 1. `D(P||Q) - G-(Q-') = sum_il Q-' log(Q-'/Q-)`
/// 2. `D(P||Q) - G+(Q+') = sum_l w_l KL(Q+'(l,.)||Q+(l,.))`, `w_l` the `l`-mass of `P*(Q)`
/// 3. `D(P||Q) - G(Q, Q') = (1) + sum_l w'_l KL(Q+'(l,.)||Q+(l,.))`, `w'_l` the `l`-mass of `Q'`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuxGainIdentities {
    pub divergence: f64,
    pub lhs: [f64; 3],
    pub rhs: [f64; 3],
    pub residuals: [f64; 3],
}

impl AuxGainIdentities {
    pub fn holds(&self, rel_tol: f64) -> bool {
        let bound = rel_tol * self.divergence.max(1.0);
        self.residuals.iter().all(|&r| r <= bound)
    }
}

fn weighted_row_kl(weights: &[f64], new: &NonnegMatrix, old: &NonnegMatrix) -> f64 {
    weights
        .iter()
        .enumerate()
        .map(|(l, w)| {
            let row: f64 = new
                .row(l)
                .iter()
                .zip(old.row(l))
                .map(|(&a, &b)| kl_term(a, b))
                .sum();
            w * row
        })
        .sum()
}

fn kl_matrix(new: &NonnegMatrix, old: &NonnegMatrix) -> f64 {
    new.as_slice()
        .iter()
        .zip(old.as_slice())
        .map(|(&a, &b)| kl_term(a, b))
        .sum()
}

/// Evaluates both sides of the auxiliary gap identities at `pair`.
pub fn aux_gain_identities(p: &ProbMatrix, pair: &FactorPair) -> Result<AuxGainIdentities> {
    let next = simultaneous(p, pair, true)?;
    let divergence = objective(p, pair)?.value();
    let pstar = best_p_tensor(p, &tensor_from_pair(pair))?;
    let g_minus = idiv_slices(
        pstar.as_slice(),
        product_tensor(next.qminus(), pair.qplus())?.as_slice(),
    );
    let g_plus = idiv_slices(
        pstar.as_slice(),
        product_tensor(pair.qminus(), next.qplus())?.as_slice(),
    );
    let next_tensor = tensor_from_pair(&next);
    let g_joint = idiv_slices(pstar.as_slice(), next_tensor.as_slice());

    let joint_term = kl_matrix(next.qminus(), pair.qminus());
    let rhs2 = weighted_row_kl(&pstar.slice_masses(), next.qplus(), pair.qplus());
    let rhs3 = joint_term + weighted_row_kl(&next_tensor.slice_masses(), next.qplus(), pair.qplus());

    let lhs = [divergence - g_minus, divergence - g_plus, divergence - g_joint];
    let rhs = [joint_term, rhs2, rhs3];
    let residuals = [
        libm::fabs(lhs[0] - rhs[0]),
        libm::fabs(lhs[1] - rhs[1]),
        libm::fabs(lhs[2] - rhs[2]),
    ];
    Ok(AuxGainIdentities {
        divergence,
        lhs,
        rhs,
        residuals,
    })
}

/// The gain of one simultaneous step written as a sum of divergences between
/// the old and new model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainRepresentation {
    pub gain: f64,
    /// `KL(Q-(t+1)||Q-(t))`, the change in the joint law of `(X, Y-)`.
    pub joint_term: f64,
    /// Row divergences of `Q+` weighted by the `l`-masses of `Q(t+1)`.
    pub conditional_term: f64,
    /// `E_P KL(Q(t)^{X|Y}||Q(t+1)^{X|Y})`.
    pub posterior_term: f64,
    /// `|gain - joint - conditional - posterior|`.
    pub residual: f64,
}

/// Evaluates the three-term gain representation for the step from `pair`.
pub fn gain_representation(p: &ProbMatrix, pair: &FactorPair) -> Result<GainRepresentation> {
    let next = simultaneous(p, pair, true)?;
    let gain = objective(p, pair)?.value() - objective(p, &next)?.value();
    let q_t = tensor_from_pair(pair);
    let q_t1 = tensor_from_pair(&next);
    let joint_term = kl_matrix(next.qminus(), pair.qminus());
    let conditional_term = weighted_row_kl(&q_t1.slice_masses(), next.qplus(), pair.qplus());

    let (m, k, n) = q_t.shape();
    let model_t = pair.product();
    let model_t1 = next.product();
    let mut posterior_term = 0.0;
    for i in 0..m {
        for j in 0..n {
            let weight = p.get(i, j);
            if weight == 0.0 {
                continue;
            }
            let (z_t, z_t1) = (model_t.get(i, j), model_t1.get(i, j));
            let inner: f64 = (0..k)
                .map(|l| kl_term(q_t.get(i, l, j) / z_t, q_t1.get(i, l, j) / z_t1))
                .sum();
            posterior_term += weight * inner;
        }
    }
    let residual = libm::fabs(gain - joint_term - conditional_term - posterior_term);
    Ok(GainRepresentation {
        gain,
        joint_term,
        conditional_term,
        posterior_term,
        residual,
    })
}

/// Identity tolerance, relative to `max(1, divergence)`.
pub const IDENTITY_REL_TOL: f64 = 1e-10;

/// Absolute tolerance for inequalities that hold up to rounding.
pub const INEQUALITY_TOL: f64 = 1e-12;

/// One named identity or inequality evaluated across a solver step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub name: &'static str,
    /// Violation size on the scale of `tolerance`.
    pub residual: f64,
    pub tolerance: f64,
}

impl IdentityCheck {
    pub fn passed(&self) -> bool {
        self.residual <= self.tolerance
    }
}

/// Checks every identity that must hold for a step `before -> after`:
/// monotonicity, both Pythagorean rules along the step, auxiliary domination,
/// the three auxiliary gap identities at `before`, and the gain decomposition
/// (the half-step form when `half` is given, for the sequential variant).
pub fn audit_step(
    p: &ProbMatrix,
    before: &FactorPair,
    after: &FactorPair,
    half: Option<&FactorPair>,
) -> Result<Vec<IdentityCheck>> {
    let d_before = objective(p, before)?.value();
    let d_after = objective(p, after)?.value();
    let scale = d_before.max(1.0);
    let relative = |r: f64| if r.is_finite() { r / scale } else { f64::INFINITY };
    let mut checks = Vec::with_capacity(8);

    checks.push(IdentityCheck {
        name: "monotonicity",
        residual: (d_after - d_before).max(0.0),
        tolerance: INEQUALITY_TOL,
    });

    let q_before = tensor_from_pair(before);
    let q_after = tensor_from_pair(after);
    let p_before = best_p_tensor(p, &q_before)?;
    let rule_p = check_pythagorean_p(p, &p_before, &q_after)?;
    checks.push(IdentityCheck {
        name: "pythagorean_p",
        residual: relative(rule_p.residual),
        tolerance: IDENTITY_REL_TOL,
    });
    let rule_q = check_pythagorean_q(&p_before, &q_before)?;
    checks.push(IdentityCheck {
        name: "pythagorean_q",
        residual: relative(rule_q.residual),
        tolerance: IDENTITY_REL_TOL,
    });

    let domination = aux_g(p, before, after)?;
    checks.push(IdentityCheck {
        name: "aux_domination",
        residual: (-domination.slack).max(0.0),
        tolerance: INEQUALITY_TOL,
    });
    let touching = aux_g(p, before, before)?;
    checks.push(IdentityCheck {
        name: "aux_touching",
        residual: libm::fabs(touching.slack),
        tolerance: INEQUALITY_TOL,
    });

    let identities = aux_gain_identities(p, before)?;
    for (name, r) in ["aux_gap_minus", "aux_gap_plus", "aux_gap_joint"]
        .into_iter()
        .zip(identities.residuals)
    {
        checks.push(IdentityCheck {
            name,
            residual: relative(r),
            tolerance: IDENTITY_REL_TOL,
        });
    }

    let split = match half {
        Some(h) => sequential_gain_components(p, before, h, after)?,
        None => gain_components(p, before, after)?,
    };
    checks.push(IdentityCheck {
        name: "gain_decomposition",
        residual: relative(split.residual),
        tolerance: IDENTITY_REL_TOL,
    });
    Ok(checks)
}
