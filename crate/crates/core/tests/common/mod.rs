//! Random instance generators and naive reference computations shared by the
//! integration tests. Nothing here calls into the crate's numerics.
#![allow(dead_code, clippy::needless_range_loop)]

use lifted_nmf::{FactorPair, NonnegMatrix, ProbMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Positive entries in `[lo, 1)`, normalized to a probability vector.
pub fn simplex(rng: &mut ChaCha8Rng, len: usize, lo: f64) -> Vec<f64> {
    normalized((0..len).map(|_| rng.random_range(lo..1.0)).collect())
}

pub fn random_p(rng: &mut ChaCha8Rng, m: usize, n: usize) -> ProbMatrix {
    let data = simplex(rng, m * n, 0.01);
    ProbMatrix::with_tolerance(NonnegMatrix::new(m, n, data).unwrap(), 1e-12).unwrap()
}

/// Like [`random_p`] but roughly a fifth of the entries are exactly zero.
pub fn sparse_p(rng: &mut ChaCha8Rng, m: usize, n: usize) -> ProbMatrix {
    let mut data: Vec<f64> = (0..m * n)
        .map(|_| if rng.random_range(0.0..1.0) < 0.2 { 0.0 } else { rng.random_range(0.01..1.0) })
        .collect();
    if data.iter().all(|&x| x == 0.0) {
        data[0] = 1.0;
    }
    let data = normalized(data);
    ProbMatrix::with_tolerance(NonnegMatrix::new(m, n, data).unwrap(), 1e-12).unwrap()
}

pub fn random_v(rng: &mut ChaCha8Rng, m: usize, n: usize) -> NonnegMatrix {
    let scale = rng.random_range(0.5..1000.0);
    let data = (0..m * n).map(|_| scale * rng.random_range(0.01..1.0)).collect();
    NonnegMatrix::new(m, n, data).unwrap()
}

/// Interior pair with entries bounded away from zero by roughly `lo`.
pub fn random_pair(rng: &mut ChaCha8Rng, m: usize, k: usize, n: usize, lo: f64) -> FactorPair {
    let qminus = simplex(rng, m * k, lo);
    let mut qplus = Vec::with_capacity(k * n);
    for _ in 0..k {
        qplus.extend(simplex(rng, n, lo));
    }
    FactorPair::with_tolerance(
        NonnegMatrix::new(m, k, qminus).unwrap(),
        NonnegMatrix::new(k, n, qplus).unwrap(),
        1e-12,
    )
    .unwrap()
}

pub fn dims(rng: &mut ChaCha8Rng, max_mn: usize, max_k: usize) -> (usize, usize, usize) {
    let m = rng.random_range(2..=max_mn);
    let n = rng.random_range(2..=max_mn);
    let k = rng.random_range(1..=max_k.min(m).min(n));
    (m, k, n)
}

pub fn idiv(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        q
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).ln() - p + q
    }
}

pub fn idiv_vec(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&p, &q)| idiv(p, q)).sum()
}

pub fn kl(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| if p == 0.0 { 0.0 } else { p * (p / q).ln() })
        .sum()
}

/// Dense `m x k x n` tensor as nested vectors.
pub type Dense = Vec<Vec<Vec<f64>>>;

pub fn product(qm: &NonnegMatrix, qp: &NonnegMatrix) -> Dense {
    let (m, k) = qm.shape();
    let n = qp.cols();
    (0..m)
        .map(|i| (0..k).map(|l| (0..n).map(|j| qm.get(i, l) * qp.get(l, j)).collect()).collect())
        .collect()
}

pub fn flat(t: &Dense) -> Vec<f64> {
    t.iter().flatten().flatten().copied().collect()
}

pub fn model(pair: &FactorPair) -> Vec<Vec<f64>> {
    let t = product(pair.qminus(), pair.qplus());
    let (m, n) = (t.len(), t[0][0].len());
    (0..m).map(|i| (0..n).map(|j| t[i].iter().map(|r| r[j]).sum()).collect()).collect()
}

pub fn divergence(p: &ProbMatrix, pair: &FactorPair) -> f64 {
    let q = model(pair);
    let mut d = 0.0;
    for (i, row) in q.iter().enumerate() {
        for (j, &qij) in row.iter().enumerate() {
            d += idiv(p.get(i, j), qij);
        }
    }
    d
}

/// `P*(Q)`: each fiber of `Q` rescaled to carry the mass `P(i,j)`.
pub fn project_p(p: &ProbMatrix, q: &Dense) -> Dense {
    let mut out = q.clone();
    for (i, slab) in out.iter_mut().enumerate() {
        let n = slab[0].len();
        for j in 0..n {
            let z: f64 = slab.iter().map(|r| r[j]).sum();
            for r in slab.iter_mut() {
                r[j] = if z > 0.0 { r[j] * p.get(i, j) / z } else { 0.0 };
            }
        }
    }
    out
}

/// `Q*(T)` as raw factors: the `(i,l)` marginal and the row-normalized `(l,j)` marginal.
pub fn project_q(t: &Dense) -> (Vec<f64>, Vec<f64>) {
    let (m, k, n) = (t.len(), t[0].len(), t[0][0].len());
    let mut qm = vec![0.0; m * k];
    let mut qp = vec![0.0; k * n];
    for i in 0..m {
        for l in 0..k {
            for j in 0..n {
                qm[i * k + l] += t[i][l][j];
                qp[l * n + j] += t[i][l][j];
            }
        }
    }
    for l in 0..k {
        let row = &mut qp[l * n..(l + 1) * n];
        let s: f64 = row.iter().sum();
        row.iter_mut().for_each(|x| *x = if s > 0.0 { *x / s } else { 1.0 / n as f64 });
    }
    (qm, qp)
}

/// One alternating sweep computed from dense tensors.
pub fn sweep(p: &ProbMatrix, pair: &FactorPair) -> (Vec<f64>, Vec<f64>) {
    project_q(&project_p(p, &product(pair.qminus(), pair.qplus())))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
