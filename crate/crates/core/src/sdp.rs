//! Worst-case extracted fidelity over two-qubit states at fixed angles and maps.
//!
//! The program
//!
//! ```text
//! minimize   tr(M ρ)
//! subject to tr(B ρ) ≥ β',  ρ ⪰ 0,  tr ρ = 1
//! ```
//!
//! has a single scalar dual variable. Its dual function
//! `g(μ) = μ β' + λ_min(M − μ B)` is concave on `μ ≥ 0`, and the score of the
//! bottom eigenvectors of `M − μ B` is a supergradient, so the optimal
//! multiplier is found by bisection on that supergradient. The primal witness
//! is assembled from bottom eigenvectors on either side of the optimum and
//! meets the score constraint with equality.

use log::debug;

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{
    eig_block, eig_hermitian, phi_plus, ComplexMatrix, DensityMatrix, HermitianOperator, C64,
};
use crate::maps::QubitChannel;

const MAX_MULTIPLIER: f64 = 1e12;
const BISECTION_STEPS: usize = 200;

/// `M = (Λ_A ⊗ Λ_B)†[|φ+⟩⟨φ+|]`, so that `tr(M ρ) = ⟨φ+|(Λ_A ⊗ Λ_B)[ρ]|φ+⟩`.
pub fn pullback_objective(alice: &QubitChannel, bob: &QubitChannel) -> HermitianOperator {
    let phi = phi_plus();
    let phi = phi.amplitudes();
    let mut m = ComplexMatrix::zeros(4).expect("dim 4");
    for ka in alice.kraus() {
        for kb in bob.kraus() {
            let k = ka.kron(kb).expect("qubit Kraus operators");
            // v = K† φ
            let mut v = [C64::new(0.0, 0.0); 4];
            for (i, vi) in v.iter_mut().enumerate() {
                for (j, pj) in phi.iter().enumerate() {
                    *vi += k.get(j, i).conj() * pj;
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    m.set(i, j, m.get(i, j) + v[i] * v[j].conj());
                }
            }
        }
    }
    HermitianOperator::new(m).expect("sum of rank-one projectors is Hermitian")
}

#[derive(Clone, Copy, Debug)]
pub struct SdpInstance {
    pub objective: HermitianOperator,
    pub constraint_op: HermitianOperator,
    pub threshold: f64,
}

impl SdpInstance {
    /// Validates dimensions and that the objective has its spectrum in `[0, 1]`.
    pub fn new(
        objective: HermitianOperator,
        constraint_op: HermitianOperator,
        threshold: f64,
    ) -> Result<Self> {
        if objective.dim() != 4 || constraint_op.dim() != 4 {
            return Err(Error::Dimension("SDP operators must be 4x4".into()));
        }
        if !threshold.is_finite() {
            return Err(Error::Input(format!("threshold {threshold} is not finite")));
        }
        let e = eig_hermitian(&objective);
        if e.min() < -1e-10 || e.max() > 1.0 + 1e-10 {
            return Err(Error::Input(format!(
                "objective spectrum [{}, {}] is not inside [0, 1]",
                e.min(),
                e.max()
            )));
        }
        Ok(Self::unchecked(objective, constraint_op, threshold))
    }

    pub(crate) fn unchecked(
        objective: HermitianOperator,
        constraint_op: HermitianOperator,
        threshold: f64,
    ) -> Self {
        Self {
            objective,
            constraint_op,
            threshold,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    Infeasible,
}

#[derive(Clone, Debug)]
pub struct SdpResult {
    pub status: SdpStatus,
    pub primal_value: f64,
    pub dual_value: f64,
    pub witness_state: Option<DensityMatrix>,
    pub dual_multiplier: f64,
}

impl SdpResult {
    fn infeasible() -> Self {
        Self {
            status: SdpStatus::Infeasible,
            primal_value: f64::INFINITY,
            dual_value: f64::INFINITY,
            witness_state: None,
            dual_multiplier: f64::INFINITY,
        }
    }

    pub fn gap(&self) -> f64 {
        self.primal_value - self.dual_value
    }
}

/// `true` iff some state reaches the threshold score.
pub fn feasible(instance: &SdpInstance) -> bool {
    feasible_with(instance, &Tolerances::default())
}

pub fn feasible_with(instance: &SdpInstance, tol: &Tolerances) -> bool {
    instance.threshold <= eig_hermitian(&instance.constraint_op).max() + tol.feasibility
}

/// A bottom eigenvector of `M − μB` together with its score `⟨ψ|B|ψ⟩`.
#[derive(Clone, Copy, Debug)]
struct Extreme {
    score: f64,
    vector: [C64; 4],
}

#[derive(Clone, Copy, Debug)]
struct Probe {
    mu: f64,
    lambda_min: f64,
    /// Lowest-score state in the bottom eigenspace.
    lo: Extreme,
    /// Highest-score state in the bottom eigenspace.
    hi: Extreme,
}

/// Restricts `op` to the span of `basis` and returns its extreme eigenvectors lifted back.
fn extremes_on(op: &HermitianOperator, basis: &[Vec<C64>]) -> (Extreme, Extreme) {
    let k = basis.len();
    let mut sub = ComplexMatrix::zeros_any(k);
    for i in 0..k {
        for j in 0..k {
            sub.set(i, j, op.matrix().sandwich(&basis[i], &basis[j]));
        }
    }
    let e = eig_block(&sub);
    let lift = |y: &Vec<C64>| {
        let mut v = [C64::new(0.0, 0.0); 4];
        for (coef, b) in y.iter().zip(basis) {
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi += coef * bi;
            }
        }
        v
    };
    let hi = Extreme {
        score: e.max(),
        vector: lift(&e.vectors[0]),
    };
    let lo = Extreme {
        score: e.min(),
        vector: lift(e.vectors.last().expect("non-empty")),
    };
    (lo, hi)
}

fn cluster_width(scale: f64, tol: &Tolerances) -> f64 {
    tol.degeneracy * scale.max(1.0)
}

fn probe(inst: &SdpInstance, mu: f64, tol: &Tolerances) -> Probe {
    let shifted = inst.objective - inst.constraint_op.scale(mu);
    let e = eig_hermitian(&shifted);
    let lmin = e.min();
    let width = cluster_width(e.max().abs().max(lmin.abs()), tol);
    let basis: Vec<Vec<C64>> = e
        .values
        .iter()
        .zip(&e.vectors)
        .filter(|(l, _)| **l <= lmin + width)
        .map(|(_, v)| v.clone())
        .collect();
    let (lo, hi) = extremes_on(&inst.constraint_op, &basis);
    Probe {
        mu,
        lambda_min: lmin,
        lo,
        hi,
    }
}

fn dual_at(inst: &SdpInstance, p: &Probe) -> f64 {
    p.mu * inst.threshold + p.lambda_min
}

fn pure_state(v: &[C64; 4]) -> DensityMatrix {
    let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let u: Vec<C64> = v.iter().map(|z| z / norm).collect();
    DensityMatrix::trusted(ComplexMatrix::outer(&u).expect("length 4"))
}

/// Superposition `√w |hi⟩ + √(1−w) |lo⟩` of two B-orthogonal eigenvectors with score `β'`.
fn superpose(lo: &Extreme, hi: &Extreme, target: f64) -> DensityMatrix {
    let w = if hi.score - lo.score > 0.0 {
        ((target - lo.score) / (hi.score - lo.score)).clamp(0.0, 1.0)
    } else {
        1.0
    };
    let mut v = [C64::new(0.0, 0.0); 4];
    for i in 0..4 {
        v[i] = hi.vector[i] * w.sqrt() + lo.vector[i] * (1.0 - w).sqrt();
    }
    pure_state(&v)
}

/// Mixture of two states with scores on either side of `β'`, hitting it exactly.
fn mixture(below: &Extreme, above: &Extreme, target: f64) -> DensityMatrix {
    let w = ((target - below.score) / (above.score - below.score)).clamp(0.0, 1.0);
    let rho_above = pure_state(&above.vector);
    let rho_below = pure_state(&below.vector);
    rho_above
        .mix(&rho_below, w)
        .expect("weight clamped to [0, 1]")
}

fn optimal(inst: &SdpInstance, rho: DensityMatrix, dual: f64, mu: f64) -> SdpResult {
    let primal = inst.objective.expectation(&rho);
    SdpResult {
        status: SdpStatus::Optimal,
        primal_value: primal,
        dual_value: dual.min(primal),
        witness_state: Some(rho),
        dual_multiplier: mu,
    }
}

pub fn solve(instance: &SdpInstance) -> SdpResult {
    solve_with(instance, &Tolerances::default())
}

pub fn solve_with(inst: &SdpInstance, tol: &Tolerances) -> SdpResult {
    let eb = eig_hermitian(&inst.constraint_op);
    let lmax = eb.max();
    let target = inst.threshold;
    if target > lmax + tol.feasibility {
        return SdpResult::infeasible();
    }

    let p0 = probe(inst, 0.0, tol);
    if p0.hi.score >= target {
        // constraint inactive
        return optimal(inst, pure_state(&p0.hi.vector), dual_at(inst, &p0), 0.0);
    }

    // bracket the multiplier
    let mut below = p0;
    let mut above = None;
    let mut mu = 1.0;
    while mu <= MAX_MULTIPLIER {
        let p = probe(inst, mu, tol);
        if p.lo.score <= target && target <= p.hi.score {
            let rho = superpose(&p.lo, &p.hi, target);
            return optimal(inst, rho, dual_at(inst, &p), mu);
        }
        if p.hi.score < target {
            below = p;
            mu *= 2.0;
        } else {
            above = Some(p);
            break;
        }
    }
    let Some(mut above) = above else {
        return boundary(inst, tol);
    };

    for _ in 0..BISECTION_STEPS {
        if above.mu - below.mu <= 4.0 * f64::EPSILON * above.mu {
            break;
        }
        let mid = 0.5 * (below.mu + above.mu);
        let p = probe(inst, mid, tol);
        if p.lo.score <= target && target <= p.hi.score {
            let rho = superpose(&p.lo, &p.hi, target);
            return optimal(inst, rho, dual_at(inst, &p), mid);
        }
        if p.hi.score < target {
            below = p;
        } else {
            above = p;
        }
    }

    let rho = mixture(&below.hi, &above.lo, target);
    let (dual, mu) = {
        let (db, da) = (dual_at(inst, &below), dual_at(inst, &above));
        if db >= da {
            (db, below.mu)
        } else {
            (da, above.mu)
        }
    };
    let result = optimal(inst, rho, dual, mu);
    if result.gap() > tol.duality_gap {
        debug!(
            "sdp bisection ended with gap {:e} at mu = {mu}",
            result.gap()
        );
    }
    result
}

/// Threshold at the top of the spectrum of `B`: only its top eigenspace is feasible.
fn boundary(inst: &SdpInstance, tol: &Tolerances) -> SdpResult {
    let eb = eig_hermitian(&inst.constraint_op);
    let lmax = eb.max();
    let width = cluster_width(lmax.abs(), tol);
    let top: Vec<Vec<C64>> = eb
        .values
        .iter()
        .zip(&eb.vectors)
        .filter(|(l, _)| **l >= lmax - width)
        .map(|(_, v)| v.clone())
        .collect();
    let (best, _) = extremes_on(&inst.objective, &top);
    let rho = pure_state(&best.vector);

    // the dual supremum is only approached as μ → ∞
    let mut dual = f64::NEG_INFINITY;
    let mut mu_best = 0.0;
    let mut mu = 1.0;
    while mu <= 1e9 {
        let d = dual_at(inst, &probe(inst, mu, tol));
        if d > dual {
            dual = d;
            mu_best = mu;
        }
        mu *= 10.0;
    }
    optimal(inst, rho, dual, mu_best)
}
