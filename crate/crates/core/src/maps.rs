//! Local extraction channels.
//!
//! Both parties apply a dephasing channel
//! `ρ ↦ (1+g)/2 ρ + (1−g)/2 Γ ρ Γ` whose strength `g` depends on the
//! measurement angle. Alice's channel is additionally rotated about `σ_y` by
//! `ω` and dephases along `Γ(d) = cos(d) σ_h − sin(d) σ_m`; the pair `(ω, d)`
//! is chosen per angle by minimizing the worse of the two frame slopes.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::bell::{Theta, ANGLE_SLACK, TSIRELSON};
use crate::error::{Error, Result};
use crate::linalg::{pauli, ComplexMatrix, DensityMatrix, HermitianOperator, PauliName, C64};
use crate::neldermead::{self, SimplexOptions};

/// Number of Alice settings in the precomputed parameter grid.
pub const ALICE_GRID_POINTS: usize = 100;
/// Independent starts per grid point.
pub const ALICE_STARTS: usize = 8;
const ALICE_TOL: f64 = 1e-9;
/// Weight of the secondary (slack side) slope used to pick a point on a flat optimum.
const TIE_BREAK_WEIGHT: f64 = 1e-3;

/// `g(a) = (1+√2)(cos a + sin a − 1)`, clamped to `[0, 1]`.
pub fn strength_g(a: f64) -> f64 {
    ((1.0 + SQRT_2) * (a.cos() + a.sin() - 1.0)).clamp(0.0, 1.0)
}

fn check_bob_theta(theta: Theta) -> Result<f64> {
    let t = theta.value();
    if t <= 0.0 || t >= FRAC_PI_2 {
        return Err(Error::Domain(format!(
            "Bob's strength is singular at theta = {t}; need 0 < theta < pi/2"
        )));
    }
    Ok(t)
}

/// Reparameterization `t(b, θ)` sending `0, θ, π/2` to `0, π/4, π/2`.
pub fn bob_angle_map(theta: Theta, b: f64) -> Result<f64> {
    let t = check_bob_theta(theta)?;
    if !(-ANGLE_SLACK..=FRAC_PI_2 + ANGLE_SLACK).contains(&b) {
        return Err(Error::Domain(format!("b = {b} is outside [0, pi/2]")));
    }
    let b = b.clamp(0.0, FRAC_PI_2);
    if (t - FRAC_PI_4).abs() <= 1e-14 {
        return Ok(b);
    }
    let delta = t * t / (FRAC_PI_2 - 2.0 * t);
    let gamma = (4.0 / PI) * ((FRAC_PI_2 - 2.0 * t) / t).ln_1p();
    Ok((b / delta).ln_1p() / gamma)
}

/// `g̃_θ(b) = g(t(b, θ))`.
pub fn strength_g_tilde(theta: Theta, b: f64) -> Result<f64> {
    Ok(strength_g(bob_angle_map(theta, b)?))
}

/// Completely positive trace-preserving qubit map in Kraus form.
#[derive(Clone, Debug)]
pub struct QubitChannel {
    kraus: Vec<ComplexMatrix>,
}

impl QubitChannel {
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        if kraus.is_empty() || kraus.iter().any(|k| k.dim() != 2) {
            return Err(Error::Dimension("Kraus operators must be 2x2".into()));
        }
        let ch = Self { kraus };
        let dev = ch.completeness_error();
        if dev > 1e-12 {
            return Err(Error::Input(format!(
                "Kraus operators are not complete (deviation {dev:e})"
            )));
        }
        Ok(ch)
    }

    pub fn identity() -> Self {
        Self {
            kraus: vec![ComplexMatrix::identity(2).expect("dim 2")],
        }
    }

    /// `(1+g)/2 ρ + (1−g)/2 ΓρΓ` followed by conjugation with `u`.
    fn dephasing(g: f64, gamma: &HermitianOperator, u: ComplexMatrix) -> Self {
        let g = g.clamp(0.0, 1.0);
        let keep = ((1.0 + g) / 2.0).sqrt();
        let flip = ((1.0 - g) / 2.0).sqrt();
        Self {
            kraus: vec![u.scale(keep), (u * *gamma.matrix()).scale(flip)],
        }
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// Largest entry of `Σ K†K − 1`.
    pub fn completeness_error(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .map(|k| k.adjoint() * *k)
            .fold(ComplexMatrix::zeros(2).expect("dim 2"), |acc, m| acc + m);
        sum.max_abs_diff(&ComplexMatrix::identity(2).expect("dim 2"))
    }

    /// Action on a single-qubit operator.
    pub fn apply_qubit(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        self.kraus
            .iter()
            .map(|k| *k * *rho * k.adjoint())
            .fold(ComplexMatrix::zeros(2).expect("dim 2"), |acc, m| acc + m)
    }

    /// Matches `other` as a superoperator (compares Choi-style action on a basis).
    pub fn action_distance(&self, other: &QubitChannel) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let mut e = ComplexMatrix::zeros(2).expect("dim 2");
                e.set(i, j, C64::new(1.0, 0.0));
                worst = worst.max(self.apply_qubit(&e).max_abs_diff(&other.apply_qubit(&e)));
            }
        }
        worst
    }
}

/// Bob's dephasing axis: `σ_z` up to the optimal angle `θ`, `σ_x` beyond.
pub fn bob_dephasing_axis(theta: Theta, b: f64) -> HermitianOperator {
    if b <= theta.value() {
        pauli(PauliName::Z)
    } else {
        pauli(PauliName::X)
    }
}

pub fn bob_channel(theta: Theta, b: f64) -> Result<QubitChannel> {
    let g = strength_g_tilde(theta, b)?;
    Ok(QubitChannel::dephasing(
        g,
        &bob_dephasing_axis(theta, b),
        ComplexMatrix::identity(2).expect("dim 2"),
    ))
}

/// Parameters of Alice's rotated dephasing channel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AliceMapParams {
    pub omega: f64,
    pub d: f64,
    pub g: f64,
}

impl AliceMapParams {
    /// Unrotated map with the dephasing axis switching from `σ_h` to `σ_m` at `π/4`.
    pub fn kaniewski(a: f64) -> Self {
        Self {
            omega: 0.0,
            d: if a <= FRAC_PI_4 { 0.0 } else { FRAC_PI_2 },
            g: strength_g(a),
        }
    }
}

/// `Γ(d) = cos(d) σ_h − sin(d) σ_m`.
pub fn alice_dephasing_axis(d: f64) -> HermitianOperator {
    let (s, c) = d.sin_cos();
    pauli(PauliName::H).scale(c) - pauli(PauliName::M).scale(s)
}

/// Unitary acting on the Bloch `(σ_h, σ_m)` coordinates as the rotation `R(ω)`.
pub fn alice_rotation(omega: f64) -> ComplexMatrix {
    let (s, c) = (omega / 2.0).sin_cos();
    // cos(ω/2) 1 + i sin(ω/2) σ_y
    ComplexMatrix::from_real2([[c, s], [-s, c]])
}

pub fn alice_channel(params: &AliceMapParams) -> QubitChannel {
    QubitChannel::dephasing(
        params.g,
        &alice_dephasing_axis(params.d),
        alice_rotation(params.omega),
    )
}

/// Fidelities and scores of the extracted states on the `b = 0` and `b = π/2` edges.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameEvaluation {
    pub f_up: f64,
    pub f_down: f64,
    pub s_up: f64,
    pub s_down: f64,
}

impl FrameEvaluation {
    pub fn slope_up(&self) -> f64 {
        (1.0 - self.f_up) / (TSIRELSON - self.s_up)
    }

    pub fn slope_down(&self) -> f64 {
        (1.0 - self.f_down) / (TSIRELSON - self.s_down)
    }

    /// The minimax objective over `(ω, d)`.
    pub fn max_slope(&self) -> f64 {
        self.slope_up().max(self.slope_down())
    }
}

fn rot(t: f64) -> [[f64; 2]; 2] {
    let (s, c) = t.sin_cos();
    [[c, -s], [s, c]]
}

fn mat_vec(m: &[[f64; 2]; 2], v: [f64; 2]) -> [f64; 2] {
    [
        m[0][0] * v[0] + m[0][1] * v[1],
        m[1][0] * v[0] + m[1][1] * v[1],
    ]
}

/// Bloch-plane action `R(ω − d) · diag(1, g) · R(d)` of Alice's channel in `(σ_h, σ_m)` coordinates.
pub fn alice_bloch_map(g: f64, omega: f64, d: f64, v: [f64; 2]) -> [f64; 2] {
    let w = mat_vec(&rot(d), v);
    mat_vec(&rot(omega - d), [w[0], g * w[1]])
}

pub fn frame_fidelities(theta: Theta, a: f64, omega: f64, d: f64) -> FrameEvaluation {
    let g = strength_g(a);
    let (sa, ca) = a.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let up = alice_bloch_map(g, omega, d, [ca, sa]);
    let down = alice_bloch_map(g, omega, d, [ca, -sa]);
    let (st, ct) = theta.value().sin_cos();
    FrameEvaluation {
        f_up: 0.25 * (1.0 + r * (up[0] + up[1])),
        f_down: 0.25 * (1.0 + r * (down[0] - down[1])),
        s_up: TSIRELSON * ct,
        s_down: TSIRELSON * st,
    }
}

fn check_alice_theta(theta: Theta) -> Result<()> {
    let t = theta.value();
    if t <= 0.0 || t >= FRAC_PI_2 {
        return Err(Error::Domain(format!(
            "frame slopes are singular at theta = {t}"
        )));
    }
    Ok(())
}

fn ranking_objective(theta: Theta, a: f64, omega: f64, d: f64) -> f64 {
    let e = frame_fidelities(theta, a, omega, d);
    let (up, down) = (e.slope_up(), e.slope_down());
    up.max(down) + TIE_BREAK_WEIGHT * up.min(down)
}

fn wrap_angle(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y + 2.0 * PI
    } else {
        y
    }
}

fn finish(theta: Theta, a: f64, omega: f64, d: f64) -> AliceMapParams {
    let candidate = AliceMapParams {
        omega: wrap_angle(omega),
        d: wrap_angle(d),
        g: strength_g(a),
    };
    let reference = AliceMapParams::kaniewski(a);
    let cand = frame_fidelities(theta, a, candidate.omega, candidate.d).max_slope();
    let base = frame_fidelities(theta, a, reference.omega, reference.d).max_slope();
    if cand <= base + 1e-12 {
        candidate
    } else {
        reference
    }
}

fn alice_starts(a: f64) -> Vec<[f64; 2]> {
    let k = AliceMapParams::kaniewski(a);
    let mut starts = vec![[k.omega, k.d], [0.0, 0.0]];
    // remaining starts on a fixed spread over the torus
    let extra = ALICE_STARTS.saturating_sub(starts.len());
    for i in 0..extra {
        let u = (i as f64 + 0.5) / extra as f64;
        let v = (u * 0.618_033_988_749_895 * 7.0).fract();
        starts.push([PI * (2.0 * u - 1.0), PI * (2.0 * v - 1.0)]);
    }
    starts.truncate(ALICE_STARTS);
    starts
}

/// Multistart minimization of the max-slope objective over `(ω, d)`.
pub fn optimize_alice_params(theta: Theta, a: f64) -> Result<AliceMapParams> {
    check_alice_theta(theta)?;
    let opts = SimplexOptions {
        initial_step: 0.4,
        tol: ALICE_TOL,
        max_iters: 2000,
    };
    let best = alice_starts(a)
        .into_iter()
        .map(|x0| {
            neldermead::minimize(
                |x: &[f64; 2]| ranking_objective(theta, a, x[0], x[1]),
                x0,
                None,
                &opts,
            )
        })
        .min_by(|p, q| p.value.total_cmp(&q.value))
        .expect("at least one start");
    Ok(finish(theta, a, best.x[0], best.x[1]))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AliceGridEntry {
    pub a: f64,
    pub omega: f64,
    pub d: f64,
}

/// Precomputed `(ω, d)` on a uniform grid of Alice settings for one `θ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AliceParamGrid {
    pub theta: Theta,
    pub entries: Vec<AliceGridEntry>,
}

impl AliceParamGrid {
    pub fn build(theta: Theta) -> Result<Self> {
        check_alice_theta(theta)?;
        let n = ALICE_GRID_POINTS;
        let entries = (0..n)
            .map(|i| {
                let a = FRAC_PI_2 * i as f64 / (n - 1) as f64;
                optimize_alice_params(theta, a).map(|p| AliceGridEntry {
                    a,
                    omega: p.omega,
                    d: p.d,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { theta, entries })
    }

    /// Checks that a deserialized grid is usable.
    pub fn validate(&self) -> Result<()> {
        check_alice_theta(self.theta)?;
        if self.entries.len() < 2 {
            return Err(Error::Table(
                "Alice parameter grid has fewer than two points".into(),
            ));
        }
        if self.entries.windows(2).any(|w| w[1].a <= w[0].a) {
            return Err(Error::Table(
                "Alice parameter grid is not increasing in a".into(),
            ));
        }
        Ok(())
    }

    fn nearest(&self, a: f64) -> &AliceGridEntry {
        self.entries
            .iter()
            .min_by(|p, q| (p.a - a).abs().total_cmp(&(q.a - a).abs()))
            .expect("non-empty grid")
    }

    /// Parameters for an arbitrary setting, warm-started from the nearest grid point.
    pub fn params_at(&self, a: f64) -> AliceMapParams {
        let near = self.nearest(a);
        if (near.a - a).abs() <= 1e-12 {
            return AliceMapParams {
                omega: near.omega,
                d: near.d,
                g: strength_g(a),
            };
        }
        let theta = self.theta;
        let opts = SimplexOptions {
            initial_step: 0.05,
            tol: ALICE_TOL,
            max_iters: 600,
        };
        let warm = neldermead::minimize(
            |x: &[f64; 2]| ranking_objective(theta, a, x[0], x[1]),
            [near.omega, near.d],
            None,
            &opts,
        );
        let start_value = ranking_objective(theta, a, near.omega, near.d);
        let (omega, d) = if warm.value <= start_value {
            (warm.x[0], warm.x[1])
        } else {
            (near.omega, near.d)
        };
        finish(theta, a, omega, d)
    }

    pub fn channel_at(&self, a: f64) -> QubitChannel {
        alice_channel(&self.params_at(a))
    }
}

/// `(Λ_A ⊗ Λ_B)[ρ]`.
pub fn apply_product_channel(
    alice: &QubitChannel,
    bob: &QubitChannel,
    rho: &DensityMatrix,
) -> DensityMatrix {
    let mut out = ComplexMatrix::zeros(4).expect("dim 4");
    for ka in alice.kraus() {
        for kb in bob.kraus() {
            let k = ka.kron(kb).expect("qubit Kraus operators");
            out = out + k * *rho.matrix() * k.adjoint();
        }
    }
    DensityMatrix::trusted(out)
}
