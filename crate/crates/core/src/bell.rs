//! Generalized CHSH operators restricted to a single qubit block.
//!
//! Alice measures `A_x = cos(a) σ_h + (−1)^x sin(a) σ_m` and Bob measures
//! `B_y = cos(b) σ_z + (−1)^y sin(b) σ_x`, with both angles in `[0, π/2]`.

use std::f64::consts::{FRAC_PI_2, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{bloch_zx, pauli, tensor, HermitianOperator, PauliName};

/// Slack accepted on the `[0, π/2]` domain checks so that values produced by
/// floating-point arithmetic on the boundary are not rejected.
pub(crate) const ANGLE_SLACK: f64 = 1e-12;

/// Maximal quantum value of every generalized CHSH operator.
pub const TSIRELSON: f64 = 2.0 * SQRT_2;

fn check_quarter_turn(name: &str, value: f64) -> Result<f64> {
    if !value.is_finite() || value < -ANGLE_SLACK || value > FRAC_PI_2 + ANGLE_SLACK {
        return Err(Error::Domain(format!(
            "{name} = {value} is outside [0, pi/2]"
        )));
    }
    Ok(value.clamp(0.0, FRAC_PI_2))
}

/// Weight angle of a generalized CHSH test, `θ ∈ [0, π/2]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Theta(f64);

impl Theta {
    pub fn new(value: f64) -> Result<Self> {
        Ok(Self(check_quarter_turn("theta", value)?))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_chsh(self) -> bool {
        (self.0 - std::f64::consts::FRAC_PI_4).abs() < 1e-15
    }
}

impl TryFrom<f64> for Theta {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Self::new(v)
    }
}

impl From<Theta> for f64 {
    fn from(t: Theta) -> f64 {
        t.0
    }
}

/// Measurement angles `(a, b)` of one Jordan block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementAngles {
    pub a: f64,
    pub b: f64,
}

impl MeasurementAngles {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        Ok(Self {
            a: check_quarter_turn("a", a)?,
            b: check_quarter_turn("b", b)?,
        })
    }
}

/// Observed correlators `X = ⟨A_0(B_0+B_1)⟩` and `Y = ⟨A_1(B_0−B_1)⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorPair {
    pub x: f64,
    pub y: f64,
}

impl CorrelatorPair {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        for (name, v) in [("X", x), ("Y", y)] {
            if !v.is_finite() || v.abs() > 2.0 + 1e-12 {
                return Err(Error::Domain(format!("|{name}| = {} exceeds 2", v.abs())));
            }
        }
        Ok(Self { x, y })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Observables {
    pub a0: HermitianOperator,
    pub a1: HermitianOperator,
    pub b0: HermitianOperator,
    pub b1: HermitianOperator,
}

pub fn observables(angles: MeasurementAngles) -> Observables {
    let (sa, ca) = angles.a.sin_cos();
    let (sb, cb) = angles.b.sin_cos();
    let h = pauli(PauliName::H);
    let m = pauli(PauliName::M);
    Observables {
        a0: h.scale(ca) + m.scale(sa),
        a1: h.scale(ca) - m.scale(sa),
        b0: bloch_zx(cb, sb),
        b1: bloch_zx(cb, -sb),
    }
}

/// `B_θ(a, b) = √2 (cos θ A_0 ⊗ (B_0 + B_1) + sin θ A_1 ⊗ (B_0 − B_1))`.
pub fn bell_operator(theta: Theta, angles: MeasurementAngles) -> HermitianOperator {
    let obs = observables(angles);
    let (st, ct) = theta.value().sin_cos();
    let first = tensor(&obs.a0, &(obs.b0 + obs.b1)).expect("qubit factors");
    let second = tensor(&obs.a1, &(obs.b0 - obs.b1)).expect("qubit factors");
    (first.scale(ct) + second.scale(st)).scale(SQRT_2)
}

/// Coefficients of the CHSH operator in the `{σ_h, σ_m} ⊗ {σ_z, σ_x}` basis.
pub fn chsh_coefficient_matrix(angles: MeasurementAngles) -> [[f64; 2]; 2] {
    let (sa, ca) = angles.a.sin_cos();
    let (sb, cb) = angles.b.sin_cos();
    [[ca * cb, ca * sb], [sa * cb, -sa * sb]]
}

/// Largest score reachable by local deterministic strategies.
pub fn local_bound(theta: Theta) -> f64 {
    let (s, c) = theta.value().sin_cos();
    TSIRELSON * c.max(s)
}

pub fn score_from_correlators(theta: Theta, c: CorrelatorPair) -> f64 {
    let (s, co) = theta.value().sin_cos();
    SQRT_2 * (co * c.x + s * c.y)
}

/// Prefactor and Bob-side directions of the Bell operator on the `a ∈ {0, π/2}` edges.
#[derive(Clone, Copy, Debug)]
pub struct FrameQuantities {
    pub f: f64,
    pub sigma_plus: HermitianOperator,
    pub sigma_minus: HermitianOperator,
}

pub fn frame_quantities(theta: Theta, b: f64) -> Result<FrameQuantities> {
    let b = check_quarter_turn("b", b)?;
    let (st, ct) = theta.value().sin_cos();
    let (sb, cb) = b.sin_cos();
    let f = (1.0 + (2.0 * b).cos() * (2.0 * theta.value()).cos())
        .max(0.0)
        .sqrt();
    let z = cb * ct;
    let x = sb * st;
    let norm = (z * z + x * x).sqrt();
    if norm <= 1e-300 {
        // θ and b at opposite ends: the operator vanishes on this edge.
        return Err(Error::Domain(format!(
            "frame direction undefined at theta = {}, b = {b}",
            theta.value()
        )));
    }
    Ok(FrameQuantities {
        f,
        sigma_plus: bloch_zx(z / norm, x / norm),
        sigma_minus: bloch_zx(z / norm, -x / norm),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, phi_plus, ComplexMatrix};
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

    fn close(a: &HermitianOperator, b: &HermitianOperator, tol: f64) -> bool {
        a.matrix().max_abs_diff(b.matrix()) <= tol
    }

    #[test]
    fn observables_at_special_angles() {
        let o = observables(MeasurementAngles::new(FRAC_PI_4, 0.0).unwrap());
        assert!(close(&o.a0, &pauli(PauliName::Z), 1e-15));
        assert!(close(&o.a1, &pauli(PauliName::X), 1e-15));
        assert!(close(&o.b0, &pauli(PauliName::Z), 1e-15));
        assert!(close(&o.b1, &pauli(PauliName::Z), 1e-15));

        let o = observables(MeasurementAngles::new(0.0, 1.0).unwrap());
        assert!(close(&o.a0, &pauli(PauliName::H), 1e-15));
        assert!(close(&o.a1, &pauli(PauliName::H), 1e-15));
    }

    #[test]
    fn observables_are_involutions() {
        let o = observables(MeasurementAngles::new(0.3, 1.1).unwrap());
        let id = ComplexMatrix::identity(2).unwrap();
        for op in [o.a0, o.a1, o.b0, o.b1] {
            let sq = *op.matrix() * *op.matrix();
            assert!(sq.max_abs_diff(&id) < 1e-12);
            let e = eig_hermitian(&op);
            assert!((e.values[0] - 1.0).abs() < 1e-12 && (e.values[1] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn chsh_operator_at_origin_is_h_z() {
        let t = Theta::new(FRAC_PI_4).unwrap();
        let b = bell_operator(t, MeasurementAngles::new(0.0, 0.0).unwrap());
        let want = tensor(&pauli(PauliName::H), &pauli(PauliName::Z))
            .unwrap()
            .scale(2.0);
        assert!(close(&b, &want, 1e-14));
    }

    #[test]
    fn optimal_settings_expand_to_zz_xx() {
        for theta in [0.2, FRAC_PI_8, 0.6, FRAC_PI_4, 1.2] {
            let t = Theta::new(theta).unwrap();
            let b = bell_operator(t, MeasurementAngles::new(FRAC_PI_4, theta).unwrap());
            let (s, c) = theta.sin_cos();
            let zz = tensor(&pauli(PauliName::Z), &pauli(PauliName::Z)).unwrap();
            let xx = tensor(&pauli(PauliName::X), &pauli(PauliName::X)).unwrap();
            let want = (zz.scale(c * c) + xx.scale(s * s)).scale(TSIRELSON);
            assert!(close(&b, &want, 1e-14));
            let e = eig_hermitian(&b);
            assert!((e.values[0] - TSIRELSON).abs() < 1e-12);
            assert!(phi_plus().overlap(&e.vectors[0]) > 1.0 - 1e-10);
        }
    }

    #[test]
    fn tsirelson_spectrum_of_chsh() {
        let t = Theta::new(FRAC_PI_4).unwrap();
        let b = bell_operator(t, MeasurementAngles::new(FRAC_PI_4, FRAC_PI_4).unwrap());
        let e = eig_hermitian(&b);
        let want = [TSIRELSON, 0.0, 0.0, -TSIRELSON];
        for (g, w) in e.values.iter().zip(want) {
            assert!((g - w).abs() < 1e-12, "{:?}", e.values);
        }
    }

    #[test]
    fn coefficient_matrix_examples() {
        let m = chsh_coefficient_matrix(MeasurementAngles::new(0.0, 0.0).unwrap());
        assert_eq!(m, [[1.0, 0.0], [0.0, 0.0]]);
        let m = chsh_coefficient_matrix(MeasurementAngles::new(FRAC_PI_4, FRAC_PI_4).unwrap());
        let want = [[0.5, 0.5], [0.5, -0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m[i][j] - want[i][j]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn local_bound_examples() {
        assert!((local_bound(Theta::new(FRAC_PI_4).unwrap()) - 2.0).abs() < 1e-15);
        assert!((local_bound(Theta::new(0.0).unwrap()) - TSIRELSON).abs() < 1e-15);
        let v = local_bound(Theta::new(FRAC_PI_8).unwrap());
        assert!((v - 2.613125929752753).abs() < 1e-12);
    }

    #[test]
    fn scores_from_correlators() {
        let chsh = Theta::new(FRAC_PI_4).unwrap();
        let s = score_from_correlators(chsh, CorrelatorPair::new(SQRT_2, SQRT_2).unwrap());
        assert!((s - TSIRELSON).abs() < 1e-14);
        let s = score_from_correlators(
            Theta::new(0.0).unwrap(),
            CorrelatorPair::new(2.0, 0.0).unwrap(),
        );
        assert!((s - TSIRELSON).abs() < 1e-14);
        let s = score_from_correlators(chsh, CorrelatorPair::new(2.0, 0.0).unwrap());
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn frame_quantity_examples() {
        let q = frame_quantities(Theta::new(FRAC_PI_4).unwrap(), 0.7).unwrap();
        assert!((q.f - 1.0).abs() < 1e-15);
        let q = frame_quantities(Theta::new(0.5).unwrap(), 0.0).unwrap();
        assert!(close(&q.sigma_plus, &pauli(PauliName::Z), 1e-15));
        assert!(close(&q.sigma_minus, &pauli(PauliName::Z), 1e-15));
        assert!((q.f - SQRT_2 * 0.5f64.cos()).abs() < 1e-14);
        let q = frame_quantities(Theta::new(FRAC_PI_8).unwrap(), FRAC_PI_2).unwrap();
        assert!((q.f - 0.541196100146197).abs() < 1e-12);
    }

    #[test]
    fn frame_table_matches_bell_operator_on_edges() {
        let t = Theta::new(0.3).unwrap();
        let h = pauli(PauliName::H);
        let m = pauli(PauliName::M);
        for b in [0.0, 0.2, 0.9, 1.4, FRAC_PI_2] {
            let q = frame_quantities(t, b).unwrap();
            let left = bell_operator(t, MeasurementAngles::new(0.0, b).unwrap()).scale(0.5);
            let want = tensor(&h, &q.sigma_plus).unwrap().scale(q.f);
            assert!(close(&left, &want, 1e-13));
            let right = bell_operator(t, MeasurementAngles::new(FRAC_PI_2, b).unwrap()).scale(0.5);
            let want = tensor(&m, &q.sigma_minus).unwrap().scale(q.f);
            assert!(close(&right, &want, 1e-13));
        }
    }

    #[test]
    fn angles_outside_domain_are_rejected() {
        assert!(Theta::new(-0.1).is_err());
        assert!(Theta::new(PI).is_err());
        assert!(MeasurementAngles::new(0.0, 2.0).is_err());
        assert!(CorrelatorPair::new(2.5, 0.0).is_err());
        assert!(Theta::new(FRAC_PI_2 + 1e-14).is_ok());
    }
}
