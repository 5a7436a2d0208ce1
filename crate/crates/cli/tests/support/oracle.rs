//! Brute-force reference for the single-constraint fidelity SDP.
//!
//! Minimizes `tr(Mρ)` subject to `tr(Bρ) ≥ β'` by an augmented Lagrangian over
//! `ρ = LL†/tr(LL†)` with a full complex 4×4 `L`, each inner problem solved by
//! L-BFGS. Shares no code with the solver under test.

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type M4 = Matrix4<Complex64>;

fn re_trace(a: &M4) -> f64 {
    a.trace().re
}

fn density(l: &M4) -> M4 {
    let p = l * l.adjoint();
    let t = re_trace(&p);
    p / Complex64::new(t, 0.0)
}

pub fn lambda_min(h: &M4) -> f64 {
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    sym.symmetric_eigen().eigenvalues.min()
}

struct Lagrangian<'a> {
    m: &'a M4,
    b: &'a M4,
    beta: f64,
    lambda: f64,
    c: f64,
}

impl Lagrangian<'_> {
    /// Value and gradient with respect to `L` (real and imaginary parts packed in one complex matrix).
    fn eval(&self, l: &M4) -> (f64, M4) {
        let t = re_trace(&(l * l.adjoint()));
        let rho = density(l);
        let fm = re_trace(&(self.m * rho));
        let score = re_trace(&(self.b * rho));
        let shifted = (self.lambda + self.c * (self.beta - score)).max(0.0);
        let value = fm + (shifted * shifted - self.lambda * self.lambda) / (2.0 * self.c);
        let g = self.m - self.b * Complex64::new(shifted, 0.0);
        let s = re_trace(&(g * rho));
        let grad = (g - M4::identity() * Complex64::new(s, 0.0)) * l * Complex64::new(2.0 / t, 0.0);
        (value, grad)
    }
}

fn dot(a: &M4, b: &M4) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum()
}

fn lbfgs(f: &Lagrangian, mut x: M4, iters: usize) -> M4 {
    const MEM: usize = 8;
    let mut s_hist: Vec<M4> = Vec::new();
    let mut y_hist: Vec<M4> = Vec::new();
    let (mut fx, mut gx) = f.eval(&x);
    for _ in 0..iters {
        if dot(&gx, &gx).sqrt() < 1e-12 {
            break;
        }
        // two-loop recursion
        let mut q = gx;
        let mut alphas = Vec::with_capacity(s_hist.len());
        for (s, y) in s_hist.iter().zip(&y_hist).rev() {
            let rho = 1.0 / dot(y, s);
            let a = rho * dot(s, &q);
            q -= y * Complex64::new(a, 0.0);
            alphas.push((a, rho));
        }
        if let (Some(s), Some(y)) = (s_hist.last(), y_hist.last()) {
            q *= Complex64::new(dot(s, y) / dot(y, y), 0.0);
        } else {
            q *= Complex64::new(1e-2 / dot(&gx, &gx).sqrt().max(1e-12), 0.0);
        }
        for ((s, y), (a, rho)) in s_hist.iter().zip(&y_hist).zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &q);
            q += s * Complex64::new(a - b, 0.0);
        }
        let mut dir = -q;
        let mut slope = dot(&gx, &dir);
        if slope >= 0.0 {
            dir = -gx;
            slope = -dot(&gx, &gx);
            s_hist.clear();
            y_hist.clear();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let xn = x + dir * Complex64::new(step, 0.0);
            let (fn_, gn) = f.eval(&xn);
            if fn_ <= fx + 1e-4 * step * slope {
                accepted = Some((xn, fn_, gn));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        let s = xn - x;
        let y = gn - gx;
        if dot(&s, &y) > 1e-300 {
            s_hist.push(s);
            y_hist.push(y);
            if s_hist.len() > MEM {
                s_hist.remove(0);
                y_hist.remove(0);
            }
        }
        // keep L well scaled; ρ is invariant under L ↦ cL
        let norm = dot(&xn, &xn).sqrt();
        x = xn / Complex64::new(norm, 0.0);
        if norm != 1.0 {
            s_hist
                .iter_mut()
                .for_each(|v| *v /= Complex64::new(norm, 0.0));
            y_hist
                .iter_mut()
                .for_each(|v| *v *= Complex64::new(norm, 0.0));
        }
        let converged = (fx - fn_).abs() <= 1e-15 * fx.abs().max(1.0);
        let (f2, g2) = f.eval(&x);
        fx = f2;
        gx = g2;
        if converged {
            break;
        }
    }
    x
}

#[derive(Clone, Copy, Debug)]
pub struct OracleResult {
    pub value: f64,
    pub violation: f64,
}

/// Best feasible value over `restarts` random starting factors.
pub fn penalty_minimum(m: &M4, b: &M4, beta: f64, restarts: usize, seed: u64) -> OracleResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = OracleResult {
        value: f64::INFINITY,
        violation: f64::INFINITY,
    };
    for _ in 0..restarts {
        let mut l =
            M4::from_fn(|_, _| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
        let mut lag = Lagrangian {
            m,
            b,
            beta,
            lambda: 0.0,
            c: 10.0,
        };
        for _ in 0..40 {
            l = lbfgs(&lag, l, 400);
            let rho = density(&l);
            let g = beta - re_trace(&(b * rho));
            lag.lambda = (lag.lambda + lag.c * g).max(0.0);
            if g.abs() < 1e-11 || (g < 0.0 && lag.lambda == 0.0) {
                break;
            }
            lag.c = (lag.c * 2.0).min(1e4);
        }
        let rho = density(&l);
        let value = re_trace(&(m * rho));
        let violation = (beta - re_trace(&(b * rho))).max(0.0);
        if violation <= 1e-6 && value < best.value {
            best = OracleResult { value, violation };
        }
    }
    best
}
