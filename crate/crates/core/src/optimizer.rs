//! Minimization of the worst-case fidelity over measurement angles `(a, b) ∈ [0, π/2]²`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use log::{debug, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bell::{bell_operator, MeasurementAngles, Theta, TSIRELSON};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::eig_hermitian;
use crate::maps::{bob_channel, AliceParamGrid};
use crate::neldermead::{self, Bounds, SimplexOptions};
use crate::sdp::{pullback_objective, solve_with, SdpInstance, SdpResult, SdpStatus};

const BOX: Bounds<2> = [(0.0, FRAC_PI_2), (0.0, FRAC_PI_2)];
const MAX_ESCALATIONS: usize = 3;
/// Random starts are spread over a 4×4 tiling of the box, one cell per restart in turn.
const STRATA: usize = 4;
/// Extra draws per restart when looking for a feasible random start.
const START_RESAMPLES: usize = 8;
const SIMPLEX_STEP: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AngleSearchConfig {
    pub restarts: usize,
    pub local_tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for AngleSearchConfig {
    fn default() -> Self {
        Self {
            restarts: 12,
            local_tol: 1e-7,
            max_iters: 400,
            seed: 0,
        }
    }
}

impl AngleSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::Input("restarts must be at least 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Input("max_iters must be at least 1".into()));
        }
        if !(self.local_tol > 0.0) {
            return Err(Error::Input(format!(
                "local_tol {} must be positive",
                self.local_tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AngleMinimum {
    pub angles: MeasurementAngles,
    pub fidelity: f64,
    /// Best fidelity reached by each restart that found a feasible point.
    pub all_restart_values: Vec<f64>,
    /// Number of restarts behind this value, after any escalation.
    pub restarts_used: usize,
}

/// `V(a, b) = 1 + (a − π/4)² + (b − θ)²`, minimized at the maximally violating angles.
pub fn guidance_potential(theta: Theta, angles: MeasurementAngles) -> f64 {
    1.0 + (angles.a - FRAC_PI_4).powi(2) + (angles.b - theta.value()).powi(2)
}

/// The inner problem for one `θ`: Alice's parameter grid and solver tolerances.
#[derive(Clone, Debug)]
pub struct AngleProblem {
    theta: Theta,
    grid: AliceParamGrid,
    tol: Tolerances,
}

impl AngleProblem {
    pub fn new(theta: Theta) -> Result<Self> {
        Ok(Self::with_grid(AliceParamGrid::build(theta)?))
    }

    pub fn with_grid(grid: AliceParamGrid) -> Self {
        Self {
            theta: grid.theta,
            grid,
            tol: Tolerances::default(),
        }
    }

    pub fn with_tolerances(mut self, tol: Tolerances) -> Self {
        self.tol = tol;
        self
    }

    pub fn theta(&self) -> Theta {
        self.theta
    }

    pub fn grid(&self) -> &AliceParamGrid {
        &self.grid
    }

    pub fn max_score(&self, angles: MeasurementAngles) -> f64 {
        eig_hermitian(&bell_operator(self.theta, angles)).max()
    }

    pub fn is_feasible(&self, angles: MeasurementAngles, beta: f64) -> bool {
        beta <= self.max_score(angles) + self.tol.feasibility
    }

    pub fn instance(&self, angles: MeasurementAngles, beta: f64) -> Result<SdpInstance> {
        let alice = self.grid.channel_at(angles.a);
        let bob = bob_channel(self.theta, angles.b)?;
        SdpInstance::new(
            pullback_objective(&alice, &bob),
            bell_operator(self.theta, angles),
            beta,
        )
    }

    /// Solves the fidelity SDP at fixed angles.
    pub fn solve_at(&self, angles: MeasurementAngles, beta: f64) -> Result<SdpResult> {
        Ok(solve_with(&self.instance(angles, beta)?, &self.tol))
    }

    /// SDP value where feasible, `None` otherwise.
    pub fn fidelity_at(&self, angles: MeasurementAngles, beta: f64) -> Option<f64> {
        if !self.is_feasible(angles, beta) {
            return None;
        }
        let r = self.solve_at(angles, beta).ok()?;
        (r.status == SdpStatus::Optimal).then_some(r.primal_value)
    }

    /// The hybrid objective: fidelity where feasible, guidance potential elsewhere.
    pub fn objective(&self, angles: MeasurementAngles, beta: f64) -> f64 {
        self.fidelity_at(angles, beta)
            .unwrap_or_else(|| guidance_potential(self.theta, angles))
    }

    fn starts(&self, beta: f64, config: &AngleSearchConfig) -> Vec<[f64; 2]> {
        let fixed = [
            [FRAC_PI_4, self.theta.value()],
            [0.0, 0.0],
            [0.0, FRAC_PI_2],
            [FRAC_PI_2, 0.0],
            [FRAC_PI_2, FRAC_PI_2],
        ];
        (0..config.restarts)
            .map(|i| {
                if i < fixed.len() {
                    return fixed[i];
                }
                // one RNG stream per restart keeps the start list prefix-stable
                let j = i - fixed.len();
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                rng.set_stream(j as u64 + 1);
                let cell = (j * 7) % (STRATA * STRATA);
                let (cx, cy) = ((cell % STRATA) as f64, (cell / STRATA) as f64);
                let width = FRAC_PI_2 / STRATA as f64;
                let mut draw = || {
                    [
                        (cx + rng.gen::<f64>()) * width,
                        (cy + rng.gen::<f64>()) * width,
                    ]
                };
                let first = draw();
                let mut x = first;
                for _ in 0..START_RESAMPLES {
                    if self.is_feasible(MeasurementAngles { a: x[0], b: x[1] }, beta) {
                        return x;
                    }
                    x = draw();
                }
                first
            })
            .collect()
    }

    /// Multistart Nelder-Mead over the angle box.
    pub fn min_fidelity_over_angles(
        &self,
        beta: f64,
        config: &AngleSearchConfig,
    ) -> Result<AngleMinimum> {
        config.validate()?;
        if !beta.is_finite() || beta > TSIRELSON + self.tol.feasibility {
            return Err(Error::InfeasibleScore { score: beta });
        }
        let opts = SimplexOptions {
            initial_step: SIMPLEX_STEP,
            tol: config.local_tol,
            max_iters: config.max_iters,
        };
        let mut best: Option<(f64, [f64; 2])> = None;
        let mut values = Vec::new();
        for x0 in self.starts(beta, config) {
            let mut restart_best: Option<(f64, [f64; 2])> = None;
            neldermead::minimize(
                |x: &[f64; 2]| {
                    let angles = MeasurementAngles { a: x[0], b: x[1] };
                    match self.fidelity_at(angles, beta) {
                        Some(f) => {
                            if restart_best.map_or(true, |(v, _)| f < v) {
                                restart_best = Some((f, *x));
                            }
                            f
                        }
                        None => guidance_potential(self.theta, angles),
                    }
                },
                x0,
                Some(&BOX),
                &opts,
            );
            if let Some((v, x)) = restart_best {
                values.push(v);
                if best.map_or(true, |(b, _)| v < b) {
                    best = Some((v, x));
                }
            }
        }
        let (fidelity, x) = best.ok_or(Error::InfeasibleScore { score: beta })?;
        debug!(
            "theta = {}, beta = {beta}: min fidelity {fidelity} at ({}, {})",
            self.theta.value(),
            x[0],
            x[1]
        );
        Ok(AngleMinimum {
            angles: MeasurementAngles { a: x[0], b: x[1] },
            fidelity,
            all_restart_values: values,
            restarts_used: config.restarts,
        })
    }

    /// Minimization that keeps recorded minima nonincreasing along a decreasing score sweep.
    pub fn certified_min(
        &self,
        beta: f64,
        previous: Option<&AngleMinimum>,
        config: &AngleSearchConfig,
    ) -> Result<AngleMinimum> {
        let mut current = self.min_fidelity_over_angles(beta, config)?;
        let Some(prev) = previous else {
            return Ok(current);
        };
        let mut cfg = *config;
        for _ in 0..MAX_ESCALATIONS {
            if current.fidelity <= prev.fidelity + self.tol.monotonicity {
                return Ok(current);
            }
            cfg.restarts *= 2;
            debug!(
                "beta = {beta}: minimum {} above previous {}, retrying with {} restarts",
                current.fidelity, prev.fidelity, cfg.restarts
            );
            current = self.min_fidelity_over_angles(beta, &cfg)?;
        }
        if current.fidelity <= prev.fidelity + self.tol.monotonicity {
            return Ok(current);
        }
        warn!(
            "theta = {}, beta = {beta}: minimum {} still above previous {} after {} restarts, keeping previous",
            self.theta.value(),
            current.fidelity,
            prev.fidelity,
            cfg.restarts
        );
        Ok(AngleMinimum {
            angles: prev.angles,
            fidelity: prev.fidelity,
            ..current
        })
    }
}

/// Builds the problem for `θ` and runs [`AngleProblem::min_fidelity_over_angles`].
pub fn min_fidelity_over_angles(
    theta: Theta,
    beta: f64,
    config: &AngleSearchConfig,
) -> Result<AngleMinimum> {
    AngleProblem::new(theta)?.min_fidelity_over_angles(beta, config)
}

/// Builds the problem for `θ` and runs [`AngleProblem::certified_min`].
pub fn certified_min(
    theta: Theta,
    beta: f64,
    previous: Option<&AngleMinimum>,
    config: &AngleSearchConfig,
) -> Result<AngleMinimum> {
    AngleProblem::new(theta)?.certified_min(beta, previous, config)
}
