//! Choosing the generalized CHSH test for observed correlators `(X, Y)`.

use std::fmt;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bell::{score_from_correlators, CorrelatorPair, Theta, TSIRELSON};
use crate::bounds::{bound_at, BoundCurve, THETA_MAX, THETA_MIN};
use crate::error::{Error, Result};

const REGION_TOL: f64 = 1e-12;
const TIE_TOL: f64 = 1e-12;
const THETA_MATCH: f64 = 1e-9;
pub const DEFAULT_SCAN_POINTS: usize = 500;
pub const DEFAULT_MESH_DELTA: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    /// Relabel Alice's outcomes for input 0.
    FlipX,
    /// Relabel Alice's outcomes for input 1.
    FlipY,
    /// Exchange Alice's inputs and relabel Bob's outcomes for input 1.
    SwapXY,
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Symmetry::FlipX => "flip-x",
            Symmetry::FlipY => "flip-y",
            Symmetry::SwapXY => "swap-xy",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalizedCorrelators {
    pub x: f64,
    pub y: f64,
    pub transform_log: Vec<Symmetry>,
}

pub fn normalize(c: CorrelatorPair) -> NormalizedCorrelators {
    let mut log = Vec::new();
    let (mut x, mut y) = (c.x, c.y);
    if x < 0.0 {
        x = -x;
        log.push(Symmetry::FlipX);
    }
    if y < 0.0 {
        y = -y;
        log.push(Symmetry::FlipY);
    }
    if x < y {
        std::mem::swap(&mut x, &mut y);
        log.push(Symmetry::SwapXY);
    }
    NormalizedCorrelators {
        x,
        y,
        transform_log: log,
    }
}

/// Which region constraint a point violates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RegionViolation {
    /// `X + Y < 2`: reachable by local models.
    BelowLocalLine { sum: f64 },
    /// `X² + Y² > 4`: beyond quantum correlations.
    OutsideQuantumCircle { norm_sq: f64 },
}

impl fmt::Display for RegionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionViolation::BelowLocalLine { sum } => {
                write!(f, "X + Y = {sum} is below 2")
            }
            RegionViolation::OutsideQuantumCircle { norm_sq } => {
                write!(f, "X² + Y² = {norm_sq} exceeds 4")
            }
        }
    }
}

pub fn region_violation(n: &NormalizedCorrelators) -> Option<RegionViolation> {
    let sum = n.x + n.y;
    let norm_sq = n.x * n.x + n.y * n.y;
    if norm_sq > 4.0 + REGION_TOL {
        Some(RegionViolation::OutsideQuantumCircle { norm_sq })
    } else if sum < 2.0 - REGION_TOL {
        Some(RegionViolation::BelowLocalLine { sum })
    } else {
        None
    }
}

pub fn in_region(n: &NormalizedCorrelators) -> bool {
    region_violation(n).is_none()
}

/// Uniform `θ` values over `[π/64, π/4]`, both ends included.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub points: usize,
}

impl Default for ThetaGrid {
    fn default() -> Self {
        Self {
            points: DEFAULT_SCAN_POINTS,
        }
    }
}

impl ThetaGrid {
    pub fn new(points: usize) -> Result<Self> {
        if points == 0 {
            return Err(Error::Input("theta grid needs at least one point".into()));
        }
        Ok(Self { points })
    }

    pub fn values(&self) -> Vec<Theta> {
        if self.points <= 1 {
            return vec![Theta::new(THETA_MAX).expect("pi/4")];
        }
        let n = self.points - 1;
        (0..=n)
            .map(|i| {
                let t = if i == n {
                    THETA_MAX
                } else {
                    THETA_MIN + (THETA_MAX - THETA_MIN) * i as f64 / n as f64
                };
                Theta::new(t).expect("inside [0, pi/2]")
            })
            .collect()
    }
}

/// Curves for every grid `θ`, in grid order.
#[derive(Clone, Debug)]
pub struct MatchedCurves(Vec<BoundCurve>);

impl MatchedCurves {
    pub fn new(table: &[BoundCurve], grid: &ThetaGrid) -> Result<Self> {
        grid.values()
            .into_iter()
            .map(|t| {
                table
                    .iter()
                    .find(|c| (c.theta.value() - t.value()).abs() <= THETA_MATCH)
                    .copied()
                    .ok_or(Error::TableIncomplete(t.value()))
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn curves(&self) -> &[BoundCurve] {
        &self.0
    }
}

/// Grid values of `θ` that have no curve in `table`.
pub fn missing_thetas(table: &[BoundCurve], grid: &ThetaGrid) -> Vec<Theta> {
    grid.values()
        .into_iter()
        .filter(|t| {
            !table
                .iter()
                .any(|c| (c.theta.value() - t.value()).abs() <= THETA_MATCH)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub theta_best: Theta,
    pub beta_at_best: f64,
    pub fidelity_bound: f64,
    pub in_region: bool,
}

/// Best bound over the grid; ties go to the largest `θ`.
pub fn select(n: &NormalizedCorrelators, curves: &MatchedCurves) -> Result<SelectionResult> {
    let chsh = Theta::new(THETA_MAX).expect("pi/4");
    if !in_region(n) {
        return Ok(SelectionResult {
            theta_best: chsh,
            beta_at_best: (n.x + n.y).min(TSIRELSON),
            fidelity_bound: 0.5,
            in_region: false,
        });
    }
    let c = CorrelatorPair { x: n.x, y: n.y };
    let scored = curves
        .curves()
        .iter()
        .map(|curve| {
            let beta = score_from_correlators(curve.theta, c).min(TSIRELSON);
            bound_at(curve, beta).map(|f| (curve.theta, beta, f))
        })
        .collect::<Result<Vec<_>>>()?;
    let best_f = scored.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let (theta_best, beta_at_best, fidelity_bound) = scored
        .into_iter()
        .filter(|s| s.2 >= best_f - TIE_TOL)
        .max_by(|p, q| p.0.value().total_cmp(&q.0.value()))
        .ok_or_else(|| Error::Input("empty theta grid".into()))?;
    Ok(SelectionResult {
        theta_best,
        beta_at_best,
        fidelity_bound,
        in_region: true,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshRecord {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "Y")]
    pub y: f64,
    pub fidelity: f64,
    pub theta: f64,
}

/// Grid points of pitch `delta` inside `{X ≥ Y ≥ 0, X + Y ≥ 2, X² + Y² ≤ 4}`.
pub fn mesh_points(delta: f64) -> Result<Vec<(f64, f64)>> {
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::Input(format!("mesh pitch {delta} must be positive")));
    }
    let steps = (2.0 / delta + REGION_TOL).floor() as usize;
    let mut pts = Vec::new();
    for i in 0..=steps {
        let x = i as f64 * delta;
        for j in 0..=i {
            let y = j as f64 * delta;
            let n = NormalizedCorrelators {
                x,
                y,
                transform_log: Vec::new(),
            };
            if in_region(&n) {
                pts.push((x, y));
            }
        }
    }
    Ok(pts)
}

pub fn mesh(delta: f64, curves: &MatchedCurves) -> Result<Vec<MeshRecord>> {
    mesh_points(delta)?
        .into_iter()
        .map(|(x, y)| {
            let n = NormalizedCorrelators {
                x,
                y,
                transform_log: Vec::new(),
            };
            select(&n, curves).map(|r| MeshRecord {
                x,
                y,
                fidelity: r.fidelity_bound,
                theta: r.theta_best.value(),
            })
        })
        .collect()
}

/// Writes `X,Y,fidelity,theta` rows atomically.
pub fn write_mesh_csv(records: &[MeshRecord], path: &Path) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = csv::Writer::from_writer(tmp.as_file_mut());
        for r in records {
            w.serialize(r)?;
        }
        if records.is_empty() {
            w.write_record(["X", "Y", "fidelity", "theta"])?;
        }
        w.flush()?;
    }
    tmp.as_file_mut().flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}
