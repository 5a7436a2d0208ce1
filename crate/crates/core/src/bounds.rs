//! Score sweeps, the convex roof through `(2√2, 1)`, the trivial score `β_θ^t`
//! and the resulting piecewise-linear fidelity bound.

use std::f64::consts::{FRAC_PI_4, PI};
use std::fs;
use std::io::Write;
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::bell::{local_bound, MeasurementAngles, Theta, TSIRELSON};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::optimizer::{AngleMinimum, AngleProblem, AngleSearchConfig};

pub const THETA_MIN: f64 = PI / 64.0;
pub const THETA_MAX: f64 = FRAC_PI_4;
pub const DEFAULT_KAPPA: f64 = 0.025;
pub const SCHEMA_VERSION: u32 = 1;
const THETA_SLACK: f64 = 1e-12;

/// Rejects `θ` outside `[π/64, π/4]`.
pub fn check_supported_theta(theta: Theta) -> Result<()> {
    let t = theta.value();
    if t < THETA_MIN - THETA_SLACK || t > THETA_MAX + THETA_SLACK {
        return Err(Error::Domain(format!(
            "theta = {t} is outside the supported range [pi/64, pi/4]"
        )));
    }
    Ok(())
}

/// Slope of the chord from `(β', F)` to `(2√2, 1)`.
pub fn slope(beta: f64, fidelity: f64) -> Result<f64> {
    if !(beta < TSIRELSON) {
        return Err(Error::Domain(format!(
            "slope needs a score below 2√2, got {beta}"
        )));
    }
    Ok((1.0 - fidelity) / (TSIRELSON - beta))
}

/// Score decrement `(θ/(π/4))²·κ`.
pub fn score_step(theta: Theta, kappa: f64) -> f64 {
    (theta.value() / FRAC_PI_4).powi(2) * kappa
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub score: f64,
    pub min_fidelity: f64,
    pub angles: MeasurementAngles,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreSweep {
    pub theta: Theta,
    pub kappa: f64,
    pub points: Vec<SweepPoint>,
}

impl ScoreSweep {
    pub fn step(&self) -> f64 {
        score_step(self.theta, self.kappa)
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.points
            .iter()
            .map(|p| (1.0 - p.min_fidelity) / (TSIRELSON - p.score))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    pub kappa: f64,
    pub search: AngleSearchConfig,
    /// Points that must follow the steepest chord, all with smaller slope.
    pub confirmations: usize,
    pub max_steps: usize,
    pub tolerances: Tolerances,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            search: AngleSearchConfig::default(),
            confirmations: 3,
            max_steps: 2000,
            tolerances: Tolerances::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        self.search.validate()?;
        if !(self.kappa > 0.0) || !self.kappa.is_finite() {
            return Err(Error::Input(format!(
                "kappa {} must be positive",
                self.kappa
            )));
        }
        if self.confirmations == 0 {
            return Err(Error::Input("confirmations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Index of the steepest chord if it is followed by at least `confirmations` points.
fn confirmed_peak(slopes: &[f64], confirmations: usize) -> Option<usize> {
    let (peak, _) =
        slopes.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |(i, m), (j, &s)| if s > m { (j, s) } else { (i, m) },
        );
    (slopes.len() > peak + confirmations).then_some(peak)
}

/// Sweeps scores downward from the local bound until the steepest chord is confirmed.
pub fn sweep_scores(theta: Theta, config: &SweepConfig) -> Result<ScoreSweep> {
    check_supported_theta(theta)?;
    let problem = AngleProblem::new(theta)?.with_tolerances(config.tolerances);
    sweep_with(&problem, config)
}

pub fn sweep_with(problem: &AngleProblem, config: &SweepConfig) -> Result<ScoreSweep> {
    let theta = problem.theta();
    check_supported_theta(theta)?;
    config.validate()?;
    let start = local_bound(theta);
    let step = score_step(theta, config.kappa);
    let mut points: Vec<SweepPoint> = Vec::new();
    let mut slopes: Vec<f64> = Vec::new();
    let mut previous: Option<AngleMinimum> = None;
    let mut reported_peak = None;
    for k in 0..config.max_steps {
        let beta = start - k as f64 * step;
        if beta < -TSIRELSON {
            break;
        }
        let m = problem.certified_min(beta, previous.as_ref(), &config.search)?;
        let s = slope(beta, m.fidelity)?;
        info!(
            "theta = {:.6}: step {k}, score {beta:.6}, min fidelity {:.9}, slope {s:.9}",
            theta.value(),
            m.fidelity
        );
        points.push(SweepPoint {
            score: beta,
            min_fidelity: m.fidelity,
            angles: m.angles,
        });
        slopes.push(s);
        previous = Some(m);

        let last = slopes.len() - 1;
        if last >= 1 && slopes[last] < slopes[last - 1] && reported_peak.is_none() {
            reported_peak = Some(last - 1);
        }
        if let Some(p) = reported_peak {
            if slopes[last] > slopes[p] {
                warn!(
                    "theta = {:.6}: slope rose again at score {beta:.6} after a decrease at {:.6}",
                    theta.value(),
                    points[p].score
                );
                reported_peak = None;
            }
        }
        if confirmed_peak(&slopes, config.confirmations).is_some() {
            return Ok(ScoreSweep {
                theta,
                kappa: config.kappa,
                points,
            });
        }
    }
    Err(Error::SweepIncomplete {
        theta: theta.value(),
        steps: points.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundCurve {
    pub theta: Theta,
    pub beta_local: f64,
    pub beta_trivial: f64,
    pub beta_star: f64,
    pub fidelity_star: f64,
    pub slope_star: f64,
}

impl BoundCurve {
    pub fn validate(&self) -> Result<()> {
        check_supported_theta(self.theta)?;
        let finite = [
            self.beta_local,
            self.beta_trivial,
            self.beta_star,
            self.fidelity_star,
            self.slope_star,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Table(format!(
                "non-finite value in curve at theta = {}",
                self.theta.value()
            )));
        }
        if self.beta_trivial < self.beta_local - 1e-9 || self.beta_trivial >= TSIRELSON {
            return Err(Error::Table(format!(
                "trivial score {} at theta = {} is outside [{}, 2√2)",
                self.beta_trivial,
                self.theta.value(),
                self.beta_local
            )));
        }
        Ok(())
    }

    /// The chord through `(2√2, 1)` and the inflection point.
    pub fn roof_line(&self, beta: f64) -> f64 {
        1.0 - self.slope_star * (TSIRELSON - beta)
    }
}

/// Intersects the steepest chord with `F = 1/2`.
pub fn trivial_score(sweep: &ScoreSweep) -> Result<BoundCurve> {
    check_supported_theta(sweep.theta)?;
    let slopes = sweep.slopes();
    let incomplete = || Error::SweepIncomplete {
        theta: sweep.theta.value(),
        steps: sweep.points.len(),
    };
    let peak = confirmed_peak(&slopes, 1).ok_or_else(incomplete)?;
    let star = sweep.points[peak];
    let alpha = slopes[peak];
    if !(alpha > 0.0) {
        return Err(incomplete());
    }
    let beta_local = local_bound(sweep.theta);
    let mut beta_trivial = (0.5 - star.min_fidelity) / alpha + star.score;
    if beta_trivial < beta_local {
        // the chord can only cross 1/2 below the local bound through optimizer noise
        warn!(
            "theta = {:.6}: trivial score {beta_trivial} below local bound {beta_local}",
            sweep.theta.value()
        );
        beta_trivial = beta_local;
    }
    let curve = BoundCurve {
        theta: sweep.theta,
        beta_local,
        beta_trivial,
        beta_star: star.score,
        fidelity_star: star.min_fidelity,
        slope_star: alpha,
    };
    curve.validate()?;
    Ok(curve)
}

/// `1/2` up to the trivial score, then linear up to `1` at `2√2`.
pub fn bound_at(curve: &BoundCurve, beta: f64) -> Result<f64> {
    if beta.is_nan() || beta > TSIRELSON + 1e-12 {
        return Err(Error::Domain(format!("score {beta} exceeds 2√2")));
    }
    if beta <= curve.beta_trivial {
        return Ok(0.5);
    }
    let f = 0.5 * (1.0 + (beta - curve.beta_trivial) / (TSIRELSON - curve.beta_trivial));
    Ok(f.min(1.0))
}

/// One stored `θ`: its curve and the sweep it came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    #[serde(flatten)]
    pub curve: BoundCurve,
    #[serde(default)]
    pub sweep: Vec<SweepPoint>,
}

impl TableEntry {
    pub fn new(curve: BoundCurve, sweep: &ScoreSweep) -> Self {
        Self {
            curve,
            sweep: sweep.points.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    schema_version: u32,
    entries: Vec<TableEntry>,
}

fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().expect("formatted float parses")
}

fn round_entry(e: &TableEntry) -> TableEntry {
    let c = e.curve;
    TableEntry {
        curve: BoundCurve {
            theta: Theta::new(round12(c.theta.value()).clamp(0.0, std::f64::consts::FRAC_PI_2))
                .expect("rounding keeps theta in range"),
            beta_local: round12(c.beta_local),
            beta_trivial: round12(c.beta_trivial),
            beta_star: round12(c.beta_star),
            fidelity_star: round12(c.fidelity_star),
            slope_star: round12(c.slope_star),
        },
        sweep: e
            .sweep
            .iter()
            .map(|p| SweepPoint {
                score: round12(p.score),
                min_fidelity: round12(p.min_fidelity),
                angles: MeasurementAngles {
                    a: round12(p.angles.a),
                    b: round12(p.angles.b),
                },
            })
            .collect(),
    }
}

/// Entries as they read back after a save: every number cut to 12 significant digits.
pub fn stored_form(entries: &[TableEntry]) -> Vec<TableEntry> {
    entries.iter().map(round_entry).collect()
}

/// Writes the table atomically, sorted by `θ`.
pub fn save_table(entries: &[TableEntry], path: &Path) -> Result<()> {
    let mut rounded = stored_form(entries);
    rounded.sort_by(|p, q| p.curve.theta.value().total_cmp(&q.curve.theta.value()));
    let file = TableFile {
        schema_version: SCHEMA_VERSION,
        entries: rounded,
    };
    let text = serde_json::to_string_pretty(&file)?;
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.write_all(b"\n")?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn load_table(path: &Path) -> Result<Vec<TableEntry>> {
    let text = fs::read_to_string(path)?;
    if text.trim().is_empty() {
        return Err(Error::Table(format!("{} is empty", path.display())));
    }
    let raw: serde_json::Value = serde_json::from_str(&text)?;
    let version = raw
        .get("schema_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Table("missing schema_version".into()))?;
    if version != u64::from(SCHEMA_VERSION) {
        return Err(Error::SchemaVersion {
            found: version as u32,
            expected: SCHEMA_VERSION,
        });
    }
    let file: TableFile = serde_json::from_value(raw)?;
    for e in &file.entries {
        e.curve.validate()?;
    }
    Ok(file.entries)
}

/// Finds the entry whose `θ` matches within `1e-9`.
pub fn find_curve(entries: &[TableEntry], theta: Theta) -> Option<&BoundCurve> {
    entries
        .iter()
        .map(|e| &e.curve)
        .find(|c| (c.theta.value() - theta.value()).abs() <= 1e-9)
}

/// Inserts or replaces the entry for its `θ`.
pub fn upsert(entries: &mut Vec<TableEntry>, entry: TableEntry) {
    let t = entry.curve.theta.value();
    entries.retain(|e| (e.curve.theta.value() - t).abs() > 1e-9);
    entries.push(entry);
    entries.sort_by(|p, q| p.curve.theta.value().total_cmp(&q.curve.theta.value()));
}

/// Full pipeline for one `θ`.
pub fn compute_entry(theta: Theta, config: &SweepConfig) -> Result<TableEntry> {
    let sweep = sweep_scores(theta, config)?;
    let curve = trivial_score(&sweep)?;
    Ok(TableEntry::new(curve, &sweep))
}
