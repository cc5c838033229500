//! Projected gradient search for colourings with negative defect.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{defect, t_value_and_gradient, DefectReport, Property};
use crate::error::{Error, Result};
use crate::harmonic::{FunctionDocument, GroupFunction};
use crate::linsys::LinearSystem;

/// Largest `p^n` the optimizer accepts.
pub const MAX_SEARCH_POINTS: usize = 1 << 20;

const BISECTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub property: Property,
    /// Pins the mean of every iterate. Forced to 1/2 for the geometric
    /// property and defaults to `alpha` for prevalence.
    #[serde(default)]
    pub mean: Option<f64>,
    pub p: u32,
    pub n: u32,
    pub restarts: usize,
    pub max_iters: usize,
    /// Initial step; halved on every rejected step down to `step_floor`.
    pub step: f64,
    pub step_floor: f64,
    pub seed: u64,
    /// Stop once the projected-gradient RMS norm drops below this.
    pub grad_tol: f64,
    /// Stop once the defect drops below this.
    pub violation_tol: f64,
}

impl SearchConfig {
    pub fn new(property: Property, p: u32, n: u32) -> Self {
        Self {
            property,
            mean: None,
            p,
            n,
            restarts: 16,
            max_iters: 400,
            step: 0.1,
            step_floor: 1e-12,
            seed: 0,
            grad_tol: 1e-8,
            violation_tol: -1e-6,
        }
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_mean(mut self, mean: f64) -> Self {
        self.mean = Some(mean);
        self
    }

    pub fn with_max_iters(mut self, iters: usize) -> Self {
        self.max_iters = iters;
        self
    }

    /// The mean constraint actually enforced.
    pub fn effective_mean(&self) -> Option<f64> {
        match self.property {
            Property::GeometricCommon => Some(0.5),
            Property::Prevalence { alpha } => Some(self.mean.unwrap_or(alpha)),
            _ => self.mean,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.restarts == 0 {
            return Err(Error::InvalidConfig("restarts must be at least 1".into()));
        }
        let size = (self.p as f64).powi(self.n as i32);
        if self.n == 0 || size > MAX_SEARCH_POINTS as f64 {
            return Err(Error::TooLarge {
                size,
                cap: MAX_SEARCH_POINTS as f64,
            });
        }
        if !(self.step > 0.0 && self.step_floor > 0.0) {
            return Err(Error::InvalidConfig("step sizes must be positive".into()));
        }
        if let Some(m) = self.effective_mean() {
            if !(0.0..=1.0).contains(&m) {
                return Err(Error::InfeasibleMean(m));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best: GroupFunction,
    pub best_defect: f64,
    pub iterations: usize,
    pub converged: bool,
    pub violation: bool,
    /// Restart that produced `best`.
    pub restart: usize,
    /// Fresh evaluation of `best`.
    pub report: DefectReport,
}

/// Serializable form of [`SearchResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchResultDocument {
    pub best: FunctionDocument,
    pub best_defect: f64,
    pub iterations: usize,
    pub converged: bool,
    pub violation: bool,
    pub restart: usize,
    pub report: DefectReport,
}

impl SearchResult {
    pub fn to_document(&self) -> SearchResultDocument {
        SearchResultDocument {
            best: self.best.to_document(),
            best_defect: self.best_defect,
            iterations: self.iterations,
            converged: self.converged,
            violation: self.violation,
            restart: self.restart,
            report: self.report.clone(),
        }
    }

    pub fn from_document(doc: SearchResultDocument) -> Result<Self> {
        Ok(Self {
            best: GroupFunction::from_document(doc.best)?,
            best_defect: doc.best_defect,
            iterations: doc.iterations,
            converged: doc.converged,
            violation: doc.violation,
            restart: doc.restart,
            report: doc.report,
        })
    }
}

/// Euclidean projection onto `[0,1]^N`, or onto `{f in [0,1]^N : mean f = alpha}`.
pub fn project_values(v: &[f64], alpha: Option<f64>) -> Result<Vec<f64>> {
    let Some(alpha) = alpha else {
        return Ok(v.iter().map(|x| x.clamp(0.0, 1.0)).collect());
    };
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InfeasibleMean(alpha));
    }
    let len = v.len() as f64;
    let mean_at = |mu: f64| v.iter().map(|x| (x - mu).clamp(0.0, 1.0)).sum::<f64>() / len;
    let (mut lo, mut hi) = v
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    // mean_at(lo - 1) = 1 >= alpha >= 0 = mean_at(hi)
    lo -= 1.0;
    for _ in 0..200 {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mean_at(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    Ok(v.iter().map(|x| (x - mu).clamp(0.0, 1.0)).collect())
}

pub fn project_box_mean(p: u32, n: u32, v: &[f64], alpha: Option<f64>) -> Result<GroupFunction> {
    GroupFunction::new(p, n, project_values(v, alpha)?)
}

/// Positive rescaling of the defect that keeps gradients of order one.
fn objective_scale(system: &LinearSystem, cfg: &SearchConfig) -> f64 {
    let t = system.vars() as i32;
    match cfg.property {
        Property::Common | Property::Alon { .. } => 2f64.powi(t - 1),
        Property::GeometricCommon => 2f64.powi(2 * t),
        Property::Sidorenko | Property::Prevalence { .. } => {
            let a = cfg.effective_mean().unwrap_or(0.5).max(0.05);
            a.powi(-t)
        }
    }
}

/// Scaled objective and its gradient in the `p^n d/df(x)` normalization.
/// For the Alon property the objective is `2^l` times the defect.
fn objective(
    system: &LinearSystem,
    property: Property,
    scale: f64,
    f: &GroupFunction,
) -> Result<(f64, Vec<f64>)> {
    let t = system.vars();
    let alpha = f.mean();
    let (tf, gf) = t_value_and_gradient(system, f)?;
    let needs = property.needs_complement();
    let (tc, gc) = if needs {
        let (v, g) = t_value_and_gradient(system, &f.complement())?;
        (v, g.into_values())
    } else {
        (0.0, Vec::new())
    };
    let gf = gf.into_values();
    let (value, grad): (f64, Vec<f64>) = match property {
        Property::Common => (
            tf + tc - 2f64.powi(1 - t as i32),
            gf.iter().zip(&gc).map(|(a, b)| a - b).collect(),
        ),
        Property::GeometricCommon => (
            tf * tc - 2f64.powi(-2 * t as i32),
            gf.iter().zip(&gc).map(|(a, b)| tc * a - tf * b).collect(),
        ),
        Property::Alon { l } => {
            let lf = l as f64;
            let (a, b) = (2.0 * alpha, 2.0 * (1.0 - alpha));
            let (pa, pb) = (a.powf(lf), b.powf(lf));
            let shift = if l == 0 {
                0.0
            } else {
                2.0 * lf * (a.powf(lf - 1.0) * tf - b.powf(lf - 1.0) * tc)
            };
            (
                pa * tf + pb * tc - 2f64.powi(1 - t as i32),
                gf.iter().zip(&gc).map(|(x, y)| pa * x - pb * y + shift).collect(),
            )
        }
        Property::Sidorenko => {
            let shift = t as f64 * alpha.powi(t as i32 - 1);
            (
                tf - alpha.powi(t as i32),
                gf.iter().map(|x| x - shift).collect(),
            )
        }
        Property::Prevalence { .. } => (tf, gf),
    };
    Ok((value * scale, grad.into_iter().map(|g| g * scale).collect()))
}

/// Converts the scaled objective back to the defect.
fn unscale(property: Property, scale: f64, value: f64) -> f64 {
    match property {
        Property::Alon { l } => value / scale * 2f64.powf(-(l as f64)),
        _ => value / scale,
    }
}

/// Starting point for restart `r`: constant plus noise, uniform noise, coset
/// indicators and character bumps in rotation.
fn initial_point(cfg: &SearchConfig, r: usize, rng: &mut ChaCha8Rng) -> Result<GroupFunction> {
    let (p, n) = (cfg.p, cfg.n);
    let base = cfg.effective_mean().unwrap_or(0.5);
    let f = match r % 4 {
        0 => GroupFunction::from_fn(p, n, |_| base + rng.gen_range(-0.05..0.05))?,
        1 => GroupFunction::from_fn(p, n, |_| rng.gen::<f64>())?,
        2 => {
            let coord = rng.gen_range(0..n as usize);
            let value = rng.gen_range(0..p);
            GroupFunction::coset_indicator(p, n, coord, value)?
        }
        _ => {
            let mut h: Vec<u32> = (0..n).map(|_| rng.gen_range(0..p)).collect();
            if h.iter().all(|&c| c == 0) {
                h[0] = 1 + rng.gen_range(0..p - 1);
            }
            let k = ((r / 4) % p as usize) as u32;
            let eps = rng.gen_range(0.25..0.5);
            GroupFunction::character_bump(p, n, &h, k, eps)?
        }
    };
    project_box_mean(p, n, f.values(), cfg.effective_mean())
}

struct RestartOutcome {
    f: GroupFunction,
    defect: f64,
    iterations: usize,
    converged: bool,
}

fn run_restart(system: &LinearSystem, cfg: &SearchConfig, r: usize) -> Result<RestartOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(r as u64);
    let mean = cfg.effective_mean();
    let scale = objective_scale(system, cfg);
    let mut f = initial_point(cfg, r, &mut rng)?;
    let (mut value, mut grad) = objective(system, cfg.property, scale, &f)?;
    let mut eta = cfg.step;
    let mut iterations = 0;
    let mut converged = false;
    let len = f.len() as f64;
    while iterations < cfg.max_iters {
        if unscale(cfg.property, scale, value) < cfg.violation_tol {
            break;
        }
        // projected-gradient norm at unit step
        let probe: Vec<f64> = f.values().iter().zip(&grad).map(|(x, g)| x - g).collect();
        let probe = project_values(&probe, mean)?;
        let pg = (probe
            .iter()
            .zip(f.values())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            / len)
            .sqrt();
        if pg < cfg.grad_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut accepted = false;
        while eta >= cfg.step_floor {
            let trial: Vec<f64> = f
                .values()
                .iter()
                .zip(&grad)
                .map(|(x, g)| x - eta * g)
                .collect();
            let trial = project_box_mean(cfg.p, cfg.n, &trial, mean)?;
            let (tv, tg) = objective(system, cfg.property, scale, &trial)?;
            if tv < value {
                f = trial;
                value = tv;
                grad = tg;
                accepted = true;
                eta = (eta * 2.0).min(cfg.step);
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            converged = true;
            break;
        }
    }
    Ok(RestartOutcome {
        f,
        defect: unscale(cfg.property, scale, value),
        iterations,
        converged,
    })
}

/// Minimizes the defect of `cfg.property` over colourings of `F_p^n`.
pub fn minimize_defect(system: &LinearSystem, cfg: &SearchConfig) -> Result<SearchResult> {
    cfg.validate()?;
    if cfg.p != system.p() {
        return Err(Error::DimensionMismatch(format!(
            "search over F_{} for a system over F_{}",
            cfg.p,
            system.p()
        )));
    }
    let rows = (cfg.p as f64).powi((cfg.n as usize * system.rows()) as i32);
    if rows > crate::counting::ENUMERATION_CAP {
        return Err(Error::TooLarge {
            size: rows,
            cap: crate::counting::ENUMERATION_CAP,
        });
    }
    let outcomes: Vec<RestartOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| run_restart(system, cfg, r))
        .collect::<Result<_>>()?;
    let iterations = outcomes.iter().map(|o| o.iterations).sum();
    let (restart, best) = outcomes
        .into_iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.defect.total_cmp(&b.defect).then(ia.cmp(ib)))
        .expect("at least one restart");
    let report = defect(system, &best.f, cfg.property)?;
    let best_defect = report.value;
    Ok(SearchResult {
        best: best.f,
        best_defect,
        iterations,
        converged: best.converged,
        violation: best_defect < cfg.violation_tol,
        restart,
        report,
    })
}

/// One row of an alpha scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub alpha: f64,
    pub best_defect: f64,
    pub violation: bool,
}

/// Interior grid `k/(r+1)`, `k = 1..=r`.
pub fn alpha_grid(resolution: usize) -> Result<Vec<f64>> {
    if resolution < 3 {
        return Err(Error::InvalidConfig("grid resolution must be at least 3".into()));
    }
    Ok((1..=resolution)
        .map(|k| k as f64 / (resolution + 1) as f64)
        .collect())
}

/// Runs the optimizer once per grid mean. The geometric property is only
/// defined at mean 1/2, so other grid points are skipped for it.
pub fn scan_alpha(system: &LinearSystem, base: &SearchConfig, grid: &[f64]) -> Result<Vec<ScanRow>> {
    let mut rows = Vec::with_capacity(grid.len());
    for &alpha in grid {
        if matches!(base.property, Property::GeometricCommon) && (alpha - 0.5).abs() > 1e-12 {
            continue;
        }
        let mut cfg = base.clone();
        cfg.mean = Some(alpha);
        if let Property::Prevalence { .. } = cfg.property {
            cfg.property = Property::Prevalence { alpha };
        }
        let result = minimize_defect(system, &cfg)?;
        rows.push(ScanRow {
            alpha,
            best_defect: result.best_defect,
            violation: result.violation,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        let v = vec![0.1, 0.5, 0.9];
        assert_eq!(project_values(&v, None).unwrap(), v);
        let twos = vec![2.0; 9];
        let out = project_values(&twos, Some(0.5)).unwrap();
        assert!(out.iter().all(|x| (x - 0.5).abs() < 1e-12));
        assert!(matches!(
            project_values(&v, Some(1.5)),
            Err(Error::InfeasibleMean(_))
        ));
    }

    #[test]
    fn projection_hits_mean() {
        let v: Vec<f64> = (0..25).map(|i| ((i * 37) % 11) as f64 / 3.0 - 1.0).collect();
        let out = project_values(&v, Some(1.0 / 3.0)).unwrap();
        let mean = out.iter().sum::<f64>() / out.len() as f64;
        assert!((mean - 1.0 / 3.0).abs() < 1e-10);
        assert!(out.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn config_validation() {
        let s = LinearSystem::preset("schur", 3).unwrap();
        let cfg = SearchConfig::new(Property::Common, 3, 1).with_restarts(0);
        assert!(matches!(minimize_defect(&s, &cfg), Err(Error::InvalidConfig(_))));
        let cfg = SearchConfig::new(Property::Common, 3, 13);
        assert!(matches!(minimize_defect(&s, &cfg), Err(Error::TooLarge { .. })));
        assert!(alpha_grid(2).is_err());
        assert_eq!(alpha_grid(3).unwrap(), vec![0.25, 0.5, 0.75]);
    }

    #[test]
    fn geometric_grid_is_single_row() {
        let s = LinearSystem::preset("a4", 3).unwrap();
        let cfg = SearchConfig::new(Property::GeometricCommon, 3, 1)
            .with_restarts(2)
            .with_max_iters(20);
        let rows = scan_alpha(&s, &cfg, &[0.25, 0.5, 0.75]).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].alpha, 0.5);
    }
}
