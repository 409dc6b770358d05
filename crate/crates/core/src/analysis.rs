//! Derived figures of merit, parameter sweeps and Nelder–Mead geometry
//! optimization.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{ConfigError, ResolvedRun, SceneConfig};
use crate::scene::Scene;
use crate::sources::ResolvedSource;
use crate::tracer::{run, Detectors, RunOptions, RunReport, TraceError, TraceLimits};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no power collected on the {0} side")]
    NothingCollected(&'static str),
    #[error("coated scene differs from the base scene in more than coatings")]
    GeometryDiffers,
    #[error("sweep needs at least one value")]
    EmptySweep,
    #[error("parameter `{0}` does not resolve: {1}")]
    BadParameter(String, String),
    #[error("optimizer needs 1 to 4 free parameters, got {0}")]
    ParameterCount(usize),
    #[error("bounds for `{name}` must be finite with lower < upper")]
    BadBounds { name: String },
    #[error("every simplex vertex is infeasible: {}", .0.join("; "))]
    Infeasible(Vec<String>),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// Back over front collected power. A dark front gives `Unbounded`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Ratio {
    Finite(f64),
    Unbounded,
}

impl Ratio {
    pub fn value(self) -> Option<f64> {
        match self {
            Ratio::Finite(r) => Some(r),
            Ratio::Unbounded => None,
        }
    }
}

impl std::fmt::Display for Ratio {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Ratio::Finite(r) => write!(f, "{r:.4}"),
            Ratio::Unbounded => write!(f, "unbounded"),
        }
    }
}

pub fn collection_ratio(report: &RunReport) -> Result<Ratio, AnalysisError> {
    let back = report.tally.back.collected_power;
    let front = report.tally.front.collected_power;
    if back <= 0.0 {
        return Err(AnalysisError::NothingCollected("back"));
    }
    if front <= 0.0 {
        return Ok(Ratio::Unbounded);
    }
    Ok(Ratio::Finite(back / front))
}

/// Improvement of the shot-noise-limited sensitivity for a collection gain.
pub fn shot_noise_gain(ratio: f64) -> f64 {
    ratio.sqrt()
}

/// Back-collected power with coatings over that without, on identical
/// geometry and random numbers.
pub fn coating_gain(
    base: &Scene,
    coated: &Scene,
    source: &ResolvedSource,
    detectors: &Detectors,
    limits: &TraceLimits,
    opts: RunOptions,
) -> Result<f64, AnalysisError> {
    if !base.same_geometry(coated) {
        return Err(AnalysisError::GeometryDiffers);
    }
    let b = run(base, source, detectors, limits, opts)?;
    let c = run(coated, source, detectors, limits, opts)?;
    if b.tally.back.collected_power <= 0.0 {
        return Err(AnalysisError::NothingCollected("back"));
    }
    Ok(c.tally.back.collected_power / b.tally.back.collected_power)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Dotted path into the scene file, or a bare assembly or lens field.
    pub parameter: String,
    pub values: Vec<f64>,
}

/// Figures of merit from one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub ratio: Option<f64>,
    pub back_collected: f64,
    pub front_collected: f64,
    pub back_exited: f64,
    pub front_exited: f64,
    pub capped: f64,
}

impl RunMetrics {
    pub fn from_report(r: &RunReport) -> Self {
        let t = &r.tally;
        Self {
            ratio: (t.front.collected_power > 0.0).then(|| t.back.collected_power / t.front.collected_power),
            back_collected: t.back.collected_power,
            front_collected: t.front.collected_power,
            back_exited: t.back.exited_power,
            front_exited: t.front.exited_power,
            capped: r.capped_power,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: Option<RunMetrics>,
    pub error: Option<String>,
}

/// One run per value with the base seed. Rows that fail to build or trace
/// record the error and the sweep continues.
pub fn sweep(base: &SceneConfig, spec: &SweepSpec) -> Result<Vec<SweepRow>, AnalysisError> {
    if spec.values.is_empty() {
        return Err(AnalysisError::EmptySweep);
    }
    check_parameter(base, &spec.parameter, spec.values[0])?;
    Ok(spec
        .values
        .iter()
        .map(|&value| match evaluate(base, &[(spec.parameter.as_str(), value)]) {
            Ok(report) => SweepRow { value, metrics: Some(RunMetrics::from_report(&report)), error: None },
            Err(e) => SweepRow { value, metrics: None, error: Some(e.to_string()) },
        })
        .collect())
}

fn check_parameter(base: &SceneConfig, name: &str, probe: f64) -> Result<(), AnalysisError> {
    match base.with_param(name, probe) {
        Err(e @ (ConfigError::Parse(_) | ConfigError::Override { .. })) => {
            Err(AnalysisError::BadParameter(name.to_string(), e.to_string()))
        }
        _ => Ok(()),
    }
}

/// Apply parameters to `base` and trace it.
pub fn evaluate(base: &SceneConfig, params: &[(&str, f64)]) -> Result<RunReport, AnalysisError> {
    let mut cfg = base.clone();
    for (name, value) in params {
        cfg = cfg.with_param(name, *value)?;
    }
    let ResolvedRun { scene, source, detectors, limits, options } = cfg.resolve()?;
    Ok(run(&scene, &source, &detectors, &limits, options)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    BackCollected,
    Ratio,
}

impl Objective {
    pub fn of(self, report: &RunReport) -> Result<f64, String> {
        match self {
            Objective::BackCollected => Ok(report.tally.back.collected_power),
            Objective::Ratio => match collection_ratio(report) {
                Ok(Ratio::Finite(r)) => Ok(r),
                Ok(Ratio::Unbounded) => Err("unbounded ratio".into()),
                Err(e) => Err(e.to_string()),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeParam {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeSpec {
    pub objective: Objective,
    pub params: Vec<FreeParam>,
    /// Maximum number of objective evaluations.
    pub budget: usize,
    /// Starting point; defaults to the centre of the bounds.
    pub start: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub params: Vec<f64>,
    pub objective: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumReport {
    pub objective: Objective,
    pub param_names: Vec<String>,
    pub best_params: Vec<f64>,
    pub best_objective: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    pub trace: Vec<Evaluation>,
}

/// Maximize the traced objective over the free parameters. Every
/// evaluation reuses the base seed, so the objective surface is fixed.
pub fn optimize(base: &SceneConfig, spec: &OptimizeSpec) -> Result<OptimumReport, AnalysisError> {
    for p in &spec.params {
        check_parameter(base, &p.name, 0.5 * (p.lower + p.upper))?;
    }
    optimize_with(spec, |x| {
        let params: Vec<(&str, f64)> = spec.params.iter().map(|p| p.name.as_str()).zip(x.iter().copied()).collect();
        let report = evaluate(base, &params).map_err(|e| e.to_string())?;
        spec.objective.of(&report)
    })
}

/// Maximize an arbitrary objective; `Err` marks an infeasible point.
pub fn optimize_with<F>(spec: &OptimizeSpec, mut objective: F) -> Result<OptimumReport, AnalysisError>
where
    F: FnMut(&[f64]) -> Result<f64, String>,
{
    let n = spec.params.len();
    if !(1..=4).contains(&n) {
        return Err(AnalysisError::ParameterCount(n));
    }
    for p in &spec.params {
        if !(p.lower.is_finite() && p.upper.is_finite() && p.lower < p.upper) {
            return Err(AnalysisError::BadBounds { name: p.name.clone() });
        }
    }
    let bounds: Vec<(f64, f64)> = spec.params.iter().map(|p| (p.lower, p.upper)).collect();
    let start = match &spec.start {
        Some(s) if s.len() == n => s.clone(),
        _ => bounds.iter().map(|(l, u)| 0.5 * (l + u)).collect(),
    };
    let mut trace = Vec::new();
    let result = nelder_mead(
        |x| {
            let r = objective(x);
            trace.push(Evaluation {
                params: x.to_vec(),
                objective: r.as_ref().ok().copied(),
                error: r.as_ref().err().cloned(),
            });
            r.ok()
        },
        &bounds,
        &start,
        spec.budget,
    );
    let Some((best_params, best_objective)) = result.best else {
        let mut errors: Vec<String> = trace.iter().filter_map(|e| e.error.clone()).collect();
        errors.sort();
        errors.dedup();
        return Err(AnalysisError::Infeasible(errors));
    };
    Ok(OptimumReport {
        objective: spec.objective,
        param_names: spec.params.iter().map(|p| p.name.clone()).collect(),
        best_params,
        best_objective,
        iterations: result.iterations,
        evaluations: trace.len(),
        converged: result.converged,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadResult {
    /// Best feasible point and its value, if any point was feasible.
    pub best: Option<(Vec<f64>, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

/// Bounded Nelder–Mead maximization. Points are clamped into the box;
/// `None` from `f` marks an infeasible point. Converges when every vertex
/// lies within 1e-3 of the bound span of the best vertex in each
/// coordinate.
pub fn nelder_mead<F>(mut f: F, bounds: &[(f64, f64)], start: &[f64], budget: usize) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> Option<f64>,
{
    const TOL: f64 = 1e-3;
    let n = bounds.len();
    let clamp = |x: &mut Vec<f64>| {
        for (v, (l, u)) in x.iter_mut().zip(bounds) {
            *v = v.clamp(*l, *u);
        }
    };
    let mut evals = 0usize;
    // minimize the negated objective; infeasible points score +inf
    let mut cost = |x: &[f64], evals: &mut usize| -> f64 {
        if *evals >= budget {
            return f64::INFINITY;
        }
        *evals += 1;
        f(x).map_or(f64::INFINITY, |v| -v)
    };

    let initial = |x0: &[f64], frac: f64, cost: &mut dyn FnMut(&[f64]) -> f64| {
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let c0 = cost(x0);
        simplex.push((x0.to_vec(), c0));
        for i in 0..n {
            let (l, u) = bounds[i];
            let step = frac * (u - l);
            let mut x = x0.to_vec();
            x[i] = if x[i] + step <= u { x[i] + step } else { x[i] - step };
            x[i] = x[i].clamp(l, u);
            let c = cost(&x);
            simplex.push((x, c));
        }
        simplex
    };

    let mut x0 = start.to_vec();
    clamp(&mut x0);
    let mut simplex = initial(&x0, 0.25, &mut |x| cost(x, &mut evals));
    let mut iterations = 0;
    let mut converged = false;
    let mut last_stop: Option<Vec<f64>> = None;
    if simplex.iter().all(|(_, c)| c.is_infinite()) {
        return NelderMeadResult { best: None, iterations, converged };
    }
    while evals < budget {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex.iter().skip(1).all(|(x, _)| {
            x.iter().zip(&simplex[0].0).zip(bounds).all(|((a, b), (l, u))| (a - b).abs() < TOL * (u - l))
        });
        if spread && simplex[0].1.is_finite() {
            // a collapsed simplex can stall off the optimum; restart and
            // accept only when the restart lands on the same point
            let best = simplex[0].0.clone();
            let same = last_stop.as_ref().is_some_and(|p: &Vec<f64>| {
                p.iter().zip(&best).zip(bounds).all(|((a, b), (l, u))| (a - b).abs() < TOL * (u - l))
            });
            if same {
                converged = true;
                break;
            }
            last_stop = Some(best.clone());
            let kept = simplex[0].clone();
            simplex = initial(&best, 0.05, &mut |x| cost(x, &mut evals));
            simplex[0] = kept;
            continue;
        }
        iterations += 1;
        let worst = simplex[n].clone();
        let centroid: Vec<f64> =
            (0..n).map(|j| simplex[..n].iter().map(|(x, _)| x[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            let mut p: Vec<f64> = centroid.iter().zip(&worst.0).map(|(c, w)| c + t * (c - w)).collect();
            clamp(&mut p);
            p
        };
        let xr = along(1.0);
        let cr = cost(&xr, &mut evals);
        if cr < simplex[0].1 {
            let xe = along(2.0);
            let ce = cost(&xe, &mut evals);
            simplex[n] = if ce < cr { (xe, ce) } else { (xr, cr) };
            continue;
        }
        if cr < simplex[n - 1].1 {
            simplex[n] = (xr, cr);
            continue;
        }
        let (xc, cc) = if cr < worst.1 {
            let x = along(0.5);
            let c = cost(&x, &mut evals);
            (x, c)
        } else {
            let x = along(-0.5);
            let c = cost(&x, &mut evals);
            (x, c)
        };
        if cc < worst.1.min(cr) {
            simplex[n] = (xc, cc);
            continue;
        }
        // shrink toward the best vertex
        let best = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            let mut x: Vec<f64> = best.iter().zip(&v.0).map(|(b, p)| b + 0.5 * (p - b)).collect();
            clamp(&mut x);
            let c = cost(&x, &mut evals);
            *v = (x, c);
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    let best = simplex[0].1.is_finite().then(|| (simplex[0].0.clone(), -simplex[0].1));
    NelderMeadResult { best, iterations, converged }
}
