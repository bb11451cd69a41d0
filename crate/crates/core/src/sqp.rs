//! Derivative-free SQP driver.
//!
//! Minimizes the worst-case performance `f(x) = -worst lambda` over the
//! volume-bounded design box. Each outer pass samples the objective on a
//! stencil around the incumbent, forms the least-squares stencil gradient,
//! solves a convex subproblem for the search direction, backtracks along it
//! under the Armijo test, and maintains a damped quasi-Newton model of the
//! Lagrangian curvature. The stencil radius shrinks whenever the stencil
//! stops seeing descent or the line search fails, and the run ends once the
//! radius falls below its floor or the direction norm vanishes.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use thiserror::Error;

use crate::dfo::{kernel_basis, sample_set, stencil_gradient, DfoError, StencilSample};
use crate::model::{Design, GroundStructure};
use crate::qp::{solve_qp, QpError};
use crate::worstcase::{worst_case, worst_case_counted, WorstCaseResult};

/// Denominator of the rank-one correction term in the damped quasi-Newton
/// update: `sᵀs` as printed in the update formula used here, or the
/// conventional `sᵀr` which provably preserves positive definiteness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BfgsDenominator {
    #[default]
    Paper,
    Conventional,
}

/// When the stencil (samples, radius-control test and gradient) is rebuilt.
///
/// `EveryIteration` follows the loop as printed: a fresh sample set at every
/// incumbent. `PerRadiusLevel` rebuilds only after a radius change and keeps
/// the gradient across accepted steps within a level; the iteration effort of
/// the reference runs is only reproducible this way, at a small cost in final
/// accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StencilRefresh {
    #[default]
    EveryIteration,
    PerRadiusLevel,
}

/// Driver parameters. The defaults reproduce the reference runs: stencil
/// radius 100 mm² shrinking by 0.75 down to 1e-4 mm², direction tolerance
/// 5e-4 mm², Armijo slope fraction 0.01 with backtracking factor 0.8 and at
/// most 50 backtracks, repair floor 1e-6 mm² and an identity initial model.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct SqpConfig {
    pub initial_radius: f64,
    pub min_radius: f64,
    pub direction_tolerance: f64,
    pub radius_shrink: f64,
    pub armijo_slope: f64,
    pub backtrack: f64,
    pub max_backtracks: u32,
    pub repair_epsilon: f64,
    pub initial_hessian_scale: f64,
    pub bfgs_denominator: BfgsDenominator,
    pub stencil_refresh: StencilRefresh,
}

impl Default for SqpConfig {
    fn default() -> Self {
        SqpConfig {
            initial_radius: 100.0,
            min_radius: 1e-4,
            direction_tolerance: 5e-4,
            radius_shrink: 0.75,
            armijo_slope: 0.01,
            backtrack: 0.8,
            max_backtracks: 50,
            repair_epsilon: 1e-6,
            initial_hessian_scale: 1.0,
            bfgs_denominator: BfgsDenominator::default(),
            stencil_refresh: StencilRefresh::default(),
        }
    }
}

impl SqpConfig {
    fn validate(&self) -> Result<(), SqpError> {
        let ok = self.min_radius > 0.0
            && self.initial_radius > self.min_radius
            && self.direction_tolerance > 0.0
            && (0.0..1.0).contains(&self.radius_shrink)
            && self.radius_shrink > 0.0
            && (0.0..1.0).contains(&self.armijo_slope)
            && self.armijo_slope > 0.0
            && (0.0..1.0).contains(&self.backtrack)
            && self.backtrack > 0.0
            && self.repair_epsilon > 0.0
            && self.initial_hessian_scale > 0.0;
        if ok {
            Ok(())
        } else {
            Err(SqpError::Config("parameters outside their ranges".into()))
        }
    }
}

#[derive(Debug, Error)]
pub enum SqpError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("starting point is infeasible: {0}")]
    InfeasibleStart(String),
    #[error("objective is unbounded at the starting point: the structure is unstable at this damage level")]
    UnstableAtStart,
    #[error("subproblem failed: {0}")]
    Qp(#[from] QpError),
    #[error("stencil failed: {0}")]
    Dfo(#[from] DfoError),
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    RadiusBelowMin,
    DirectionNormBelowEps,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Termination::RadiusBelowMin => write!(f, "radius_below_min"),
            Termination::DirectionNormBelowEps => write!(f, "direction_norm_below_eps"),
        }
    }
}

/// One row of the run trace. A row is appended for every outer pass; rows
/// hit by a stencil or line-search failure carry no step (and no direction
/// norm in the stencil case). `lp_solves` is cumulative.
#[derive(Debug, Clone)]
pub struct IterationRecord {
    pub k: usize,
    pub radius: f64,
    pub f_value: f64,
    pub direction_norm: Option<f64>,
    pub step: Option<f64>,
    pub stencil_failure: bool,
    pub line_search_failure: bool,
    pub lp_solves: u64,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RunCounters {
    pub qp_solves: u64,
    pub objective_evaluations: u64,
    pub lp_solves: u64,
}

/// Result of [`run`]: the final design with its full worst-case evaluation
/// and the iteration trace.
#[derive(Debug, Clone)]
pub struct SqpOutcome {
    pub design: Design,
    pub worst: WorstCaseResult,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
    pub counters: RunCounters,
    pub final_radius: f64,
}

/// Objective consumed by the driver. Implementations must be thread-safe;
/// sample batches are evaluated as a parallel map.
pub trait Objective: Sync {
    /// Objective value; `+inf` encodes an unstable realization.
    fn value(&self, areas: &[f64]) -> f64;
    /// Distinct evaluations performed so far (cache hits excluded).
    fn evaluations(&self) -> u64;
    /// Linear programs solved so far.
    fn lp_solves(&self) -> u64;
}

/// Finite stand-in for the objective on designs with an unstable worst-case
/// realization. Scenario feasibility is lost discontinuously (capacity drops
/// below the dead load), so the exact objective jumps to `+inf` there; the
/// driver instead sees this large finite wall, which keeps such boundaries
/// visible to the stencil gradient and steers iterates away from them. Far
/// larger than any attainable `|lambda|` on realistic instances, yet small
/// enough that penalty-bearing difference rows do not wreck the conditioning
/// of the curvature model.
pub const UNSTABLE_PENALTY: f64 = 1e3;


/// Worst-case objective with a per-design value cache, so line-search probes
/// and stencil centers revisited at a smaller radius never pay twice.
pub struct WorstCaseObjective<'a> {
    gs: &'a GroundStructure,
    alpha: usize,
    gamma: f64,
    cache: Mutex<HashMap<Vec<u64>, f64>>,
    evals: AtomicU64,
    lps: AtomicU64,
}

impl<'a> WorstCaseObjective<'a> {
    pub fn new(gs: &'a GroundStructure, alpha: usize, gamma: f64) -> Self {
        WorstCaseObjective {
            gs,
            alpha,
            gamma,
            cache: Mutex::new(HashMap::new()),
            evals: AtomicU64::new(0),
            lps: AtomicU64::new(0),
        }
    }
}

impl Objective for WorstCaseObjective<'_> {
    fn value(&self, areas: &[f64]) -> f64 {
        let key: Vec<u64> = areas.iter().map(|a| a.to_bits()).collect();
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return *v;
        }
        let (result, solves) = worst_case_counted(self.gs, areas, self.alpha, self.gamma);
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.lps.fetch_add(solves as u64, Ordering::Relaxed);
        let value = if result.f_value.is_finite() {
            result.f_value
        } else {
            UNSTABLE_PENALTY
        };
        self.cache.lock().unwrap().insert(key, value);
        value
    }

    fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }

    fn lp_solves(&self) -> u64 {
        self.lps.load(Ordering::Relaxed)
    }
}

/// Accepted backtracking step.
#[derive(Debug, Clone)]
pub struct ArmijoStep {
    pub step: f64,
    pub tau: u32,
    pub value: f64,
    pub point: Vec<f64>,
}

/// Backtracking line search: returns the first `tau` in `0..=tau_max` whose
/// step `beta^tau` satisfies `f(x + beta^tau d) <= f(x) + eta beta^tau gᵀd`,
/// or `None` when every candidate fails.
pub fn armijo_search(
    f: impl Fn(&[f64]) -> f64,
    x: &[f64],
    direction: &[f64],
    stencil_grad: &[f64],
    eta: f64,
    beta: f64,
    tau_max: u32,
) -> Option<ArmijoStep> {
    let fx = f(x);
    let slope: f64 = stencil_grad
        .iter()
        .zip(direction)
        .map(|(g, d)| g * d)
        .sum();
    for tau in 0..=tau_max {
        let step = beta.powi(tau as i32);
        let point: Vec<f64> = x
            .iter()
            .zip(direction)
            .map(|(xi, di)| xi + step * di)
            .collect();
        let value = f(&point);
        if value <= fx + eta * step * slope {
            return Some(ArmijoStep {
                step,
                tau,
                value,
                point,
            });
        }
    }
    None
}

/// Damped quasi-Newton update of the Lagrangian curvature model.
#[derive(Debug, Clone)]
pub struct BfgsUpdate {
    pub matrix: DMatrix<f64>,
    pub theta: f64,
    /// Set when the update was skipped because `sᵀBs` vanished.
    pub skipped: bool,
}

/// Applies the damped update: the correction pair is interpolated toward
/// `B s` whenever the raw curvature `yᵀs` falls under `0.2 sᵀBs`, guarding
/// the model against indefiniteness.
pub fn damped_bfgs(
    b: &DMatrix<f64>,
    s: &DVector<f64>,
    y: &DVector<f64>,
    mode: BfgsDenominator,
) -> BfgsUpdate {
    let bs = b * s;
    let sbs = s.dot(&bs);
    if !(sbs > 1e-14) {
        return BfgsUpdate {
            matrix: b.clone(),
            theta: 1.0,
            skipped: true,
        };
    }
    let ys = y.dot(s);
    let theta = if ys >= 0.2 * sbs {
        1.0
    } else {
        0.8 * sbs / (sbs - ys)
    };
    let r = y * theta + &bs * (1.0 - theta);
    let denom = match mode {
        BfgsDenominator::Paper => s.dot(s),
        BfgsDenominator::Conventional => s.dot(&r),
    };
    if !(denom > 1e-14) {
        return BfgsUpdate {
            matrix: b.clone(),
            theta,
            skipped: true,
        };
    }
    let mut next = b - (&bs * bs.transpose()) / sbs + (&r * r.transpose()) / denom;
    // Symmetrize to stop rounding drift from accumulating.
    for i in 0..next.nrows() {
        for j in 0..i {
            let v = 0.5 * (next[(i, j)] + next[(j, i)]);
            next[(i, j)] = v;
            next[(j, i)] = v;
        }
    }
    // Reject updates that leave the model numerically indefinite (possible in
    // `Paper` mode, and in either mode when a difference pair straddles a
    // stability wall); the previous model is kept instead.
    if !crate::qp::is_numerically_pd(&next) {
        return BfgsUpdate {
            matrix: b.clone(),
            theta,
            skipped: true,
        };
    }
    BfgsUpdate {
        matrix: next,
        theta,
        skipped: false,
    }
}

/// Raw outcome of [`run_with_objective`], before the worst-case report is
/// attached.
#[derive(Debug, Clone)]
pub struct RawRun {
    pub areas: Vec<f64>,
    pub f_value: f64,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
    pub counters: RunCounters,
    pub final_radius: f64,
}

/// Optimizes the worst-case limit load factor of `gs` at damage level
/// `alpha` and damage degree `gamma`, starting from `x0`.
pub fn run(
    gs: &GroundStructure,
    alpha: usize,
    gamma: f64,
    x0: &Design,
    cfg: &SqpConfig,
) -> Result<SqpOutcome, SqpError> {
    let objective = WorstCaseObjective::new(gs, alpha, gamma);
    let costs = gs.member_lengths();
    let raw = run_with_objective(&objective, &costs, x0.volume_budget, &x0.areas, cfg)?;
    let worst = worst_case(gs, &raw.areas, alpha, gamma);
    Ok(SqpOutcome {
        design: Design::new(raw.areas, x0.volume_budget),
        worst,
        trace: raw.trace,
        termination: raw.termination,
        counters: raw.counters,
        final_radius: raw.final_radius,
    })
}

/// Generic driver over any [`Objective`]; `costs` are the member lengths and
/// `budget` the volume bound.
pub fn run_with_objective<O: Objective>(
    objective: &O,
    costs: &[f64],
    budget: f64,
    x0: &[f64],
    cfg: &SqpConfig,
) -> Result<RawRun, SqpError> {
    cfg.validate()?;
    let m = x0.len();
    if costs.len() != m {
        return Err(SqpError::Config(format!(
            "{} costs for {} design variables",
            costs.len(),
            m
        )));
    }
    if x0.iter().any(|&a| a < -1e-12) {
        return Err(SqpError::InfeasibleStart("negative area".into()));
    }
    let volume0: f64 = costs.iter().zip(x0).map(|(c, x)| c * x).sum();
    if volume0 > budget * (1.0 + 1e-9) {
        return Err(SqpError::InfeasibleStart(format!(
            "volume {volume0} exceeds budget {budget}"
        )));
    }

    let basis = kernel_basis(costs)?;
    let c_vec = DVector::from_column_slice(costs);
    let b0 = DMatrix::identity(m, m) * cfg.initial_hessian_scale;

    let mut x = x0.to_vec();
    let mut f_x = objective.value(&x);
    if !f_x.is_finite() || f_x >= UNSTABLE_PENALTY {
        return Err(SqpError::UnstableAtStart);
    }

    let mut b = b0.clone();
    let mut radius = cfg.initial_radius;
    let mut k = 0usize;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut qp_solves = 0u64;
    // Multiplier estimates attached to the incumbent (zero before any move)
    // and the half-finished curvature pair waiting for the next gradient.
    let mut incumbent_mult: (f64, DVector<f64>) = (0.0, DVector::zeros(m));
    let mut pending: Option<(DVector<f64>, DVector<f64>)> = None;

    // Gradient of the current stencil; rebuilt according to the refresh
    // policy. Starts stale so the first pass samples immediately.
    let mut g: DVector<f64> = DVector::zeros(m);
    let mut stencil_stale = true;

    let termination = loop {
        if radius < cfg.min_radius {
            break Termination::RadiusBelowMin;
        }

        let plane_volume: f64 = costs.iter().zip(&x).map(|(c, xi)| c * xi).sum();
        if stencil_stale {
            let points =
                sample_set(&x, radius, &basis, costs, plane_volume, cfg.repair_epsilon)?;
            let values: Vec<f64> = points
                .par_iter()
                .map(|p| objective.value(&p.areas))
                .collect();

            // Samples beyond a stability wall report the flat penalty value;
            // for the difference system that cliff is re-leveled to a
            // repulsive slope on the scale of the finite samples, so the
            // gradient steers away from walls without wrecking the curvature
            // model's conditioning.
            let wall = |v: f64| !v.is_finite() || v >= UNSTABLE_PENALTY;
            let finite_dev = values
                .iter()
                .filter(|v| !wall(**v))
                .map(|v| (v - f_x).abs())
                .fold(0.0f64, f64::max);
            let surrogate = f_x + finite_dev.max(1e-12 * (1.0 + f_x.abs()));
            let gradient_values: Vec<f64> = values
                .iter()
                .map(|&v| if wall(v) { surrogate } else { v })
                .collect();
            let min_sampled = values.iter().fold(f64::INFINITY, |a, &v| a.min(v));
            let gradient = stencil_gradient(&StencilSample {
                center: x.clone(),
                center_value: f_x,
                points,
                values: gradient_values,
                radius,
            });
            g = DVector::from_column_slice(&gradient.gradient);

            if let Some((s, lagr_old)) = pending.take() {
                // The curvature pair from the last accepted step completes
                // with this gradient and the multipliers adopted at arrival.
                let lagr_new = &g + &c_vec * incumbent_mult.0 - &incumbent_mult.1;
                let y = lagr_new - lagr_old;
                b = damped_bfgs(&b, &s, &y, cfg.bfgs_denominator).matrix;
            }

            // Samples on unstable realizations carry the wall value; when no
            // usable difference remains, or no sample improves on the
            // center, shrink the radius.
            let stencil_failed = min_sampled >= f_x
                || gradient.degenerate
                || !g.iter().all(|v| v.is_finite());
            if stencil_failed {
                trace.push(IterationRecord {
                    k,
                    radius,
                    f_value: f_x,
                    direction_norm: None,
                    step: None,
                    stencil_failure: true,
                    line_search_failure: false,
                    lp_solves: objective.lp_solves(),
                });
                radius *= cfg.radius_shrink;
                continue;
            }
            stencil_stale = false;
        }

        let rhs = budget - plane_volume;
        let lb: Vec<f64> = x.iter().map(|xi| -xi).collect();
        let qp = solve_qp(&b, g.as_slice(), costs, rhs, &lb)?;
        qp_solves += 1;
        let d = DVector::from_column_slice(&qp.direction);
        let d_norm = d.norm();
        if d_norm < cfg.direction_tolerance {
            trace.push(IterationRecord {
                k,
                radius,
                f_value: f_x,
                direction_norm: Some(d_norm),
                step: None,
                stencil_failure: false,
                line_search_failure: false,
                lp_solves: objective.lp_solves(),
            });
            break Termination::DirectionNormBelowEps;
        }

        let search = armijo_search(
            |p| objective.value(p),
            &x,
            &qp.direction,
            g.as_slice(),
            cfg.armijo_slope,
            cfg.backtrack,
            cfg.max_backtracks,
        );
        match search {
            None => {
                trace.push(IterationRecord {
                    k,
                    radius,
                    f_value: f_x,
                    direction_norm: Some(d_norm),
                    step: None,
                    stencil_failure: false,
                    line_search_failure: true,
                    lp_solves: objective.lp_solves(),
                });
                // Discard the curvature model along with the radius; the
                // failed step contributes no update pair.
                b = b0.clone();
                radius *= cfg.radius_shrink;
                stencil_stale = true;
                continue;
            }
            Some(accepted) => {
                trace.push(IterationRecord {
                    k,
                    radius,
                    f_value: f_x,
                    direction_norm: Some(d_norm),
                    step: Some(accepted.step),
                    stencil_failure: false,
                    line_search_failure: false,
                    lp_solves: objective.lp_solves(),
                });
                let s = DVector::from_column_slice(&accepted.point)
                    - DVector::from_column_slice(&x);
                let lagr_old = &g + &c_vec * incumbent_mult.0 - &incumbent_mult.1;
                let new_mult = (
                    qp.volume_multiplier,
                    DVector::from_column_slice(&qp.bound_multipliers),
                );
                match cfg.stencil_refresh {
                    StencilRefresh::EveryIteration => {
                        // Defer the update until the fresh gradient exists.
                        pending = Some((s, lagr_old));
                        stencil_stale = true;
                    }
                    StencilRefresh::PerRadiusLevel => {
                        // The gradient is kept for the rest of the level, so
                        // the pair completes now; the gradient terms cancel
                        // and only the multiplier shift carries curvature.
                        let lagr_new = &g + &c_vec * new_mult.0 - &new_mult.1;
                        let y = lagr_new - lagr_old;
                        b = damped_bfgs(&b, &s, &y, cfg.bfgs_denominator).matrix;
                    }
                }
                incumbent_mult = new_mult;
                x = accepted.point;
                f_x = accepted.value;
                k += 1;
            }
        }
    };

    Ok(RawRun {
        areas: x,
        f_value: f_x,
        trace,
        termination,
        counters: RunCounters {
            qp_solves,
            objective_evaluations: objective.evaluations(),
            lp_solves: objective.lp_solves(),
        },
        final_radius: radius,
    })
}
