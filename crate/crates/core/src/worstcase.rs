//! Exact worst-case limit load over bounded damage scenarios.
//!
//! For a damage level `alpha`, the worst case of a design is the minimum
//! limit load factor over every scenario damaging at most `alpha` members.
//! Because shrinking any area can only lower the limit load factor, the
//! minimum is attained with exactly `alpha` members damaged, so only those
//! scenarios are enumerated. A full-enumeration oracle without the reduction
//! is provided for validation.

use rayon::prelude::*;

use crate::limit::limit_load_factor;
use crate::model::{apply_scenario, DamageScenario, GroundStructure};

/// Two scenario load factors within this relative distance of the worst one
/// count as co-worst.
pub const TIE_RELATIVE_TOLERANCE: f64 = 1e-6;
/// Absolute fallback for ties around zero.
pub const TIE_ABSOLUTE_TOLERANCE: f64 = 1e-9;

/// One evaluated scenario and its limit load factor.
#[derive(Debug, Clone)]
pub struct ScenarioRecord {
    pub scenario: DamageScenario,
    pub lambda: f64,
}

/// Worst case over a deficiency level. `worst_lambda` is `-inf` when some
/// scenario cannot carry the dead load; `f_value` is its negation, the
/// quantity the optimizer minimizes.
#[derive(Debug, Clone)]
pub struct WorstCaseResult {
    pub worst_lambda: f64,
    pub f_value: f64,
    /// All evaluated scenarios tied with the worst one, in evaluation order.
    pub minimizers: Vec<DamageScenario>,
    /// Every evaluated scenario. Under early exit the table ends at the first
    /// scenario that cannot carry the dead load.
    pub table: Vec<ScenarioRecord>,
}

impl WorstCaseResult {
    /// Number of co-worst scenarios.
    pub fn multiplicity(&self) -> usize {
        self.minimizers.len()
    }
}

fn is_tie(lambda: f64, worst: f64) -> bool {
    if worst.is_infinite() {
        lambda == worst
    } else {
        (lambda - worst).abs() <= (TIE_RELATIVE_TOLERANCE * worst.abs()).max(TIE_ABSOLUTE_TOLERANCE)
    }
}

/// Exact worst-case evaluation at damage level `alpha` and damage degree
/// `gamma`, enumerating scenarios with exactly `alpha` damaged members in
/// lexicographic order. Exits early once a scenario reports `-inf`.
///
/// Panics if `alpha > member_count`, `gamma` lies outside `[0, 1)` or the
/// area vector length does not match.
pub fn worst_case(
    gs: &GroundStructure,
    areas: &[f64],
    alpha: usize,
    gamma: f64,
) -> WorstCaseResult {
    worst_case_counted(gs, areas, alpha, gamma).0
}

/// [`worst_case`] plus the number of limit analyses actually performed
/// (under early exit this can exceed the table length).
pub fn worst_case_counted(
    gs: &GroundStructure,
    areas: &[f64],
    alpha: usize,
    gamma: f64,
) -> (WorstCaseResult, usize) {
    let m = gs.member_count();
    assert!(alpha <= m, "damage level {alpha} exceeds {m} members");
    let scenarios: Vec<DamageScenario> = k_subsets(m, alpha)
        .into_iter()
        .map(|damaged| DamageScenario::new(damaged, gamma, m).expect("valid scenario"))
        .collect();
    let (table, solves) = evaluate_scenarios(gs, areas, scenarios, true);
    (assemble(table), solves)
}

/// Full enumeration over every scenario with at most `alpha` damaged members,
/// without the exactly-`alpha` reduction and without early exit. Intended for
/// validating [`worst_case`] on small instances.
pub fn worst_case_oracle(
    gs: &GroundStructure,
    areas: &[f64],
    alpha: usize,
    gamma: f64,
) -> WorstCaseResult {
    let m = gs.member_count();
    assert!(alpha <= m, "damage level {alpha} exceeds {m} members");
    let mut scenarios = Vec::new();
    for k in 0..=alpha {
        for damaged in k_subsets(m, k) {
            scenarios.push(DamageScenario::new(damaged, gamma, m).expect("valid scenario"));
        }
    }
    let (table, _) = evaluate_scenarios(gs, areas, scenarios, false);
    assemble(table)
}

/// Scenario evaluations run as a parallel map over fixed-size chunks so the
/// early exit stays deterministic: the table always ends at the
/// lexicographically first failing scenario.
fn evaluate_scenarios(
    gs: &GroundStructure,
    areas: &[f64],
    scenarios: Vec<DamageScenario>,
    early_exit: bool,
) -> (Vec<ScenarioRecord>, usize) {
    const CHUNK: usize = 64;
    let mut table = Vec::with_capacity(scenarios.len());
    let mut solves = 0usize;
    for chunk in scenarios.chunks(CHUNK) {
        let evaluated: Vec<ScenarioRecord> = chunk
            .par_iter()
            .map(|scenario| {
                let realized = apply_scenario(areas, scenario);
                let lambda = limit_load_factor(gs, &realized)
                    .expect("scenario evaluation on validated instance")
                    .lambda;
                ScenarioRecord {
                    scenario: scenario.clone(),
                    lambda,
                }
            })
            .collect();
        solves += evaluated.len();
        for record in evaluated {
            let failed = record.lambda == f64::NEG_INFINITY;
            table.push(record);
            if early_exit && failed {
                return (table, solves);
            }
        }
    }
    (table, solves)
}

fn assemble(table: Vec<ScenarioRecord>) -> WorstCaseResult {
    let worst_lambda = table
        .iter()
        .map(|r| r.lambda)
        .fold(f64::INFINITY, f64::min);
    let minimizers = table
        .iter()
        .filter(|r| is_tie(r.lambda, worst_lambda))
        .map(|r| r.scenario.clone())
        .collect();
    WorstCaseResult {
        worst_lambda,
        f_value: -worst_lambda,
        minimizers,
        table,
    }
}

/// Strong redundancy verdict: the largest damage level whose worst case still
/// meets the performance allowance, or a violation already at the nominal
/// (intact) scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrongRedundancy {
    Level(usize),
    NominalViolation,
}

/// Largest `alpha` such that the worst-case performance `-lambda` stays below
/// the allowance `h_allowance` for every level up to `alpha`, scanning
/// upward from zero.
///
/// The comparison carries a small relative slack so that an allowance set
/// exactly at a design's own nominal performance is not rejected by rounding.
pub fn strong_redundancy(
    gs: &GroundStructure,
    areas: &[f64],
    h_allowance: f64,
    gamma: f64,
) -> StrongRedundancy {
    let m = gs.member_count();
    let slack = 1e-9 * (1.0 + h_allowance.abs());
    for alpha in 0..=m {
        let f = worst_case(gs, areas, alpha, gamma).f_value;
        if f > h_allowance + slack {
            return if alpha == 0 {
                StrongRedundancy::NominalViolation
            } else {
                StrongRedundancy::Level(alpha - 1)
            };
        }
    }
    StrongRedundancy::Level(m)
}

/// CSV rendering of a scenario table: `damaged_member_ids,lambda,is_worst`,
/// damaged ids separated by `;`.
pub fn scenario_table_csv(result: &WorstCaseResult) -> String {
    use std::fmt::Write;
    let mut out = String::from("damaged_member_ids,lambda,is_worst\n");
    for record in &result.table {
        let ids = record
            .scenario
            .damaged()
            .iter()
            .map(|i| i.to_string())
            .collect::<Vec<_>>()
            .join(";");
        writeln!(
            out,
            "{ids},{},{}",
            record.lambda,
            is_tie(record.lambda, result.worst_lambda)
        )
        .unwrap();
    }
    out
}

/// Lexicographic `k`-subsets of `0..n`.
pub(crate) fn k_subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    if k == 0 {
        out.push(Vec::new());
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k - 1;
        while idx[i] == n - k + i {
            if i == 0 {
                return out;
            }
            i -= 1;
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
