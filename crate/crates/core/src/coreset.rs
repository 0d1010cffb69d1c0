//! Randomized composable coreset simulation: partition the edges among `k`
//! players, let each send a summary of its part, and measure the maximum
//! matching of the union against the optimum.

use std::ops::Range;
use std::sync::Arc;
use std::time::Instant;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{
    derive_seed, gen_pathological, gen_perfect, gen_random_bipartite, union_graphs, BipartiteGraph, Edge,
    PathologicalLayout,
};
use crate::matching::maximum_matching;
use crate::rational::{fmt_ratio, to_decimal, Rational};
use crate::skeleton::{matching_skeleton, skeleton_avoiding, AvoidOutcome};

/// Rectangle `p × q` of vertex-index ranges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EdgeGroup {
    pub p: Range<usize>,
    pub q: Range<usize>,
}

impl EdgeGroup {
    pub fn contains(&self, e: Edge) -> bool {
        self.p.contains(&e.p) && self.q.contains(&e.q)
    }
}

/// What each player sends to the coordinator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Policy {
    /// The matching skeleton of its part.
    Canonical,
    /// A matching skeleton avoiding the group's edges when one exists,
    /// otherwise the canonical skeleton (counted as a refusal).
    Avoid(EdgeGroup),
    /// A maximum matching of its part.
    Baseline,
}

impl Policy {
    pub fn id(&self) -> &'static str {
        match self {
            Policy::Canonical => "canonical",
            Policy::Avoid(_) => "avoid",
            Policy::Baseline => "baseline",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub k: usize,
    pub policy: String,
    pub mm_g: usize,
    pub mm_union: usize,
    #[serde(serialize_with = "ser_ratio")]
    pub ratio: Rational,
    /// Edges sent by each player (communication words).
    pub per_player_edges: Vec<usize>,
    /// Largest maximum matching among the players' own parts.
    pub max_player_mm: usize,
    pub refusals: usize,
}

impl TrialReport {
    pub fn max_player_edges(&self) -> usize {
        self.per_player_edges.iter().copied().max().unwrap_or(0)
    }
}

fn ser_ratio<S: serde::Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&fmt_ratio(r))
}

/// Where an experiment's graph comes from.
#[derive(Debug, Clone)]
pub enum GraphSource {
    Perfect { size: usize },
    Random { p_count: usize, q_count: usize, prob: f64, seed: u64 },
    Pathological { r: usize, k: usize },
    Given(Arc<BipartiteGraph>),
}

impl GraphSource {
    pub fn build(&self) -> Result<BipartiteGraph> {
        match self {
            GraphSource::Perfect { size } => Ok(gen_perfect(*size)),
            GraphSource::Random { p_count, q_count, prob, seed } => {
                gen_random_bipartite(*p_count, *q_count, *prob, *seed)
            }
            GraphSource::Pathological { r, k } => gen_pathological(*r, *k),
            GraphSource::Given(g) => Ok(g.as_ref().clone()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub source: GraphSource,
    pub k: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub policy: Policy,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathologicalSummary {
    pub r: usize,
    /// `2r + 4r/k`, the size of the cover `Q_1 ∪ P_3`.
    pub bound: usize,
    /// Per trial, whether `mm_union <= bound`.
    pub within_bound: Vec<bool>,
    #[serde(serialize_with = "ser_ratio")]
    pub avoidance_success: Rational,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub trials: Vec<TrialReport>,
    #[serde(serialize_with = "ser_ratio")]
    pub mean_ratio: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub min_ratio: Rational,
    #[serde(serialize_with = "ser_ratio")]
    pub max_ratio: Rational,
    pub wall_time_secs: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pathological: Option<PathologicalSummary>,
}

impl ExperimentReport {
    fn from_trials(trials: Vec<TrialReport>, wall_time_secs: f64) -> Self {
        let count = Rational::from_integer(trials.len().max(1) as i64);
        let sum: Rational = trials.iter().map(|t| t.ratio).sum();
        let min_ratio = trials.iter().map(|t| t.ratio).min().unwrap_or_else(Rational::zero);
        let max_ratio = trials.iter().map(|t| t.ratio).max().unwrap_or_else(Rational::zero);
        ExperimentReport { trials, mean_ratio: sum / count, min_ratio, max_ratio, wall_time_secs, pathological: None }
    }

    pub const CSV_HEADER: &'static str = "trial,seed,k,mm_g,mm_union,ratio,refusals,max_player_edges";

    /// One row per trial; ratios at six decimal places.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for t in &self.trials {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                t.trial,
                t.seed,
                t.k,
                t.mm_g,
                t.mm_union,
                to_decimal(&t.ratio, 6),
                t.refusals,
                t.max_player_edges()
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serialises");
        for key in ["mean_ratio", "min_ratio", "max_ratio"] {
            let r = match key {
                "mean_ratio" => self.mean_ratio,
                "min_ratio" => self.min_ratio,
                _ => self.max_ratio,
            };
            v[format!("{key}_decimal")] = to_decimal(&r, 6).into();
        }
        serde_json::to_string_pretty(&v).expect("report serialises")
    }

    pub fn total_refusals(&self) -> usize {
        self.trials.iter().map(|t| t.refusals).sum()
    }
}

struct PlayerOutcome {
    message: Vec<Edge>,
    part_mm: usize,
    refused: bool,
}

fn play(part: &BipartiteGraph, policy: &Policy) -> Result<PlayerOutcome> {
    let part_mm = maximum_matching(part).len();
    let (message, refused) = match policy {
        Policy::Baseline => (maximum_matching(part).pairs().to_vec(), false),
        Policy::Canonical => (matching_skeleton(part)?.support(), false),
        Policy::Avoid(group) => match skeleton_avoiding(part, |e| group.contains(e))? {
            AvoidOutcome::Avoided(h) => (h.support(), false),
            AvoidOutcome::Refused(_) => (matching_skeleton(part)?.support(), true),
        },
    };
    Ok(PlayerOutcome { message, part_mm, refused })
}

fn trial_with(g: &BipartiteGraph, mm_g: usize, trial: usize, k: usize, seed: u64, policy: &Policy) -> Result<TrialReport> {
    let partition = g.random_k_partition(k, seed)?;
    let outcomes = partition.parts.par_iter().map(|part| play(part, policy)).collect::<Result<Vec<_>>>()?;
    let messages = outcomes
        .iter()
        .map(|o| BipartiteGraph::new(g.p_count(), g.q_count(), o.message.iter().copied()))
        .collect::<Result<Vec<_>>>()?;
    let union = union_graphs(&messages)?;
    let mm_union = maximum_matching(&union).len();
    let ratio = if mm_g == 0 { Rational::one() } else { Rational::new(mm_union as i64, mm_g as i64) };
    Ok(TrialReport {
        trial,
        seed,
        k,
        policy: policy.id().to_string(),
        mm_g,
        mm_union,
        ratio,
        per_player_edges: outcomes.iter().map(|o| o.message.len()).collect(),
        max_player_mm: outcomes.iter().map(|o| o.part_mm).max().unwrap_or(0),
        refusals: outcomes.iter().filter(|o| o.refused).count(),
    })
}

/// One coreset round on `g` with `k` players; `ratio = mm(G̃) / mm(G)`,
/// reported as 1 when `G` has no edges.
pub fn run_trial(g: &BipartiteGraph, k: usize, seed: u64, policy: &Policy) -> Result<TrialReport> {
    let mm_g = maximum_matching(g).len();
    trial_with(g, mm_g, 0, k, seed, policy)
}

fn run_on(g: &BipartiteGraph, config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.repetitions == 0 {
        return Err(Error::Inconsistent("repetitions must be at least 1".into()));
    }
    if config.k == 0 {
        return Err(Error::ZeroParts);
    }
    let start = Instant::now();
    let mm_g = maximum_matching(g).len();
    let trials = (0..config.repetitions)
        .into_par_iter()
        .map(|t| trial_with(g, mm_g, t, config.k, derive_seed(config.seed, t as u64), &config.policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport::from_trials(trials, start.elapsed().as_secs_f64()))
}

/// Independent trials with per-trial seeds derived from the master seed.
/// Trials are listed by index whatever order they ran in.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_on(&config.source.build()?, config)
}

/// Coreset rounds on the pathological graph where every player avoids
/// `P_2 × Q_2` whenever some skeleton allows it.
pub fn pathological_experiment(r: usize, k: usize, repetitions: usize, seed: u64) -> Result<ExperimentReport> {
    let layout = PathologicalLayout::new(r, k)?;
    let g = gen_pathological(r, k)?;
    let config = ExperimentConfig {
        source: GraphSource::Pathological { r, k },
        k,
        repetitions,
        seed,
        policy: Policy::Avoid(EdgeGroup { p: layout.p2.clone(), q: layout.q2.clone() }),
    };
    let mut report = run_on(&g, &config)?;
    let bound = layout.avoided_bound();
    let players = (k * repetitions) as i64;
    report.pathological = Some(PathologicalSummary {
        r,
        bound,
        within_bound: report.trials.iter().map(|t| t.mm_union <= bound).collect(),
        avoidance_success: Rational::new(players - report.total_refusals() as i64, players),
    });
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_graph_survives_any_split() {
        let g = gen_perfect(40);
        for k in [1, 3, 7] {
            let t = run_trial(&g, k, 11, &Policy::Canonical).unwrap();
            assert_eq!(t.ratio, Rational::one());
            assert_eq!(t.per_player_edges.iter().sum::<usize>(), 40);
        }
    }

    #[test]
    fn single_player_keeps_everything_needed() {
        let g = gen_random_bipartite(30, 25, 0.1, 3).unwrap();
        let t = run_trial(&g, 1, 5, &Policy::Canonical).unwrap();
        assert_eq!(t.ratio, Rational::one());
        assert!(t.per_player_edges[0] < g.vertex_count());
    }

    #[test]
    fn one_repetition_wraps_one_trial() {
        let config = ExperimentConfig {
            source: GraphSource::Random { p_count: 20, q_count: 20, prob: 0.2, seed: 1 },
            k: 4,
            repetitions: 1,
            seed: 9,
            policy: Policy::Canonical,
        };
        let report = run_experiment(&config).unwrap();
        assert_eq!(report.trials.len(), 1);
        let g = config.source.build().unwrap();
        let direct = run_trial(&g, 4, derive_seed(9, 0), &Policy::Canonical).unwrap();
        assert_eq!(report.trials[0], direct);
        assert_eq!(report.mean_ratio, direct.ratio);
    }

    #[test]
    fn small_pathological_counts_refusals() {
        let report = pathological_experiment(5, 5, 100, 3).unwrap();
        let summary = report.pathological.as_ref().unwrap();
        assert_eq!(summary.bound, 14);
        assert_eq!(report.trials.len(), 100);
        for (t, ok) in report.trials.iter().zip(&summary.within_bound) {
            if t.refusals == 0 {
                assert!(*ok, "trial {} exceeded the bound without refusals", t.trial);
            }
        }
    }

    #[test]
    fn csv_layout() {
        let config = ExperimentConfig {
            source: GraphSource::Perfect { size: 6 },
            k: 1,
            repetitions: 3,
            seed: 1,
            policy: Policy::Canonical,
        };
        let csv = run_experiment(&config).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], ExperimentReport::CSV_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1..].iter().all(|l| l.split(',').nth(5) == Some("1.000000")));
    }
}
