//! Instance generation, theorem sweeps and JSONL experiment runs.

use crate::absorbing::{run_absorbing_pipeline, PipelineParams, PipelineStatus};
use crate::combinatorics::{binomial, subsets};
use crate::error::{contract, Error, Result};
use crate::extremal::{canonical_ext, delta_threshold, ThresholdMethod, DEFAULT_THRESHOLD_BUDGET};
use crate::extremal_solver::{solve_extremal, ExtremalParams};
use crate::hypergraph::Hypergraph;
use crate::solver::{find_perfect_matching, find_rainbow_pm, SolverConfig, Status};
use crate::transform::{build_rainbow_graph, RainbowFamily, RainbowMatching};
use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// Draws allowed when generating above-threshold layers.
pub const REJECTION_CAP: u64 = 100_000;
/// Base edge probability for above-threshold layers.
pub const BASE_DENSITY: f64 = 0.55;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InstanceKind {
    Complete,
    /// Every layer is the canonical `H_ext`.
    Extremal,
    /// `perturbations` distinct (layer, k-set) toggles away from the
    /// extremal family; with `additions_only` every toggle adds an edge.
    PerturbedExtremal { perturbations: usize, additions_only: bool },
    /// Random layers lifted above `δ(n, k, ℓ)`.
    RandomAboveThreshold { density: f64 },
    /// Extremal layers plus the fewest greedy additions putting every
    /// `ℓ`-set above `δ(n, k, ℓ)`.
    AdversarialNearExtremal,
}

impl InstanceKind {
    pub fn name(&self) -> &'static str {
        match self {
            InstanceKind::Complete => "complete",
            InstanceKind::Extremal => "extremal",
            InstanceKind::PerturbedExtremal { .. } => "perturbed-extremal",
            InstanceKind::RandomAboveThreshold { .. } => "random-above-threshold",
            InstanceKind::AdversarialNearExtremal => "adversarial-near-extremal",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceSpec {
    #[serde(flatten)]
    pub kind: InstanceKind,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub seed: u64,
}

impl InstanceSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 || self.n < self.k {
            return Err(Error::InvalidArity(format!("need 2 <= k <= n, got n = {}, k = {}", self.n, self.k)));
        }
        if !self.n.is_multiple_of(self.k) {
            return Err(Error::Divisibility(format!("k = {} does not divide n = {}", self.k, self.n)));
        }
        if self.l == 0 || self.l >= self.k {
            return Err(Error::InvalidArity(format!("need 1 <= ℓ <= k-1, got ℓ = {}", self.l)));
        }
        if let InstanceKind::RandomAboveThreshold { density } = self.kind {
            if !(0.0..=1.0).contains(&density) {
                return Err(contract(format!("density {density} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

/// `δ(n, k, ℓ)` from the closed-form degree counts.
pub fn threshold(n: usize, k: usize, l: usize) -> Result<u64> {
    Ok(delta_threshold(n, k, l, ThresholdMethod::Formula, DEFAULT_THRESHOLD_BUDGET)?.value)
}

/// Adds random missing edges through every `ℓ`-set of degree `<= bound`
/// until it exceeds `bound`. `pool` filters the edges that may be added.
fn lift_degrees<R: Rng + ?Sized>(h: &Hypergraph, l: usize, bound: u64, pool: impl Fn(&[usize]) -> bool, rng: &mut R) -> Result<Hypergraph> {
    let (n, k) = (h.n(), h.k());
    let mut edges: HashSet<Vec<usize>> = h.edges().map(<[usize]>::to_vec).collect();
    for s in subsets(n, l) {
        let rest: Vec<usize> = (0..n).filter(|v| s.binary_search(v).is_err()).collect();
        let completions: Vec<Vec<usize>> = subsets(rest.len(), k - l)
            .map(|pos| {
                let mut e: Vec<usize> = pos.iter().map(|&p| rest[p]).chain(s.iter().copied()).collect();
                e.sort_unstable();
                e
            })
            .collect();
        let degree = completions.iter().filter(|e| edges.contains(*e)).count() as u64;
        let need = (bound + 1).saturating_sub(degree) as usize;
        if need == 0 {
            continue;
        }
        let mut missing: Vec<&Vec<usize>> = completions.iter().filter(|e| !edges.contains(*e) && pool(e)).collect();
        missing.shuffle(rng);
        for e in missing.into_iter().take(need) {
            edges.insert(e.clone());
        }
    }
    let mut edges: Vec<Vec<usize>> = edges.into_iter().collect();
    edges.sort_unstable();
    Hypergraph::new(n, k, edges)
}

/// Deterministic for a fixed spec. Above-threshold kinds are checked with
/// `δ_ℓ > δ(n, k, ℓ)` on every layer before returning.
pub fn generate_instance(spec: &InstanceSpec) -> Result<RainbowFamily> {
    spec.validate()?;
    let (n, k, l) = (spec.n, spec.k, spec.l);
    let layers = n / k;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let ext = || -> Result<Hypergraph> { Ok(canonical_ext(n, k, l)?.build()) };
    let family = match &spec.kind {
        InstanceKind::Complete => RainbowFamily::uniform(Hypergraph::complete(n, k))?,
        InstanceKind::Extremal => RainbowFamily::uniform(ext()?)?,
        InstanceKind::PerturbedExtremal {
            perturbations,
            additions_only,
        } => {
            let base = ext()?;
            let pool: Vec<Vec<usize>> = if *additions_only {
                base.complement().edges().map(<[usize]>::to_vec).collect()
            } else {
                subsets(n, k).collect()
            };
            let total = pool.len() * layers;
            if *perturbations > total {
                return Err(contract(format!("{perturbations} perturbations exceed the {total} available")));
            }
            let mut toggles: Vec<Vec<Vec<usize>>> = vec![Vec::new(); layers];
            for idx in rand::seq::index::sample(&mut rng, total, *perturbations) {
                toggles[idx / pool.len()].push(pool[idx % pool.len()].clone());
            }
            let built = toggles
                .into_iter()
                .map(|flip| {
                    let flip: HashSet<Vec<usize>> = flip.into_iter().collect();
                    Hypergraph::from_predicate(n, k, |e| base.contains_edge(e) != flip.contains(e))
                })
                .collect();
            RainbowFamily::new(n, k, built)?
        }
        InstanceKind::RandomAboveThreshold { density } => {
            let bound = threshold(n, k, l)?;
            if bound >= binomial(n - l, k - l) {
                return Err(contract(format!("no {k}-graph on {n} vertices has δ_{l} above {bound}")));
            }
            let mut draws = 0u64;
            let mut built = Vec::with_capacity(layers);
            while built.len() < layers {
                draws += 1;
                if draws > REJECTION_CAP {
                    return Err(Error::Resource {
                        what: format!("{REJECTION_CAP} draws for above-threshold layers"),
                        partial: format!("{} of {layers} layers", built.len()),
                    });
                }
                let raw = Hypergraph::from_predicate(n, k, |_| rng.gen_bool(*density));
                let lifted = lift_degrees(&raw, l, bound, |_| true, &mut rng)?;
                if lifted.min_degree(l)? > bound {
                    built.push(lifted);
                }
            }
            RainbowFamily::new(n, k, built)?
        }
        InstanceKind::AdversarialNearExtremal => {
            let bound = threshold(n, k, l)?;
            let base = ext()?;
            let built = (0..layers)
                .map(|_| {
                    let lifted = lift_degrees(&base, l, bound, |_| true, &mut rng)?;
                    if lifted.min_degree(l)? <= bound {
                        return Err(contract(format!("cannot lift H_ext above δ_{l} = {bound}")));
                    }
                    Ok(lifted)
                })
                .collect::<Result<Vec<_>>>()?;
            RainbowFamily::new(n, k, built)?
        }
    };
    Ok(family)
}

/// Seed of the `index`-th instance of a run seeded with `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng.next_u64()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub trial: u64,
    pub spec: InstanceSpec,
    pub status: Status,
    pub layers: Vec<Vec<Vec<usize>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub trials: u64,
    pub threshold: u64,
    pub found: u64,
    /// Instances without a rainbow perfect matching (or undecided ones).
    pub counterexamples: Vec<Counterexample>,
}

/// Random above-threshold families checked with the exact rainbow solver.
/// Anything not found is archived in the report.
pub fn verify_theorem_sweep(n: usize, k: usize, l: usize, trials: u64, seed: u64) -> Result<SweepReport> {
    verify_sweep_of(n, k, l, trials, seed, InstanceKind::RandomAboveThreshold { density: BASE_DENSITY })
}

/// [`verify_theorem_sweep`] for any instance kind.
pub fn verify_sweep_of(n: usize, k: usize, l: usize, trials: u64, seed: u64, kind: InstanceKind) -> Result<SweepReport> {
    let bound = threshold(n, k, l)?;
    let cfg = SolverConfig::from_env();
    let results: Vec<(u64, InstanceSpec, RainbowFamily, Status)> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let spec = InstanceSpec {
                kind: kind.clone(),
                n,
                k,
                l,
                seed: derive_seed(seed, trial),
            };
            let family = generate_instance(&spec)?;
            let status = find_rainbow_pm(&family, &cfg).status;
            Ok((trial, spec, family, status))
        })
        .collect::<Result<_>>()?;
    let found = results.iter().filter(|r| r.3 == Status::Found).count() as u64;
    let counterexamples = results
        .into_iter()
        .filter(|r| r.3 != Status::Found)
        .map(|(trial, spec, family, status)| Counterexample {
            trial,
            spec,
            status,
            layers: family.layers().iter().map(|h| h.edges().map(<[usize]>::to_vec).collect()).collect(),
        })
        .collect();
    Ok(SweepReport {
        n,
        k,
        l,
        trials,
        threshold: bound,
        found,
        counterexamples,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Module {
    /// Direct rainbow search.
    Solver,
    /// Perfect matching search on the `(1,k)`-graph.
    Reduction,
    /// Absorbing pipeline.
    Pipeline,
    /// Extremal-case solver.
    Extremal,
}

impl Module {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "solver" => Some(Module::Solver),
            "reduction" => Some(Module::Reduction),
            "pipeline" => Some(Module::Pipeline),
            "extremal" => Some(Module::Extremal),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Module::Solver => "solver",
            Module::Reduction => "reduction",
            Module::Pipeline => "pipeline",
            Module::Extremal => "extremal",
        }
    }
}

/// A parsed experiment configuration; see the README for the file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub kind: String,
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub instances: u64,
    pub seed: u64,
    pub modules: Vec<Module>,
    pub perturbations: usize,
    pub additions_only: bool,
    pub density: f64,
    pub gamma: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub fallback_n: usize,
    pub budget: Option<u64>,
    pub batch: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            kind: "random-above-threshold".into(),
            n: 0,
            k: 0,
            l: 0,
            instances: 0,
            seed: 0,
            modules: vec![Module::Solver],
            perturbations: 5,
            additions_only: false,
            density: BASE_DENSITY,
            gamma: PipelineParams::default().gamma,
            xi: PipelineParams::default().xi,
            epsilon: ExtremalParams::default().epsilon,
            fallback_n: 0,
            budget: None,
            batch: 32,
        }
    }
}

fn parse_error(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

impl ExperimentConfig {
    /// Flat `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut l_given = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let Some(eq) = raw.find('=') else {
                return Err(parse_error(line_no, 1, "expected key = value"));
            };
            let key = raw[..eq].trim();
            let value = raw[eq + 1..].trim();
            let col = eq + 2 + (raw[eq + 1..].len() - raw[eq + 1..].trim_start().len());
            let bad = |what: &str| parse_error(line_no, col, format!("{key}: expected {what}, got {value:?}"));
            let int = || value.parse::<u64>().map_err(|_| bad("a non-negative integer"));
            let float = || value.parse::<f64>().map_err(|_| bad("a number"));
            match key {
                "kind" => cfg.kind = value.to_string(),
                "n" => cfg.n = int()? as usize,
                "k" => cfg.k = int()? as usize,
                "l" => {
                    cfg.l = int()? as usize;
                    l_given = true;
                }
                "instances" => cfg.instances = int()?,
                "seed" => cfg.seed = int()?,
                "perturbations" => cfg.perturbations = int()? as usize,
                "additions_only" => cfg.additions_only = value.parse().map_err(|_| bad("true or false"))?,
                "density" => cfg.density = float()?,
                "gamma" => cfg.gamma = float()?,
                "xi" => cfg.xi = float()?,
                "epsilon" => cfg.epsilon = float()?,
                "fallback_n" => cfg.fallback_n = int()? as usize,
                "budget" => cfg.budget = Some(int()?),
                "batch" => cfg.batch = (int()? as usize).max(1),
                "modules" => {
                    cfg.modules = value
                        .split(',')
                        .map(|m| Module::parse(m.trim()).ok_or_else(|| bad("solver, reduction, pipeline or extremal")))
                        .collect::<Result<_>>()?;
                }
                _ => return Err(parse_error(line_no, 1, format!("unknown key {key:?}"))),
            }
        }
        if !l_given {
            cfg.l = cfg.k.saturating_sub(1);
        }
        if cfg.instances > 0 {
            cfg.spec(0)?.validate()?;
        }
        Ok(cfg)
    }

    pub fn instance_kind(&self) -> Result<InstanceKind> {
        Ok(match self.kind.as_str() {
            "complete" => InstanceKind::Complete,
            "extremal" => InstanceKind::Extremal,
            "perturbed-extremal" => InstanceKind::PerturbedExtremal {
                perturbations: self.perturbations,
                additions_only: self.additions_only,
            },
            "random-above-threshold" => InstanceKind::RandomAboveThreshold { density: self.density },
            "adversarial-near-extremal" => InstanceKind::AdversarialNearExtremal,
            other => return Err(contract(format!("unknown instance kind {other:?}"))),
        })
    }

    pub fn spec(&self, index: u64) -> Result<InstanceSpec> {
        Ok(InstanceSpec {
            kind: self.instance_kind()?,
            n: self.n,
            k: self.k,
            l: self.l,
            seed: derive_seed(self.seed, index),
        })
    }

    /// Crate version plus a hash of the configuration.
    pub fn version_stamp(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serialises");
        let digest = hex::encode(Sha256::digest(canonical.as_bytes()));
        format!("{}+{}", env!("CARGO_PKG_VERSION"), &digest[..12])
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModuleOutcome {
    pub module: Module,
    pub status: String,
    pub nodes: u64,
    /// Edge per layer of a found rainbow matching.
    pub witness: Option<Vec<Vec<usize>>>,
    /// Hex sha256 of the witness serialised as JSON.
    pub witness_hash: Option<String>,
    pub phase: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub index: u64,
    pub instance: InstanceSpec,
    pub outcomes: Vec<ModuleOutcome>,
    pub version: String,
    /// Wall-clock milliseconds per module; the only non-reproducible field.
    pub timing: BTreeMap<String, f64>,
}

pub fn witness_hash(witness: &[Vec<usize>]) -> String {
    let json = serde_json::to_string(witness).expect("plain vectors serialise");
    hex::encode(Sha256::digest(json.as_bytes()))
}

fn outcome_of(module: Module, status: String, nodes: u64, rainbow: Option<RainbowMatching>, phase: Option<String>) -> ModuleOutcome {
    let witness = rainbow.map(|r| r.edges);
    ModuleOutcome {
        module,
        status,
        nodes,
        witness_hash: witness.as_deref().map(witness_hash),
        witness,
        phase,
    }
}

fn status_name(s: Status) -> String {
    match s {
        Status::Found => "found",
        Status::None => "none",
        Status::Timeout => "timeout",
    }
    .into()
}

fn pipeline_status_name(s: PipelineStatus) -> String {
    match s {
        PipelineStatus::Found => "found",
        PipelineStatus::None => "none",
        PipelineStatus::Timeout => "timeout",
        PipelineStatus::Failed => "failed",
    }
    .into()
}

fn run_module(module: Module, family: &RainbowFamily, cfg: &ExperimentConfig, solver: &SolverConfig, seed: u64) -> Result<ModuleOutcome> {
    Ok(match module {
        Module::Solver => {
            let out = find_rainbow_pm(family, solver);
            outcome_of(module, status_name(out.status), out.nodes_explored, out.matching, None)
        }
        Module::Reduction => {
            let t = build_rainbow_graph(family);
            let out = find_perfect_matching(t.as_hypergraph(), solver);
            let rainbow = out.matching.as_ref().map(|pm| crate::transform::rainbow_of_pm(&t, pm)).transpose()?;
            outcome_of(module, status_name(out.status), out.nodes_explored, rainbow, None)
        }
        Module::Pipeline => {
            let params = PipelineParams {
                gamma: cfg.gamma,
                xi: cfg.xi,
                seed,
                fallback_n: cfg.fallback_n,
                solver: *solver,
                ..PipelineParams::default()
            };
            let out = run_absorbing_pipeline(family, &params)?;
            let phase = out.failed_phase.map(|p| serde_json::to_value(p).expect("phase serialises").as_str().unwrap_or_default().to_string());
            outcome_of(module, pipeline_status_name(out.status), 0, out.rainbow, phase)
        }
        Module::Extremal => {
            let params = ExtremalParams {
                epsilon: cfg.epsilon,
                fallback_n: cfg.fallback_n,
                seed,
                solver: *solver,
                ..ExtremalParams::default()
            };
            let out = solve_extremal(family, &params)?;
            let phase = out.failed_phase.map(|p| p.name().to_string());
            outcome_of(module, pipeline_status_name(out.status), out.plans_tried as u64, out.rainbow, phase)
        }
    })
}

/// Generates instance `index` and runs every configured module on it.
pub fn run_instance(cfg: &ExperimentConfig, index: u64, solver: &SolverConfig) -> Result<ExperimentRecord> {
    let instance = cfg.spec(index)?;
    let family = generate_instance(&instance)?;
    let mut outcomes = Vec::new();
    let mut timing = BTreeMap::new();
    for &module in &cfg.modules {
        let start = Instant::now();
        outcomes.push(run_module(module, &family, cfg, solver, instance.seed)?);
        timing.insert(module.name().to_string(), start.elapsed().as_secs_f64() * 1e3);
    }
    Ok(ExperimentRecord {
        index,
        instance,
        outcomes,
        version: cfg.version_stamp(),
        timing,
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub written: u64,
    pub skipped: u64,
    pub version: String,
}

/// Complete records already in `out`; a torn final line is cut off.
fn existing_records(out: &Path) -> Result<Vec<ExperimentRecord>> {
    let Ok(text) = std::fs::read_to_string(out) else {
        return Ok(Vec::new());
    };
    let mut records = Vec::new();
    let mut keep = 0;
    for line in text.split_inclusive('\n') {
        if !line.ends_with('\n') {
            break;
        }
        match serde_json::from_str::<ExperimentRecord>(line.trim_end()) {
            Ok(r) => records.push(r),
            Err(_) => break,
        }
        keep += line.len();
    }
    if keep < text.len() {
        let file = std::fs::OpenOptions::new().write(true).open(out)?;
        file.set_len(keep as u64)?;
    }
    Ok(records)
}

/// Runs `cfg` and appends one JSON record per instance to `out`. Instances
/// already recorded under the same version stamp are skipped, so an
/// interrupted run picks up where it stopped.
pub fn run_experiment(cfg: &ExperimentConfig, out: &Path) -> Result<ExperimentSummary> {
    let version = cfg.version_stamp();
    let done: HashSet<u64> = existing_records(out)?
        .into_iter()
        .filter(|r| r.version == version)
        .map(|r| r.index)
        .collect();
    let todo: Vec<u64> = (0..cfg.instances).filter(|i| !done.contains(i)).collect();
    let solver = match cfg.budget {
        Some(b) => SolverConfig::with_budget(b),
        None => SolverConfig::from_env(),
    };
    let mut file = std::fs::OpenOptions::new().create(true).append(true).open(out)?;
    let mut written = 0;
    for batch in todo.chunks(cfg.batch.max(1)) {
        let records: Vec<ExperimentRecord> = batch.par_iter().map(|&i| run_instance(cfg, i, &solver)).collect::<Result<_>>()?;
        for r in &records {
            writeln!(file, "{}", serde_json::to_string(r)?)?;
        }
        file.flush()?;
        written += records.len() as u64;
    }
    Ok(ExperimentSummary {
        written,
        skipped: done.len() as u64,
        version,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: InstanceKind, n: usize, k: usize, seed: u64) -> InstanceSpec {
        InstanceSpec { kind, n, k, l: k - 1, seed }
    }

    #[test]
    fn kind_examples() {
        let complete = generate_instance(&spec(InstanceKind::Complete, 9, 3, 0)).unwrap();
        assert!(complete.layers().iter().all(|h| h.min_degree(2).unwrap() == 7));
        let ext = generate_instance(&spec(InstanceKind::Extremal, 9, 3, 0)).unwrap();
        let bound = threshold(9, 3, 2).unwrap();
        assert_eq!(bound, 2);
        assert!(ext.layers().iter().all(|h| h.min_degree(2).unwrap() == bound));
        let perturbed = InstanceKind::PerturbedExtremal {
            perturbations: 5,
            additions_only: false,
        };
        let fam = generate_instance(&spec(perturbed, 9, 3, 4)).unwrap();
        let diff: usize = fam.layers().iter().zip(ext.layers()).map(|(a, b)| a.symmetric_difference_len(b)).sum();
        assert_eq!(diff, 5);
    }

    #[test]
    fn above_threshold_kinds() {
        for kind in [InstanceKind::RandomAboveThreshold { density: BASE_DENSITY }, InstanceKind::AdversarialNearExtremal] {
            for seed in 0..5 {
                let fam = generate_instance(&spec(kind.clone(), 9, 3, seed)).unwrap();
                assert!(fam.layers().iter().all(|h| h.min_degree(2).unwrap() > 2));
            }
        }
        assert_eq!(
            generate_instance(&spec(InstanceKind::RandomAboveThreshold { density: 0.3 }, 9, 3, 1)).unwrap(),
            generate_instance(&spec(InstanceKind::RandomAboveThreshold { density: 0.3 }, 9, 3, 1)).unwrap()
        );
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(generate_instance(&spec(InstanceKind::Complete, 7, 3, 0)), Err(Error::Divisibility(_))));
        let bad_l = InstanceSpec { l: 3, ..spec(InstanceKind::Complete, 9, 3, 0) };
        assert!(generate_instance(&bad_l).is_err());
    }

    #[test]
    fn extremal_sweep_has_only_counterexamples() {
        let report = verify_sweep_of(6, 3, 2, 3, 0, InstanceKind::Extremal).unwrap();
        assert_eq!(report.found, 0);
        assert_eq!(report.counterexamples.len(), 3);
    }

    #[test]
    fn config_parsing() {
        let cfg = ExperimentConfig::parse("# demo\nn = 9\nk = 3\ninstances = 2\nmodules = solver, pipeline\n").unwrap();
        assert_eq!((cfg.n, cfg.k, cfg.l, cfg.instances), (9, 3, 2, 2));
        assert_eq!(cfg.modules, vec![Module::Solver, Module::Pipeline]);
        match ExperimentConfig::parse("n = 9\nk = x\n") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 5)),
            other => panic!("{other:?}"),
        }
        assert!(matches!(ExperimentConfig::parse("bogus = 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(ExperimentConfig::parse("n 9\n"), Err(Error::Parse { line: 1, .. })));
        assert_eq!(ExperimentConfig::parse("").unwrap().instances, 0);
    }

    #[test]
    fn witness_hash_is_stable() {
        assert_eq!(witness_hash(&[vec![0, 1, 2]]), witness_hash(&[vec![0, 1, 2]]));
        assert_ne!(witness_hash(&[vec![0, 1, 2]]), witness_hash(&[vec![0, 1, 3]]));
    }
}
