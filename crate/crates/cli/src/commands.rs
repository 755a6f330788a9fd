//! One function per subcommand. Each returns its violations of the checked
//! properties; whether they fail the run is up to the caller.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dstsp_core::agility::agility_field;
use dstsp_core::bounds::{beta_constant, bound_report, cost_field, integral_of_inverse, interaction_integral, BoundInputs, DensitySampler};
use dstsp_core::cbo::{brute_cbo_small, cbo_bound, greedy_orienteering, BRUTE_MAX_TARGETS};
use dstsp_core::dynamics::{DynamicsModel, Point};
use dstsp_core::hcp::{
    brute_force_optimal, construct_optimal_plan, hcp_star_bound, plan_cost, Action, HcpInstance, HcpParams, TargetPath,
    BRUTE_MAX_BRANCH, BRUTE_MAX_DEPTH, BRUTE_MAX_TARGETS as HCP_BRUTE_MAX,
};
use dstsp_core::hcs::{build_cover, BoxRegion, HcsCover};
use dstsp_core::planner::{default_eps0, solve_dstsp, tour_time_bound, verify_tour};
use dstsp_core::stats::{balls_bins_experiment, BinExperiment};
use dstsp_core::{rng, BigCost, Field};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, Subcommand};
use crate::presets::{agility_g, alpha_hat, branching, density, support};
use crate::report::{emit_report, write_report, Format, Record};

/// Where tables and JSON documents go: files under `--out`, or stdout.
pub struct Emitter<'a> {
    pub dir: Option<&'a Path>,
    pub stdout: &'a mut dyn Write,
    /// File name to SHA-256 of everything written so far.
    pub files: BTreeMap<String, String>,
}

impl Emitter<'_> {
    /// The primary table: a CSV file, or stdout without `--out`.
    pub fn table<R: Record>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        match self.dir {
            Some(d) => {
                let hash = emit_report(rows, &d.join(name), Format::Csv).with_context(|| format!("writing {name}"))?;
                self.files.insert(name.to_string(), hash);
            }
            None => {
                write_report(rows, &mut *self.stdout, Format::Csv)?;
            }
        }
        Ok(())
    }

    /// A secondary table, only written with `--out`.
    pub fn side_table<R: Record>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        if self.dir.is_some() {
            self.table(name, rows)?;
        }
        Ok(())
    }

    /// A JSON document: a file with `--out`, and on stdout when `echo` is set.
    pub fn json(&mut self, name: &str, value: &serde_json::Value, echo: bool) -> Result<()> {
        let text = serde_json::to_string(value)? + "\n";
        if let Some(d) = self.dir {
            std::fs::write(d.join(name), &text).with_context(|| format!("writing {name}"))?;
            self.files.insert(name.to_string(), crate::report::sha256_hex(text.as_bytes()));
        }
        if echo {
            self.stdout.write_all(text.as_bytes())?;
        }
        Ok(())
    }
}

pub type Violations = Vec<String>;

pub fn dispatch(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<Violations> {
    match cfg.subcommand()? {
        Subcommand::EstimateAgility => estimate_agility(cfg, em),
        Subcommand::BuildCover => build_cover_cmd(cfg, em),
        Subcommand::RunDstsp => run_dstsp(cfg, em),
        Subcommand::RunAdversarial => run_adversarial(cfg, em),
        Subcommand::HcpSolve => hcp_solve(cfg, em),
        Subcommand::CheckBounds => check_bounds(cfg, em),
        Subcommand::CboCheck => cbo_check(cfg, em),
        Subcommand::Concentration => concentration(cfg, em),
    }
}

fn nominal_gamma(cfg: &ExperimentConfig, model: &DynamicsModel) -> f64 {
    cfg.gamma.unwrap_or(f64::from(model.nominal_gamma()))
}

fn eps0_for(cfg: &ExperimentConfig, model: &DynamicsModel, n: usize, support: &BoxRegion) -> Result<f64> {
    Ok(match cfg.eps0 {
        Some(e) => e,
        None => default_eps0(model, n, support)?,
    })
}

// ---------------------------------------------------------------- agility

#[derive(Serialize)]
pub struct AgilityRow {
    pub model: &'static str,
    pub x: f64,
    pub y: f64,
    pub eps: f64,
    pub volume: f64,
    pub gamma_hat: f64,
    pub g_hat: f64,
    pub r2: f64,
}

impl Record for AgilityRow {
    const HEADER: &'static [&'static str] = &["model", "x", "y", "eps", "volume", "gamma_hat", "g_hat", "r2"];
}

fn estimate_agility(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<Violations> {
    let model = cfg.model.resolve()?;
    let grid = crate::presets::grid(&model, cfg.grid_cells(), |_| 0.0)?;
    let (field, records) = agility_field(&model, &grid, cfg.eps0.unwrap_or(0.1), cfg.samples, cfg.seed)?;
    let nominal = f64::from(model.nominal_gamma());
    let tol = if model.has_heading() { 0.2 } else { 0.05 * nominal };
    let mut violations = Vec::new();
    for r in &records {
        if (r.estimate.gamma_hat - nominal).abs() > tol {
            violations.push(format!("cell {} heading {:.3}: gamma_hat {:.4} vs {nominal}", r.cell, r.heading, r.estimate.gamma_hat));
        }
    }
    let rows = records.iter().flat_map(|r| {
        r.estimate.epsilons.iter().zip(&r.estimate.volumes).map(move |(&eps, &volume)| AgilityRow {
            model: model.id(),
            x: r.x,
            y: r.y,
            eps,
            volume,
            gamma_hat: r.estimate.gamma_hat,
            g_hat: r.estimate.g_hat,
            r2: r.estimate.fit_r2,
        })
    });
    em.table("estimate-agility.csv", rows)?;
    em.json("agility-field.json", &serde_json::to_value(&field)?, false)?;
    Ok(violations)
}

// ---------------------------------------------------------------- cover

#[derive(Serialize)]
pub struct CoverRow {
    pub root: usize,
    pub anchor_0: f64,
    pub anchor_1: f64,
    pub anchor_2: f64,
    pub lo_0: f64,
    pub lo_1: f64,
    pub lo_2: f64,
    pub hi_0: f64,
    pub hi_1: f64,
    pub hi_2: f64,
}

impl Record for CoverRow {
    const HEADER: &'static [&'static str] =
        &["root", "anchor_0", "anchor_1", "anchor_2", "lo_0", "lo_1", "lo_2", "hi_0", "hi_1", "hi_2"];
}

fn build_cover_cmd(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<Violations> {
    let model = cfg.model.resolve()?;
    let sup = support(&model);
    let eps0 = eps0_for(cfg, &model, cfg.ns()[0], &sup)?;
    let cover = build_cover(&model, &sup, eps0, cfg.s)?;
    let mut violations = Vec::new();
    if cfg.assert {
        let g = agility_g(&model, cfg.grid_cells(), cfg.samples, cfg.seed)?;
        if let Err(e) = alpha_hat(&model, &cover, &g, rng::mix(cfg.seed, 1)) {
            violations.push(format!("root cell containment: {e}"));
        }
    }
    let rows = cover.roots.iter().enumerate().map(|(i, c)| CoverRow {
        root: i,
        anchor_0: c.anchor[0],
        anchor_1: c.anchor[1],
        anchor_2: c.anchor[2],
        lo_0: c.region.lo[0],
        lo_1: c.region.lo[1],
        lo_2: c.region.lo[2],
        hi_0: c.region.hi[0],
        hi_1: c.region.hi[1],
        hi_2: c.region.hi[2],
    });
    em.table("build-cover.csv", rows)?;
    em.json("cover.json", &cover.to_json(), false)?;
    Ok(violations)
}

// ---------------------------------------------------------------- tours

/// Shared state of the tour experiments: fields on the grid, the
/// interaction integral and a sampler.
pub struct TourSetup {
    pub model: DynamicsModel,
    pub support: BoxRegion,
    pub g: Field,
    pub f: Field,
    pub gamma: f64,
    pub j: f64,
    pub sampler: DensitySampler<f64>,
}

impl TourSetup {
    pub fn new(cfg: &ExperimentConfig, density_spec: &str) -> Result<Self> {
        let model = cfg.model.resolve()?;
        if !model.symmetric() {
            bail!("{} is not symmetric", model.id());
        }
        let g = agility_g(&model, cfg.grid_cells(), cfg.samples, cfg.seed)?;
        let f = density(density_spec, &g)?;
        let gamma = nominal_gamma(cfg, &model);
        let j = interaction_integral(&f, &g, gamma)?;
        let sampler = DensitySampler::new(&f)?;
        Ok(Self { support: support(&model), model, g, f, gamma, j, sampler })
    }

    /// Targets of trial `k` at size `n`.
    pub fn targets(&self, seed: u64, n: usize) -> Vec<Point> {
        let mut r = rng::substream(seed, n as u64);
        (0..n).map(|_| self.sampler.sample(&mut r)).collect()
    }
}

pub struct Trial {
    pub seed: u64,
    pub n: usize,
    pub tour_time: f64,
    pub eps0: f64,
    pub alpha_hat: f64,
}

/// Every (n, seed) tour. Trials run in parallel and come back in
/// (n, seed index) order.
pub fn run_tours(cfg: &ExperimentConfig, setup: &TourSetup, violations: &mut Violations) -> Result<Vec<Trial>> {
    let mut out = Vec::new();
    for n in cfg.ns() {
        let eps0 = eps0_for(cfg, &setup.model, n, &setup.support)?;
        let cover = build_cover(&setup.model, &setup.support, eps0, cfg.s)?;
        let alpha = alpha_hat(&setup.model, &cover, &setup.g, rng::mix(cfg.seed, n as u64))?;
        let results: Vec<Result<(Trial, Option<String>)>> = (0..cfg.seeds)
            .into_par_iter()
            .map(|k| one_tour(cfg, setup, &cover, n, k, eps0, alpha))
            .collect();
        for r in results {
            let (trial, problem) = r?;
            violations.extend(problem);
            out.push(trial);
        }
    }
    Ok(out)
}

fn one_tour(
    cfg: &ExperimentConfig,
    setup: &TourSetup,
    cover: &HcsCover,
    n: usize,
    k: usize,
    eps0: f64,
    alpha_hat: f64,
) -> Result<(Trial, Option<String>)> {
    let seed = rng::mix(cfg.seed, k as u64);
    let targets = setup.targets(seed, n);
    let tour = solve_dstsp(&setup.model, cover, &targets)?;
    let mut problem = None;
    if cfg.assert {
        if let Err(e) = verify_tour(&setup.model, &tour, &targets) {
            problem = Some(format!("seed {seed} n {n}: {e}"));
        } else if tour.total_time > tour_time_bound(cover, &tour) + 1e-9 {
            problem = Some(format!("seed {seed} n {n}: tour {} above its cell bound", tour.total_time));
        }
    }
    Ok((Trial { seed, n, tour_time: tour.total_time, eps0, alpha_hat }, problem))
}

pub fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m == 0 {
        f64::NAN
    } else if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

/// Median tour time per n, in the order of `ns`.
pub fn medians(trials: &[Trial], ns: &[usize]) -> Vec<f64> {
    ns.iter()
        .map(|&n| median(&mut trials.iter().filter(|t| t.n == n).map(|t| t.tour_time).collect::<Vec<_>>()))
        .collect()
}

#[derive(Serialize)]
pub struct DstspRow {
    pub seed: u64,
    pub model: &'static str,
    pub density: String,
    pub n: usize,
    pub tour_time: f64,
    #[serde(rename = "J")]
    pub j: f64,
    pub ratio: f64,
    pub eps0: f64,
    pub alpha_hat: f64,
}

impl Record for DstspRow {
    const HEADER: &'static [&'static str] = &["seed", "model", "density", "n", "tour_time", "J", "ratio", "eps0", "alpha_hat"];
}

fn run_dstsp(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<Violations> {
    let setup = TourSetup::new(cfg, &cfg.density)?;
    let mut violations = Vec::new();
    let trials = run_tours(cfg, &setup, &mut violations)?;
    let ns = cfg.ns();
    for (n, m) in ns.iter().zip(medians(&trials, &ns)) {
        eprintln!("n = {n}: median tour {m:.4}, per n^(1-1/gamma) J {:.4}", m / growth(*n, setup.gamma) / setup.j);
    }
    let rows = trials.iter().map(|t| DstspRow {
        seed: t.seed,
        model: setup.model.id(),
        density: cfg.density.clone(),
        n: t.n,
        tour_time: t.tour_time,
        j: setup.j,
        ratio: t.tour_time / (growth(t.n, setup.gamma) * setup.j),
        eps0: t.eps0,
        alpha_hat: t.alpha_hat,
    });
    em.table("run-dstsp.csv", rows)?;
    Ok(violations)
}

fn growth(n: usize, gamma: f64) -> f64 {
    (n as f64).powf(1.0 - 1.0 / gamma)
}

#[derive(Serialize)]
pub struct AdversarialRow {
    pub seed: u64,
    pub model: &'static str,
    pub n: usize,
    pub tour_time: f64,
    pub int_g_inv: f64,
    pub ratio: f64,
    pub adversarial_lower: f64,
    pub adversarial_upper: f64,
}

impl Record for AdversarialRow {
    const HEADER: &'static [&'static str] =
        &["seed", "model", "n", "tour_time", "int_g_inv", "ratio", "adversarial_lower", "adversarial_upper"];
}

/// Tours under the worst-case density against the adversarial bounds.
fn run_adversarial(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<Violations> {
    let setup = TourSetup::new(cfg, "worst")?;
    let mut violations = Vec::new();
    let trials = run_tours(cfg, &setup, &mut violations)?;
    let int_g_inv = integral_of_inverse(&setup.g, None);
    let b = match cfg.b {
        Some(b) => b,
        None => branching(&setup.model, cfg.seed)?,
    };
    let (_, beta) = beta_constant(b, setup.gamma, cfg.symmetric);
    let mut rows = Vec::with_capacity(trials.len());
    for t in &trials {
        let rep = bound_report(&BoundInputs {
            n: t.n as u64,
            delta: cfg.delta,
            beta,
            s: f64::from(cfg.s),
            alpha: t.alpha_hat.min(1.0),
            gamma: setup.gamma,
            j: setup.j,
            int_g_inv,
        })?;
        if cfg.assert && t.tour_time > rep.adversarial_upper {
            violations.push(format!("seed {} n {}: tour {} above {}", t.seed, t.n, t.tour_time, rep.adversarial_upper));
        }
        rows.push(AdversarialRow {
            seed: t.seed,
            model: setup.model.id(),
            n: t.n,
            tour_time: t.tour_time,
            int_g_inv,
            ratio: t.tour_time / (growth(t.n, setup.gamma) * int_g_inv.powf(1.0 / setup.gamma)),
            adversarial_lower: rep.adversarial_lower,
            adversarial_upper: rep.adversarial_upper,
        });
    }
    em.table("run-adversarial.csv", rows)?;
    Ok(violations)
}

// ---------------------------------------------------------------- hcp

#[derive(Serialize)]
pub struct PlanRow {
    pub step: usize,
    pub op: &'static str,
    pub arg: u64,
}

impl Record for PlanRow {
    const HEADER: &'static [&'static str] = &["step", "op", "arg"];
}

pub const HCP_RANDOM_DEPTH: usize = 8;

fn hcp_instance(cfg: &ExperimentConfig) -> Result<HcpInstance> {
    if let Some(path) = &cfg.instance {
        let text = std::fs::read_to_string(path).with_context(|| format!("instance {}", path.display()))?;
        return HcpInstance::from_json(&text).with_context(|| format!("instance {}", path.display()));
    }
    let b = cfg.b.unwrap_or(4);
    let params = HcpParams::new(u32::try_from(b).context("b too large")?, cfg.s)?;
    let mut r = rng::from_seed(cfg.seed);
    let targets = (0..cfg.ns()[0])
        .map(|_| TargetPath::new((0..HCP_RANDOM_DEPTH).map(|_| r.random_range(0..params.branch())).collect()))
        .collect();
    Ok(HcpInstance::truncated(params, targets)?)
}

fn hcp_solve(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<Violations> {
    let inst = hcp_instance(cfg)?;
    let plan = construct_optimal_plan(&inst);
    let exact: BigCost = plan_cost(&plan, &inst)?;
    let cost: f64 = plan_cost(&plan, &inst)?;
    let params = *inst.params();
    let bound = hcp_star_bound(inst.len(), &params).ok();
    let mut violations = Vec::new();
    if cfg.assert {
        if let Some(b) = bound {
            if cost > b + 1e-9 {
                violations.push(format!("plan cost {cost} above {b}"));
            }
        }
        let depth = inst.targets().iter().map(|t| t.stored_depth()).max().unwrap_or(0);
        if inst.len() <= HCP_BRUTE_MAX && depth <= BRUTE_MAX_DEPTH && params.branch() <= BRUTE_MAX_BRANCH {
            let (_, best): (_, BigCost) = brute_force_optimal(&inst, depth)?;
            if best != exact {
                violations.push(format!("plan cost {exact} differs from the search optimum {best}"));
            }
        }
    }
    let rows = plan.actions.iter().enumerate().map(|(step, a)| {
        let (op, arg) = match *a {
            Action::MoveDown(c) => ("down", u64::from(c)),
            Action::MoveUp => ("up", 0),
            Action::Collect(i) => ("collect", i as u64),
        };
        PlanRow { step, op, arg }
    });
    em.side_table("hcp-solve.csv", rows)?;
    let summary = serde_json::json!({
        "n": inst.len(),
        "b": params.branch(),
        "s": params.scale(),
        "actions": plan.actions.len(),
        "cost": cost,
        "cost_exact": exact.to_string(),
        "bound": bound,
    });
    em.json("hcp-solve.json", &summary, true)?;
    Ok(violations)
}

// ---------------------------------------------------------------- bounds

#[derive(Serialize)]
pub struct BoundRow(pub dstsp_core::bounds::BoundReport);

impl Record for BoundRow {
    const HEADER: &'static [&'static str] =
        &["n", "gamma", "beta", "s", "alpha", "J", "lower", "upper", "adversarial_lower", "adversarial_upper", "delta"];
}

fn check_bounds(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<Violations> {
    let model = cfg.model.resolve()?;
    let gamma = nominal_gamma(cfg, &model);
    let needs_fields = cfg.alpha.is_none() || cfg.j.is_none() || cfg.int_g_inv.is_none();
    let setup = if needs_fields { Some(TourSetup::new(cfg, &cfg.density)?) } else { None };
    let b = match cfg.b {
        Some(b) => b,
        None => branching(&model, cfg.seed)?,
    };
    let (_, beta) = beta_constant(b, gamma, cfg.symmetric);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    for n in cfg.ns() {
        let alpha = match (cfg.alpha, &setup) {
            (Some(a), _) => a,
            (None, Some(st)) => {
                let eps0 = eps0_for(cfg, &model, n, &st.support)?;
                let cover = build_cover(&model, &st.support, eps0, cfg.s)?;
                alpha_hat(&model, &cover, &st.g, rng::mix(cfg.seed, n as u64))?
            }
            (None, None) => unreachable!("fields are built whenever alpha is missing"),
        };
        let j = cfg.j.or(setup.as_ref().map(|s| s.j)).expect("set above");
        let int_g_inv = cfg.int_g_inv.or(setup.as_ref().map(|s| integral_of_inverse(&s.g, None))).expect("set above");
        let rep = bound_report(&BoundInputs { n: n as u64, delta: cfg.delta, beta, s: f64::from(cfg.s), alpha, gamma, j, int_g_inv })?;
        if cfg.assert && !(rep.lower <= rep.upper && rep.adversarial_lower <= rep.adversarial_upper) {
            violations.push(format!("n {n}: bounds out of order"));
        }
        rows.push(BoundRow(rep));
    }
    let doc = match rows.as_slice() {
        [one] => serde_json::to_value(one.0)?,
        many => serde_json::to_value(many.iter().map(|r| r.0).collect::<Vec<_>>())?,
    };
    em.json("check-bounds.json", &doc, true)?;
    em.side_table("check-bounds.csv", rows)?;
    Ok(violations)
}

// ---------------------------------------------------------------- cbo

#[derive(Serialize)]
pub struct CboRow {
    pub seed: u64,
    pub n: usize,
    pub lambda: f64,
    pub greedy: usize,
    pub brute: i64,
    pub bound: f64,
}

impl Record for CboRow {
    const HEADER: &'static [&'static str] = &["seed", "n", "lambda", "greedy", "brute", "bound"];
}

pub fn cbo_rows(cfg: &ExperimentConfig) -> Result<(Vec<CboRow>, Violations)> {
    let setup = TourSetup::new(cfg, &cfg.density)?;
    let zeta = cfg.zetas()[0];
    let cost = cost_field(&setup.f, &setup.g, zeta, setup.gamma)?;
    let b = match cfg.b {
        Some(b) => b,
        None => branching(&setup.model, cfg.seed)?,
    };
    let (_, beta) = beta_constant(b, setup.gamma, cfg.symmetric);
    let mut jobs = Vec::new();
    for n in cfg.ns() {
        for &lambda in &cfg.lambda {
            for k in 0..cfg.seeds {
                jobs.push((n, lambda, k));
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|&(n, lambda, k)| -> Result<CboRow> {
            let seed = rng::mix(cfg.seed, k as u64);
            let targets = setup.targets(seed, n);
            let mut r = rng::substream(seed, u64::MAX - n as u64);
            let greedy = greedy_orienteering(&setup.model, &cost, &targets, lambda, &mut r)?;
            let brute = if n <= BRUTE_MAX_TARGETS { brute_cbo_small(&setup.model, &cost, &targets, lambda)? as i64 } else { -1 };
            Ok(CboRow { seed, n, lambda, greedy, brute, bound: cbo_bound(beta, lambda, n, setup.gamma, cfg.delta) })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut violations = Vec::new();
    for r in &rows {
        if r.greedy as f64 > r.bound || r.brute as f64 > r.bound {
            violations.push(format!("seed {} n {} lambda {}: count above bound {}", r.seed, r.n, r.lambda, r.bound));
        }
        if r.brute >= 0 && (r.brute as usize) < r.greedy {
            violations.push(format!("seed {} n {} lambda {}: brute {} below greedy {}", r.seed, r.n, r.lambda, r.brute, r.greedy));
        }
    }
    Ok((rows, violations))
}

fn cbo_check(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<Violations> {
    let (rows, violations) = cbo_rows(cfg)?;
    em.table("cbo-check.csv", rows)?;
    Ok(if cfg.assert { violations } else { Vec::new() })
}

// ---------------------------------------------------------------- stats

#[derive(Serialize)]
pub struct ConcentrationRow {
    pub regime: &'static str,
    pub m: usize,
    pub n: usize,
    pub zeta: f64,
    pub trials: usize,
    pub empirical: f64,
    pub bound: f64,
}

impl Record for ConcentrationRow {
    const HEADER: &'static [&'static str] = &["regime", "m", "n", "zeta", "trials", "empirical", "bound"];
}

fn concentration(cfg: &ExperimentConfig, em: &mut Emitter) -> Result<Violations> {
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut idx = 0u64;
    for &m in &cfg.m {
        for z in cfg.zetas() {
            for n in cfg.ns() {
                let exp = BinExperiment { p: vec![1.0 / m as f64; m], n: n as u64, zeta_exp: z, trials: cfg.trials, seed: rng::mix(cfg.seed, idx) };
                idx += 1;
                let rep = balls_bins_experiment(&exp)?;
                if cfg.assert && !rep.within_bound() {
                    violations.push(format!("m {m} n {n} zeta {z}: exceedance {} above {}", rep.empirical_prob, rep.theoretical_bound));
                }
                if cfg.assert && !rep.mean_within_bound() {
                    violations.push(format!("m {m} n {n} zeta {z}: mean {} above {}", rep.mean_y, rep.mean_bound));
                }
                rows.push(ConcentrationRow {
                    regime: rep.regime.name(),
                    m,
                    n,
                    zeta: z,
                    trials: rep.trials,
                    empirical: rep.empirical_prob,
                    bound: rep.theoretical_bound,
                });
            }
        }
    }
    em.table("concentration.csv", rows)?;
    Ok(violations)
}

