//! The acceptance criteria as runnable checks, and the bundle that runs a
//! selection of them and summarizes the outcome.

use std::path::Path;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::asymptotics::{attempt_eq54, conjecture2_permanent, formal_series_check, permanent_curve, rho_variant};
use crate::diagrams::{
    dyson_oracle, limit_scan, t_n_value, t_tilde_n, telescopic_identity_check, DiagramKind, ZSum,
    DEFAULT_DYSON_STEP,
};
use crate::error::{PermlabError, Result};
use crate::extension::DEFAULT_STATE_CAP;
use crate::group_walk::{evolve_group, DEFAULT_GROUP_CAP};
use crate::lattice::{Lattice, SiteField};
use crate::runner::{run, ExperimentConfig, Task};
use crate::series::{catalan_by_recursion, catalan_closed_form, functional_equation_residual};

pub const CRITERIA: [u32; 13] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13];

/// Resource caps a bundle runs under.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub states: u64,
    pub group: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps { states: DEFAULT_STATE_CAP, group: DEFAULT_GROUP_CAP }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

impl Status {
    pub fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skipped => "SKIP",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionOutcome {
    pub id: u32,
    pub title: String,
    pub status: Status,
    pub detail: String,
    pub seconds: f64,
    pub artifact: Value,
}

impl CriterionOutcome {
    /// One summary line.
    pub fn line(&self) -> String {
        format!("criterion {:>2} {} {}: {} ({:.1} s)", self.id, self.status.label(), self.title, self.detail, self.seconds)
    }
}

struct Check {
    ok: bool,
    detail: String,
    artifact: Value,
}

fn check(ok: bool, detail: String, artifact: Value) -> Result<Check> {
    Ok(Check { ok, detail, artifact })
}

pub fn title(id: u32) -> &'static str {
    match id {
        1 => "restriction identity",
        2 => "equilibria",
        3 => "heat kernel routes and semigroup",
        4 => "two-particle tree term",
        5 => "three-particle lower limits",
        6 => "three-particle full tree sum",
        7 => "telescopic identity",
        8 => "Catalan recursion",
        9 => "thinned-lattice exponent",
        10 => "self-consistency has no solution",
        11 => "kernel permanent",
        12 => "Monte Carlo marginal",
        13 => "total mass report",
        _ => "unknown criterion",
    }
}

/// States and group elements a criterion needs; compared against the caps.
fn requirement(id: u32) -> Caps {
    match id {
        1 | 13 => Caps { states: 256, group: 24 },
        2 => Caps { states: 0, group: 24 },
        4 => Caps { states: 125, group: 0 },
        5 | 6 => Caps { states: 16 * 16 * 16, group: 0 },
        _ => Caps { states: 0, group: 0 },
    }
}

pub fn run_criterion(id: u32, caps: &Caps) -> CriterionOutcome {
    let started = Instant::now();
    let need = requirement(id);
    let (status, detail, artifact) = if need.states > caps.states || need.group > caps.group {
        (
            Status::Skipped,
            format!(
                "needs {} states and {} group elements, caps are {} and {}",
                need.states, need.group, caps.states, caps.group
            ),
            Value::Null,
        )
    } else {
        match evaluate(id) {
            Ok(c) => (if c.ok { Status::Pass } else { Status::Fail }, c.detail, c.artifact),
            Err(e) => (Status::Fail, format!("error: {e}"), Value::Null),
        }
    };
    CriterionOutcome {
        id,
        title: title(id).to_string(),
        status,
        detail,
        seconds: started.elapsed().as_secs_f64(),
        artifact,
    }
}

fn evaluate(id: u32) -> Result<Check> {
    match id {
        1 => restriction(),
        2 => equilibria(),
        3 => kernel_routes(),
        4 => two_particle(),
        5 => three_particle(DiagramKind::LowerLimits),
        6 => three_particle(DiagramKind::Full),
        7 => telescopic(),
        8 => catalan(),
        9 => rho(),
        10 => frustration(),
        11 => permanent(),
        12 => monte_carlo(),
        13 => total_mass(),
        _ => Err(PermlabError::InvalidConfig(format!("no criterion {id}"))),
    }
}

fn ring(l: usize) -> Result<Lattice> {
    Lattice::new(1, l)
}

fn restriction() -> Result<Check> {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for l in [3, 4] {
        for r in [0.0, 0.5, -0.5] {
            let mut cfg = ExperimentConfig::new(Task::RestrictCheck);
            cfg.edge = l;
            cfg.r = r;
            let out = run(&cfg)?;
            let d = out.envelope.values["max_defect"].as_f64().unwrap_or(f64::INFINITY);
            worst = worst.max(d);
            rows.push(json!({ "L": l, "r": r, "max_defect": d }));
        }
    }
    let secs = started.elapsed().as_secs_f64();
    check(
        worst <= 1e-6 && secs <= 120.0,
        format!("max defect {worst:.2e} (≤ 1e-6) in {secs:.1} s (≤ 120 s)"),
        json!({ "runs": rows, "seconds": secs }),
    )
}

fn equilibria() -> Result<Check> {
    let mut group_gap: f64 = 0.0;
    for l in [3, 4] {
        let lat = ring(l)?;
        let dist = evolve_group(&lat, 50.0)?;
        let u = 1.0 / dist.weights.len() as f64;
        group_gap = group_gap.max(dist.weights.iter().map(|w| (w - u).abs()).fold(0.0, f64::max));
    }
    let mut kernel_gap: f64 = 0.0;
    for l in [3, 4, 5] {
        let lat = ring(l)?;
        let k = lat.heat_kernel_spectral(100.0)?;
        let u = 1.0 / l as f64;
        for i in 0..l {
            kernel_gap = kernel_gap.max(k.row(i).iter().map(|v| (v - u).abs()).fold(0.0, f64::max));
        }
    }
    check(
        group_gap <= 1e-8 && kernel_gap <= 1e-10,
        format!("group walk gap {group_gap:.2e} (≤ 1e-8), kernel gap {kernel_gap:.2e} (≤ 1e-10)"),
        json!({ "group_gap": group_gap, "kernel_gap": kernel_gap }),
    )
}

fn kernel_routes() -> Result<Check> {
    let mut route: f64 = 0.0;
    let mut semigroup: f64 = 0.0;
    for d in [1, 2] {
        for l in [3, 4, 5] {
            let lat = Lattice::new(d, l)?;
            for t in [0.1, 0.5, 1.0, 2.0] {
                let k = lat.heat_kernel_spectral(t)?;
                route = route.max(k.max_abs_diff(&lat.heat_kernel_ode(t, 1e-3)?));
            }
            for t1 in [0.1, 0.5, 1.0] {
                for t2 in [0.1, 0.5, 1.0] {
                    let prod = lat.heat_kernel_spectral(t1)?.matmul(&lat.heat_kernel_spectral(t2)?);
                    semigroup = semigroup.max(prod.max_abs_diff(&lat.heat_kernel_spectral(t1 + t2)?));
                }
            }
        }
    }
    check(
        route <= 1e-10 && semigroup <= 1e-9,
        format!("spectral vs RK4 {route:.2e} (≤ 1e-10), semigroup {semigroup:.2e} (≤ 1e-9)"),
        json!({ "route_difference": route, "semigroup_difference": semigroup, "ode_step": 1e-3 }),
    )
}

fn two_particle() -> Result<Check> {
    let lat = ring(5)?;
    let mut worst: f64 = 0.0;
    for t in [0.5, 1.0, 2.0] {
        let closed = t_n_value(&lat, 2, t)?;
        let dyson = dyson_oracle(&lat, 2, &[(0, 1)], t, 1e-3, &ZSum::Distinct)?.full;
        worst = worst.max((closed - dyson).abs());
    }
    let late = t_n_value(&lat, 2, 50.0)?;
    let late_gap = (late - (1.0 - 1.0 / 5.0)).abs();
    check(
        worst <= 1e-8 && late_gap <= 1e-8,
        format!("closed form vs Dyson {worst:.2e} (≤ 1e-8), T_2(50) - (1 - 1/N) = {late_gap:.2e}"),
        json!({ "dyson_difference": worst, "late_value": late }),
    )
}

fn three_particle(kind: DiagramKind) -> Result<Check> {
    let started = Instant::now();
    let scan = limit_scan(3, kind, 1, &[8, 12, 16], 0.2, DEFAULT_DYSON_STEP)?;
    let secs = started.elapsed().as_secs_f64();
    let limit = scan.extrapolation.limit;
    let monotone = scan.is_monotone();
    match kind {
        DiagramKind::LowerLimits => {
            let rel = (limit + 1.0).abs();
            check(
                rel <= 0.05 && monotone && secs <= 300.0,
                format!("limit {limit:.4} vs -1 (rel. error {rel:.3} ≤ 0.05), monotone {monotone}, {secs:.1} s"),
                serde_json::to_value(&scan)?,
            )
        }
        DiagramKind::Full => {
            let rel = (limit - 2.0).abs() / 2.0;
            let lat = ring(5)?;
            let times = [0.5, 1.0, 2.0, 5.0];
            let tilde = t_tilde_n(&lat, 2, &times, DEFAULT_DYSON_STEP, &ZSum::Distinct)?;
            let identical = tilde
                .curve
                .iter()
                .zip(times)
                .all(|(&(_, v), t)| t_n_value(&lat, 2, t).map(|w| w == v).unwrap_or(false));
            check(
                rel <= 0.10 && identical && secs <= 300.0,
                format!(
                    "limit {limit:.4} vs 2 (rel. error {rel:.3} ≤ 0.10), two-particle sums identical {identical}, {secs:.1} s"
                ),
                serde_json::to_value(&scan)?,
            )
        }
    }
}

fn telescopic() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let lat = Lattice::new(2, 4)?;
    let nv = lat.vertex_count();
    let mut worst: f64 = 0.0;
    for n in [3, 4] {
        for _ in 0..100 {
            let fields: Vec<SiteField> =
                (0..n).map(|_| SiteField((0..nv).map(|_| rng.random_range(-1.0..1.0)).collect())).collect();
            let y = rng.random_range(0..nv);
            let dir = rng.random_range(0..lat.dim());
            let (lhs, rhs) = telescopic_identity_check(&lat, y, dir, &fields)?;
            worst = worst.max((lhs - rhs).abs());
        }
    }
    check(worst <= 1e-10, format!("max |lhs - rhs| {worst:.2e} over 200 trials (≤ 1e-10)"), json!({ "max_difference": worst }))
}

fn catalan() -> Result<Check> {
    let table = catalan_by_recursion(64)?;
    let mismatches: Vec<usize> = (0..=64).filter(|&i| table.values[i] != catalan_closed_form(i)).collect();
    let listed: Vec<BigInt> = [1, 2, 5, 14].iter().map(|&v| BigInt::from(v)).collect();
    let listed_ok = table.values[1..=4] == listed[..];
    check(
        mismatches.is_empty() && listed_ok,
        format!("recursion = closed form for i ≤ 64: {}, A_1..A_4 = 1, 2, 5, 14: {listed_ok}", mismatches.is_empty()),
        json!({ "mismatches": mismatches, "A_64": table.values[64].to_string() }),
    )
}

fn rho() -> Result<Check> {
    let formal = formal_series_check(32)?;
    let mut worst: f64 = 0.0;
    for (n, d) in [(1, 10), (3, 10), (9, 20)] {
        let pt = rho_variant(&BigRational::new(n.into(), d.into()), 64)?;
        worst = worst.max(pt.difference.abs());
    }
    let mut residual: f64 = 0.0;
    for k in 1..=9 {
        residual = residual.max(functional_equation_residual(0.05 * k as f64)?.abs());
    }
    let breakdown = functional_equation_residual(0.6)?.abs();
    check(
        formal.equal() && worst <= 1e-8 && residual <= 1e-10 && breakdown >= 0.1,
        format!(
            "series equal through ρ^32: {}, numeric {worst:.2e} (≤ 1e-8), self-consistency {residual:.2e} (≤ 1e-10), breakdown at 0.6: {breakdown:.3} (≥ 0.1)",
            formal.equal()
        ),
        json!({ "mismatches": formal.mismatches, "numeric": worst, "residual": residual, "breakdown": breakdown }),
    )
}

fn frustration() -> Result<Check> {
    let report = attempt_eq54(&catalan_by_recursion(64)?)?;
    let gap = (report.sup_value - 0.5).abs();
    check(
        gap <= 1e-9 && !report.solvable,
        format!("sup S = {} (|sup - 1/2| = {gap:.1e}), unsolvable: {}", report.sup_value, !report.solvable),
        serde_json::to_value(&report)?,
    )
}

fn permanent() -> Result<Check> {
    let started = Instant::now();
    let lat = ring(10)?;
    let times = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0];
    let curve = permanent_curve(&lat, &times)?;
    let small = conjecture2_permanent(&ring(3)?, 50.0)?;
    let gap = curve.last().map(|p| p.gap.abs()).unwrap_or(f64::INFINITY);
    let bounded = curve.iter().all(|p| p.permanent >= p.target - 1e-12 && p.permanent <= 1.0 + 1e-12);
    let secs = started.elapsed().as_secs_f64();
    check(
        gap <= 1e-6 && bounded && (small.permanent - 2.0 / 9.0).abs() <= 1e-8 && secs <= 60.0,
        format!("gap at t = 200 {gap:.2e} (≤ 1e-6), within [N!/N^N, 1]: {bounded}, {secs:.1} s"),
        serde_json::to_value(&curve)?,
    )
}

fn monte_carlo() -> Result<Check> {
    let mut cfg = ExperimentConfig::new(Task::Sample);
    cfg.edge = 8;
    cfg.time = Some(2.0);
    cfg.samples = Some(100_000);
    cfg.seed = 20_240_601;
    let mut texts = Vec::new();
    let mut values = Value::Null;
    for threads in [1, 4] {
        cfg.threads = Some(threads);
        let out = run(&cfg)?;
        texts.push(out.envelope.to_json()?);
        values = out.envelope.values;
    }
    let tv = values["total_variation"].as_f64().unwrap_or(f64::INFINITY);
    let se = values["std_error"].as_f64().unwrap_or(0.0);
    let identical = texts[0] == texts[1];
    check(
        tv <= 3.0 * se && identical,
        format!("TV {tv:.2e} vs 3σ̂ = {:.2e}, envelopes byte-identical across 1 and 4 threads: {identical}", 3.0 * se),
        json!({ "total_variation": tv, "std_error": se, "fingerprint": values["fingerprint"] }),
    )
}

fn total_mass() -> Result<Check> {
    let mut worst: f64 = 0.0;
    let mut reproducible = true;
    let mut curves = Vec::new();
    for l in [3, 4] {
        let mut cfg = ExperimentConfig::new(Task::Conjecture1Report);
        cfg.edge = l;
        let a = run(&cfg)?;
        let b = run(&cfg)?;
        reproducible &= a.envelope.to_json()? == b.envelope.to_json()?;
        worst = worst.max(a.envelope.values["max_mass_B_defect"].as_f64().unwrap_or(f64::INFINITY));
        curves.push(a.envelope.values);
    }
    let last = |v: &Value| v["curve"].as_array().and_then(|c| c.last()).map(|p| p["mass_A"].clone());
    check(
        worst <= 1e-8 && reproducible,
        format!(
            "report only: mass over all tuples at t = 20 is {} (C_3 = 4.5) and {} (C_4 = {:.4}); mass on distinct tuples within {worst:.1e} of 1; reproducible {reproducible}",
            last(&curves[0]).unwrap_or(Value::Null),
            last(&curves[1]).unwrap_or(Value::Null),
            256.0 / 24.0
        ),
        json!(curves),
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BundleSummary {
    pub caps: Caps,
    pub rows: Vec<CriterionOutcome>,
}

impl BundleSummary {
    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != Status::Fail)
    }

    pub fn table(&self) -> String {
        self.rows.iter().map(|r| r.line() + "\n").collect()
    }
}

/// Runs the selected criteria in order. A failing criterion marks its row
/// and the bundle continues. Artifacts go to `artifacts` when given.
pub fn report_bundle(ids: &[u32], caps: Caps, artifacts: Option<&Path>) -> Result<BundleSummary> {
    if let Some(&bad) = ids.iter().find(|id| !CRITERIA.contains(id)) {
        return Err(PermlabError::InvalidConfig(format!("no criterion {bad}; criteria are 1 to 13")));
    }
    let rows: Vec<CriterionOutcome> = ids.iter().map(|&id| run_criterion(id, &caps)).collect();
    let summary = BundleSummary { caps, rows };
    if let Some(dir) = artifacts {
        std::fs::create_dir_all(dir)?;
        for row in &summary.rows {
            let path = dir.join(format!("criterion_{:02}.json", row.id));
            std::fs::write(path, serde_json::to_string_pretty(row)? + "\n")?;
        }
        std::fs::write(dir.join("summary.txt"), summary.table())?;
    }
    Ok(summary)
}
