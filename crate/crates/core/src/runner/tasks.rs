use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use super::{CsvTable, ExperimentConfig, Task, TaskResult};
use crate::asymptotics::{attempt_eq54, formal_series_check, permanent_curve, q_n_sequence, rho_variant};
use crate::diagrams::{limit_scan, t_n_lower_limits, t_tilde_n, DiagramKind, ZSum, DEFAULT_DYSON_STEP};
use crate::error::{PermlabError, Result};
use crate::extension::{
    distinct_mass, evolve_extended_at, restrict_to_distinct, total_mass, ConfigurationSpace, PairPotential,
    DEFAULT_STATE_CAP, DEFAULT_STEP,
};
use crate::group_walk::{
    empirical_marginal, empirical_pair_gap, sample_walk_with_threads, tv_with_standard_error, GroupSpace,
    DEFAULT_GROUP_CAP,
};
use crate::lattice::{c_constant, Lattice};
use crate::series::{catalan_by_recursion, generating_function_value, DEFAULT_ORDER};

pub const DEFAULT_RESTRICT_TIMES: [f64; 5] = [0.25, 0.5, 1.0, 2.0, 5.0];
pub const DEFAULT_PERMANENT_TIMES: [f64; 10] = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0];
pub const DEFAULT_SAMPLES: usize = 100_000;
pub const DEFAULT_SCAN_SCALE: f64 = 0.2;
pub const DEFAULT_EQ51_SIZES: [u64; 4] = [50, 100, 200, 400];
pub const DEFAULT_MAX_INDEX: usize = 16;
/// Highest power of `ρ` compared in the exact series check.
pub const FORMAL_ORDER_CAP: usize = 32;

pub(crate) fn dispatch(cfg: &ExperimentConfig) -> Result<TaskResult> {
    match cfg.task {
        Task::HeatKernel => heat_kernel(cfg),
        Task::GroupWalk => group_walk(cfg),
        Task::Sample => sample(cfg),
        Task::Extend => extend(cfg),
        Task::RestrictCheck => restrict_check(cfg),
        Task::Diagrams => diagrams(cfg),
        Task::Catalan => catalan(cfg),
        Task::Genfun => genfun(cfg),
        Task::Rho => rho(cfg),
        Task::Eq51 => eq51(cfg),
        Task::Permanent => permanent(cfg),
        Task::Conjecture1Report => conjecture1(cfg),
    }
}

fn lattice(cfg: &ExperimentConfig) -> Result<Lattice> {
    Lattice::new(cfg.dim, cfg.edge)
}

fn state_cap(cfg: &ExperimentConfig) -> u64 {
    cfg.cap_states.unwrap_or(DEFAULT_STATE_CAP)
}

fn group_cap(cfg: &ExperimentConfig) -> u64 {
    cfg.cap_group.unwrap_or(DEFAULT_GROUP_CAP)
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn result(values: Value, table: CsvTable) -> TaskResult {
    TaskResult { values, table, steps: BTreeMap::new(), orders: BTreeMap::new() }
}

fn with_step(mut r: TaskResult, name: &str, step: f64) -> TaskResult {
    r.steps.insert(name.to_string(), step);
    r
}

fn with_order(mut r: TaskResult, name: &str, order: u64) -> TaskResult {
    r.orders.insert(name.to_string(), order);
    r
}

fn heat_kernel(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let lat = lattice(cfg)?;
    let n = lat.vertex_count();
    let entries = (n as u128) * (n as u128);
    if entries > state_cap(cfg) as u128 {
        return Err(PermlabError::CapExceeded { what: "heat-kernel matrix", requested: entries, cap: state_cap(cfg) as u128 });
    }
    let times = cfg.times(&[1.0])?;
    let mut table = CsvTable::new(&["t", "vertex", "value"]);
    let mut points = Vec::new();
    for &t in &times {
        let k = lat.heat_kernel_spectral(t)?;
        let uniform_gap = (0..n).flat_map(|i| k.row(i).to_vec()).map(|v| (v - 1.0 / n as f64).abs()).fold(0.0, f64::max);
        let ode_difference = match cfg.step {
            Some(step) => Some(k.max_abs_diff(&lat.heat_kernel_ode(t, step)?)),
            None => None,
        };
        for (v, &x) in k.row(0).iter().enumerate() {
            table.push(vec![num(t), v.to_string(), num(x)]);
        }
        points.push(json!({
            "t": t,
            "row_from_0": k.row(0),
            "stochasticity_defect": k.stochasticity_defect(),
            "symmetry_defect": k.symmetry_defect(),
            "uniform_gap": uniform_gap,
            "ode_max_difference": ode_difference,
        }));
    }
    let r = result(json!({ "d": lat.dim(), "L": lat.edge(), "N": n, "points": points }), table);
    Ok(match cfg.step {
        Some(s) => with_step(r, "heat_kernel_ode", s),
        None => r,
    })
}

fn group_walk(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let lat = lattice(cfg)?;
    let space = GroupSpace::new(&lat, group_cap(cfg))?;
    let times = cfg.times(&[1.0])?;
    let mut table = CsvTable::new(&["t", "rank", "weight"]);
    let mut points = Vec::new();
    for &t in &times {
        let dist = space.evolve(t)?;
        let uniform = 1.0 / dist.weights.len() as f64;
        let marginal = dist.marginal_of_vertex(0)?;
        let kernel = lat.heat_kernel_spectral(t)?;
        let marginal_gap = marginal.0.iter().zip(kernel.row(0)).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        for (rank, w) in dist.weights.iter().enumerate() {
            table.push(vec![num(t), rank.to_string(), num(*w)]);
        }
        points.push(json!({
            "t": t,
            "identity_weight": dist.weights[0],
            "total": dist.total(),
            "uniform_gap": dist.weights.iter().map(|w| (w - uniform).abs()).fold(0.0, f64::max),
            "marginal_of_0": marginal.0,
            "marginal_kernel_gap": marginal_gap,
        }));
    }
    let values = json!({
        "d": lat.dim(), "L": lat.edge(), "N": lat.vertex_count(), "group_order": space.size(), "points": points,
    });
    Ok(result(values, table))
}

/// FNV-1a over the sampled tuples, a compact replay fingerprint.
fn fingerprint(samples: &[u32]) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for s in samples {
        for b in s.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    }
    format!("{h:016x}")
}

fn sample(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let lat = lattice(cfg)?;
    if cfg.time_grid.is_some() {
        return Err(PermlabError::InvalidConfig("sample takes a single time".into()));
    }
    let t = cfg.time.unwrap_or(2.0);
    let count = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    let batch = sample_walk_with_threads(&lat, t, count, cfg.seed, cfg.threads)?;
    let empirical = empirical_marginal(&batch, 0)?;
    let kernel = lat.heat_kernel_spectral(t)?;
    let reference = kernel.row(0).to_vec();
    let (tv, se) = tv_with_standard_error(&empirical, &reference, count);
    let pair = empirical_pair_gap(&batch, 0, 1)?;
    let mut table = CsvTable::new(&["vertex", "empirical", "reference"]);
    for (v, (e, r)) in empirical.iter().zip(&reference).enumerate() {
        table.push(vec![v.to_string(), num(*e), num(*r)]);
    }
    let values = json!({
        "d": lat.dim(), "L": lat.edge(), "t": t, "samples": count,
        "empirical_marginal_of_0": empirical,
        "kernel_row_0": reference,
        "total_variation": tv,
        "std_error": se,
        "within_three_std_errors": tv <= 3.0 * se,
        "pair_gap_0_1": pair,
        "fingerprint": fingerprint(&batch.samples),
    });
    Ok(result(values, table))
}

fn extend(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let lat = lattice(cfg)?;
    let space = ConfigurationSpace::full(&lat, state_cap(cfg))?;
    let pot = PairPotential::all_pairs(lat.vertex_count(), cfg.r);
    let step = cfg.step.unwrap_or(DEFAULT_STEP);
    let times = cfg.times(&[1.0])?;
    let evols = evolve_extended_at(&pot, &space, &times, step)?;
    let mut table = CsvTable::new(&["t", "total_mass", "distinct_mass", "max_abs", "local_error"]);
    let mut points = Vec::new();
    for e in &evols {
        let (a, b) = (total_mass(&e.field), distinct_mass(&space, &e.field));
        table.push(vec![num(e.field.t), num(a), num(b), num(e.max_abs), num(e.local_error)]);
        points.push(json!({
            "t": e.field.t, "total_mass": a, "distinct_mass": b, "max_abs": e.max_abs,
            "local_error": e.local_error, "steps": e.steps,
        }));
    }
    let values = json!({ "d": lat.dim(), "L": lat.edge(), "r": cfg.r, "states": space.size(), "points": points });
    Ok(with_step(result(values, table), "extension_rk4", step))
}

fn restrict_check(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let lat = lattice(cfg)?;
    let space = ConfigurationSpace::full(&lat, state_cap(cfg))?;
    let group = GroupSpace::new(&lat, group_cap(cfg))?;
    let pot = PairPotential::all_pairs(lat.vertex_count(), cfg.r);
    let step = cfg.step.unwrap_or(DEFAULT_STEP);
    let times = cfg.times(&DEFAULT_RESTRICT_TIMES)?;
    let evols = evolve_extended_at(&pot, &space, &times, step)?;
    let mut table = CsvTable::new(&["t", "max_defect", "distinct_mass"]);
    let mut points = Vec::new();
    let mut worst: f64 = 0.0;
    for e in &evols {
        let restricted = restrict_to_distinct(&space, &e.field)?;
        let exact = group.evolve(e.field.t)?;
        let defect = restricted.max_abs_diff(&exact);
        worst = worst.max(defect);
        let mass = restricted.total();
        table.push(vec![num(e.field.t), num(defect), num(mass)]);
        points.push(json!({ "t": e.field.t, "max_defect": defect, "distinct_mass": mass }));
    }
    let values = json!({ "d": lat.dim(), "L": lat.edge(), "r": cfg.r, "max_defect": worst, "points": points });
    Ok(with_step(result(values, table), "extension_rk4", step))
}

fn diagrams(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let n = cfg.n.unwrap_or(3);
    let kind = cfg.kind.unwrap_or(DiagramKind::Full);
    let step = cfg.step.unwrap_or(DEFAULT_DYSON_STEP);
    if let Some(sizes) = &cfg.sizes {
        let sizes: Vec<usize> = sizes.iter().map(|&s| s as usize).collect();
        let scale = cfg.scale.unwrap_or(DEFAULT_SCAN_SCALE);
        let scan = limit_scan(n, kind, cfg.dim, &sizes, scale, step)?;
        let mut table = CsvTable::new(&["L", "t", "value"]);
        for (&l, &v) in scan.sizes.iter().zip(&scan.values) {
            table.push(vec![l.to_string(), num(scale * (l * l) as f64), num(v)]);
        }
        let monotone = scan.is_monotone();
        let values = json!({ "scan": scan, "monotone": monotone });
        return Ok(with_step(result(values, table), "dyson_rk4", step));
    }
    let lat = lattice(cfg)?;
    let times = cfg.times(&[1.0])?;
    let eval = match kind {
        DiagramKind::LowerLimits => t_n_lower_limits(&lat, n, &times)?,
        DiagramKind::Full => t_tilde_n(&lat, n, &times, step, &ZSum::Distinct)?,
    };
    let mut table = CsvTable::new(&["t", "value"]);
    for (t, v) in &eval.curve {
        table.push(vec![num(*t), num(*v)]);
    }
    let r = result(serde_json::to_value(&eval)?, table);
    Ok(match eval.step {
        Some(s) => with_step(r, "dyson_rk4", s),
        None => r,
    })
}

fn catalan(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let order = cfg.order.unwrap_or(DEFAULT_ORDER);
    let table_values = catalan_by_recursion(order)?;
    let decimals = table_values.decimal_values();
    let mut table = CsvTable::new(&["i", "A_i"]);
    for (i, a) in decimals.iter().enumerate() {
        table.push(vec![i.to_string(), a.clone()]);
    }
    Ok(with_order(result(json!({ "order": order, "A": decimals }), table), "catalan", order as u64))
}

fn genfun(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let order = cfg.order.unwrap_or(DEFAULT_ORDER);
    let z = cfg.z.unwrap_or(0.2);
    let g = generating_function_value(z, order)?;
    let mut table = CsvTable::new(&["z", "order", "series", "closed_form", "tail_bound"]);
    table.push(vec![num(g.z), order.to_string(), num(g.series), num(g.closed_form), num(g.tail_bound)]);
    Ok(with_order(result(serde_json::to_value(&g)?, table), "generating_series", order as u64))
}

fn rho(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let order = cfg.order.unwrap_or(DEFAULT_ORDER);
    let rho: BigRational = super::parse_rational(cfg.rho.as_deref().unwrap_or("3/10"))?;
    let point = rho_variant(&rho, order)?;
    let formal_order = order.min(FORMAL_ORDER_CAP);
    let formal = formal_series_check(formal_order)?;
    let mut table = CsvTable::new(&["k", "from_exponent", "from_target"]);
    for (k, (a, b)) in formal.from_exponent.iter().zip(&formal.from_target).enumerate() {
        table.push(vec![k.to_string(), a.clone(), b.clone()]);
    }
    let values = json!({
        "rho": point.rho,
        "rho_value": rho.to_f64(),
        "point": point,
        "formal_series": { "order": formal.order, "equal": formal.equal(), "mismatches": formal.mismatches },
    });
    let r = with_order(result(values, table), "rho_exact_terms", order as u64);
    Ok(with_order(r, "rho_formal_series", formal_order as u64))
}

fn eq51(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let sizes = cfg.sizes.clone().unwrap_or(DEFAULT_EQ51_SIZES.to_vec());
    let max_index = cfg.max_index.unwrap_or(DEFAULT_MAX_INDEX);
    let order = cfg.order.unwrap_or(DEFAULT_ORDER).max(max_index);
    let table_values = catalan_by_recursion(order)?;
    let maxima = q_n_sequence(&sizes, max_index, &table_values)?;
    let eq54 = attempt_eq54(&table_values)?;
    let mut table = CsvTable::new(&["N", "q_N"]);
    for m in &maxima {
        table.push(vec![m.profile.n.to_string(), num(m.q_n)]);
    }
    let increasing = maxima.windows(2).all(|w| w[1].q_n > w[0].q_n);
    let values = json!({ "max_index": max_index, "maxima": maxima, "increasing": increasing, "eq54": eq54 });
    Ok(with_order(result(values, table), "catalan", order as u64))
}

fn permanent(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let lat = lattice(cfg)?;
    let times = cfg.times(&DEFAULT_PERMANENT_TIMES)?;
    let curve = permanent_curve(&lat, &times)?;
    let mut table = CsvTable::new(&["t", "permanent", "target", "gap"]);
    for p in &curve {
        table.push(vec![num(p.t), num(p.permanent), num(p.target), num(p.gap)]);
    }
    let in_bounds = curve.iter().all(|p| p.permanent >= p.target - 1e-12 && p.permanent <= 1.0 + 1e-12);
    let values = json!({ "d": lat.dim(), "L": lat.edge(), "curve": curve, "within_bounds": in_bounds });
    Ok(result(values, table))
}

fn conjecture1(cfg: &ExperimentConfig) -> Result<TaskResult> {
    let lat = lattice(cfg)?;
    let n = lat.vertex_count();
    let space = ConfigurationSpace::full(&lat, state_cap(cfg))?;
    let pot = PairPotential::all_pairs(n, cfg.r);
    let step = cfg.step.unwrap_or(DEFAULT_STEP);
    let times = match cfg.times(&[])? {
        t if t.is_empty() => super::parse_time_grid("0:20:1")?,
        t => t,
    };
    let evols = evolve_extended_at(&pot, &space, &times, step)?;
    let c = c_constant(n as u64)?;
    let mut table = CsvTable::new(&["t", "mass_A", "mass_B", "C_N"]);
    let mut curve = Vec::new();
    let mut worst_b: f64 = 0.0;
    for e in &evols {
        let (a, b) = (total_mass(&e.field), distinct_mass(&space, &e.field));
        worst_b = worst_b.max((b - 1.0).abs());
        table.push(vec![num(e.field.t), num(a), num(b), num(c.value)]);
        curve.push(json!({ "t": e.field.t, "mass_A": a, "mass_B": b }));
    }
    let values = json!({
        "d": lat.dim(), "L": lat.edge(), "N": n, "r": cfg.r,
        "C_N": c.value, "C_N_exact": c.exact.to_string(),
        "curve": curve,
        "max_mass_B_defect": worst_b,
    });
    Ok(with_step(result(values, table), "extension_rk4", step))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fingerprint_is_order_sensitive() {
        assert_ne!(fingerprint(&[1, 2]), fingerprint(&[2, 1]));
        assert_eq!(fingerprint(&[]), "cbf29ce484222325");
    }
}
