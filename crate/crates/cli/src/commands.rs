use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde_json::{json, Value};

use qorrel::closed_forms::{theorem1_spectrum, theorem2_spectrum, theorem3_spectrum};
use qorrel::families::{
    ghz1, ghz1_pure_vector, ghz2, ghz2_pure_vector, ms_state, ms_vector, Coefficients,
    FamilyParams,
};
use qorrel::limits::{limit_sweep, LimitFamily};
use qorrel::maxent::{local_basis, regularized_spectrum, solve, OracleSpectrum, SolverConfig};
use qorrel::operators::{alpha_max, ms_generator};
use qorrel::spectrum::CorrelationSpectrum;
use qorrel::tensor::{c64, DensityMatrix};
use qorrel::witness::{
    search_projector_pair, top_eigenspace_degeneracy, ueme_check, witness_expectation_test,
    ProjectorPair,
};
use qorrel::Error;

use crate::report::{format_float, spectrum_map, spectrum_table, RunReport, Table};
use crate::{
    Coherence, LimitKind, LimitsArgs, Method, OracleDumpArgs, SpectrumArgs, StateArgs,
    StateFamily, VerifyArgs, WitnessArgs, WitnessFamily,
};

/// Largest site count the dense oracle accepts.
pub const ORACLE_MAX_SITES: usize = 4;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Usage(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Usage(s) => write!(f, "{s}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::NoConvergence { .. } | Error::RankDeficient(_)) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self.exit_code() {
            3 => "numerical",
            _ => "input",
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub struct Ctx {
    pub seed: u64,
    pub tol: Option<f64>,
    pub argv: Vec<String>,
}

impl Ctx {
    fn report(&self, subcommand: &str) -> RunReport {
        RunReport {
            command: self.argv.clone(),
            subcommand: subcommand.into(),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            ..Default::default()
        }
    }
}

pub struct Output {
    pub report: RunReport,
    pub table: Table,
    pub exit_code: i32,
}

fn family_name(f: StateFamily) -> &'static str {
    match f {
        StateFamily::Ghz1 => "ghz1",
        StateFamily::Ghz2 => "ghz2",
        StateFamily::Ms => "ms",
    }
}

fn require_split(m: Option<usize>) -> CliResult<usize> {
    m.ok_or_else(|| CliError::Usage("the second family needs --m".into()))
}

/// Parameters and state described by the command-line options.
pub fn build_state(family: StateFamily, a: &StateArgs) -> CliResult<(FamilyParams, DensityMatrix)> {
    if family == StateFamily::Ms {
        let params = FamilyParams {
            alpha: a.alpha,
            ..FamilyParams::new(a.n, 0.0, 0.0)?
        };
        let rho = ms_state(a.n, a.alpha)?;
        return Ok((params, rho));
    }
    let mut params = match &a.coeff_file {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            FamilyParams::from_coefficients(a.n, Coefficients::from_json(&text)?)?
        }
        None => match a.state {
            Coherence::Pure => FamilyParams::pure(a.n, a.theta, a.phi)?,
            Coherence::Diagonal => FamilyParams::new(a.n, a.theta, a.phi)?,
        },
    };
    if let Some(v) = &a.c02 {
        params = params.with_coherence(0, 2, c64(v[0], v[1]))?;
    }
    let rho = match family {
        StateFamily::Ghz1 => ghz1(&params)?,
        _ => {
            params = params.with_split(require_split(a.m)?)?;
            ghz2(&params)?
        }
    };
    Ok((params, rho))
}

fn params_map(family: StateFamily, p: &FamilyParams) -> BTreeMap<String, Value> {
    let mut out = BTreeMap::new();
    match family {
        StateFamily::Ms => {
            out.insert("alpha".into(), json!(p.alpha));
        }
        _ => {
            out.insert("theta".into(), json!(p.theta));
            out.insert("phi".into(), json!(p.phi));
            let c = p.coefficients.to_file();
            out.insert("c".into(), json!(c.c));
        }
    }
    out
}

fn analytic(family: StateFamily, p: &FamilyParams) -> CliResult<CorrelationSpectrum> {
    let s = p.coefficients.entropy();
    Ok(match family {
        StateFamily::Ghz1 => theorem1_spectrum(p, s)?,
        StateFamily::Ghz2 => theorem2_spectrum(p, s)?,
        StateFamily::Ms => theorem3_spectrum(p.sites, p.alpha)?,
    })
}

fn oracle(rho: &DensityMatrix) -> CliResult<OracleSpectrum> {
    if rho.sites() > ORACLE_MAX_SITES {
        return Err(CliError::Usage(format!(
            "the oracle supports n <= {ORACLE_MAX_SITES}, got {}",
            rho.sites()
        )));
    }
    Ok(regularized_spectrum(rho, &SolverConfig::default())?)
}

fn oracle_residuals(o: &OracleSpectrum) -> Value {
    json!(o
        .runs
        .iter()
        .map(|r| json!({
            "epsilon": r.epsilon,
            "max_residual": r.residuals.iter().cloned().fold(0.0, f64::max),
            "iterations": r.iterations,
            "telescoping_gap": (r.spectrum.sum() - r.total_correlation).abs(),
        }))
        .collect::<Vec<_>>())
}

pub fn spectrum(ctx: &Ctx, a: &SpectrumArgs) -> CliResult<Output> {
    let (params, rho) = build_state(a.family, &a.state)?;
    let mut report = ctx.report("spectrum");
    report.family = Some(family_name(a.family).into());
    report.n = Some(params.sites);
    if a.family == StateFamily::Ghz2 {
        report.m = Some(params.split);
    }
    report.params = params_map(a.family, &params);
    let spec = match a.method {
        Method::Analytic => {
            report.method = Some("analytic".into());
            analytic(a.family, &params)?
        }
        Method::Oracle => {
            report.method = Some("oracle".into());
            let o = oracle(&rho)?;
            report.residuals = Some(oracle_residuals(&o));
            report.details = Some(json!({ "runs": o.runs }));
            o.extrapolated
        }
    };
    report.set_spectrum(&spec);
    let table = spectrum_table(&spec, report.method.as_deref().unwrap_or(""));
    Ok(Output {
        report,
        table,
        exit_code: 0,
    })
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![hi],
        _ => (0..count)
            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

struct Cell {
    params: BTreeMap<String, Value>,
    analytic: CorrelationSpectrum,
    oracle: CorrelationSpectrum,
    telescoping_gap: f64,
    deviation: f64,
}

pub fn verify(ctx: &Ctx, a: &VerifyArgs) -> CliResult<Output> {
    let tol = ctx.tol.unwrap_or(1e-2);
    let n = a.n;
    if n > ORACLE_MAX_SITES {
        return Err(CliError::Usage(format!(
            "verify compares against the oracle, which supports n <= {ORACLE_MAX_SITES}"
        )));
    }
    if a.grid == 0 {
        return Err(CliError::Usage("--grid must be positive".into()));
    }
    let family = match a.theorem {
        1 => StateFamily::Ghz1,
        2 => StateFamily::Ghz2,
        _ => StateFamily::Ms,
    };
    let m = if family == StateFamily::Ghz2 {
        Some(a.m.unwrap_or(1))
    } else {
        None
    };
    let points: Vec<StateArgs> = match family {
        StateFamily::Ms => linspace(0.3, alpha_max(), a.grid)
            .into_iter()
            .map(|alpha| grid_state(n, m, FRAC_PI_4, FRAC_PI_4, alpha))
            .collect(),
        _ => {
            let thetas = linspace(0.2, FRAC_PI_4, a.grid);
            let phis = linspace(0.0, FRAC_PI_4, a.grid);
            thetas
                .iter()
                .flat_map(|&t| phis.iter().map(move |&p| grid_state(n, m, t, p, 0.6)))
                .collect()
        }
    };

    let cells: Vec<Cell> = points
        .par_iter()
        .map(|s| -> CliResult<Cell> {
            let (params, rho) = build_state(family, s)?;
            let analytic = analytic(family, &params)?;
            let o = oracle(&rho)?;
            let smallest = o.runs.last().expect("nonempty schedule");
            Ok(Cell {
                params: params_map(family, &params),
                deviation: analytic.max_deviation(&o.extrapolated),
                telescoping_gap: (smallest.spectrum.sum() - smallest.total_correlation).abs(),
                analytic,
                oracle: o.extrapolated,
            })
        })
        .collect::<CliResult<_>>()?;

    let max_deviation = cells.iter().map(|c| c.deviation).fold(0.0, f64::max);
    let max_gap = cells.iter().map(|c| c.telescoping_gap).fold(0.0, f64::max);
    let pass = max_deviation <= tol && max_gap <= 1e-4;

    let mut report = ctx.report("verify");
    report.family = Some(family_name(family).into());
    report.n = Some(n);
    report.m = m;
    report.method = Some("analytic-vs-oracle".into());
    report.params.insert("theorem".into(), json!(a.theorem));
    report.params.insert("grid".into(), json!(a.grid));
    report.params.insert("tol".into(), json!(tol));
    report.pass = Some(pass);
    report.residuals = Some(json!({
        "max_deviation": max_deviation,
        "max_telescoping_gap": max_gap,
    }));
    let mut table = Table::new(&["cell", "level", "analytic", "oracle", "deviation"]);
    let mut rows = Vec::new();
    for (i, c) in cells.iter().enumerate() {
        let mut row = json!({
            "params": c.params,
            "analytic": spectrum_map(&c.analytic),
            "oracle": spectrum_map(&c.oracle),
            "deviation": c.deviation,
            "telescoping_gap": c.telescoping_gap,
        });
        if let Some(m) = m {
            let middle = middle_level(&c.oracle, tol);
            row["oracle_middle_level"] = json!(middle);
            row["analytic_middle_level"] = json!(n - m);
            row["printed_label_level"] = json!(m);
        }
        rows.push(row);
        for (k, v) in &c.analytic.values {
            table.push(vec![
                i.to_string(),
                k.to_string(),
                format_float(*v),
                format_float(c.oracle.value(*k)),
                format_float((v - c.oracle.value(*k)).abs()),
            ]);
        }
    }
    if let Some(m) = m {
        report.notes.push(format!(
            "the coherent contribution is expected at level n-m = {}; the printed label is m = {m}",
            n - m
        ));
    }
    report.details = Some(json!({ "cells": rows }));
    Ok(Output {
        report,
        table,
        exit_code: if pass { 0 } else { 1 },
    })
}

/// Level strictly between 2 and n carrying the largest correlation above
/// `tol`, if any.
pub fn middle_level(spec: &CorrelationSpectrum, tol: f64) -> Option<usize> {
    (3..spec.sites)
        .filter(|&k| spec.value(k) > tol)
        .max_by(|&a, &b| spec.value(a).total_cmp(&spec.value(b)))
}

fn grid_state(n: usize, m: Option<usize>, theta: f64, phi: f64, alpha: f64) -> StateArgs {
    StateArgs {
        n,
        m,
        theta,
        phi,
        alpha,
        coeff_file: None,
        state: Coherence::Pure,
        c02: None,
    }
}

pub fn limits(ctx: &Ctx, a: &LimitsArgs) -> CliResult<Output> {
    let (state_family, family, name) = match a.family {
        LimitKind::Ghz1 => (StateFamily::Ghz1, LimitFamily::Ghz1, "ghz1"),
        LimitKind::Ghz2Sigma => (StateFamily::Ghz2, LimitFamily::Ghz2Sigma, "ghz2-sigma"),
        LimitKind::Ghz2Tau => (StateFamily::Ghz2, LimitFamily::Ghz2Tau, "ghz2-tau"),
        LimitKind::Ms => (StateFamily::Ms, LimitFamily::Ms, "ms"),
        LimitKind::MsExp => (StateFamily::Ms, LimitFamily::MsExp, "ms-exp"),
    };
    if a.gammas.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
        return Err(CliError::Usage("gammas must be finite and >= 0".into()));
    }
    let (params, _) = build_state(state_family, &a.state)?;
    let sweep = limit_sweep(family, &params, &a.gammas)?;

    let mut report = ctx.report("limits");
    report.family = Some(name.into());
    report.n = Some(params.sites);
    if state_family == StateFamily::Ghz2 {
        report.m = Some(params.split);
    }
    report.params = params_map(state_family, &params);
    report.params.insert("gammas".into(), json!(a.gammas));
    report.pass = Some(sweep.monotone);
    report.residuals = Some(json!({
        "final_distance": sweep.rows.last().map(|r| r.distance),
        "final_marginal_residual": sweep.rows.last().map(|r| r.marginal_residual),
        "marginal_level": sweep.level,
    }));
    let mut table = Table::new(&["gamma", "distance", "marginal_residual", "fidelity"]);
    for r in &sweep.rows {
        table.push(vec![
            format_float(r.gamma),
            format_float(r.distance),
            format_float(r.marginal_residual),
            r.fidelity.map(format_float).unwrap_or_default(),
        ]);
    }
    report.details = Some(json!({ "rows": sweep.rows, "monotone": sweep.monotone }));
    Ok(Output {
        report,
        table,
        exit_code: if sweep.monotone { 0 } else { 1 },
    })
}

pub fn witness(ctx: &Ctx, a: &WitnessArgs) -> CliResult<Output> {
    let tol = ctx.tol.unwrap_or(1e-10);
    let mut report = ctx.report("witness");
    report.n = Some(a.n);
    let mut table = Table::new(&["quantity", "value"]);
    let pass = match a.family {
        WitnessFamily::Ghz1Pure | WitnessFamily::Ghz2Pure => {
            let (psi, pair, name) = if a.family == WitnessFamily::Ghz1Pure {
                (
                    ghz1_pure_vector(a.n, a.theta, a.phi)?,
                    ProjectorPair::ghz1(a.n),
                    "ghz1-pure",
                )
            } else {
                let m = require_split(a.m)?;
                report.m = Some(m);
                (
                    ghz2_pure_vector(a.n, m, a.theta, a.phi)?,
                    ProjectorPair::ghz2(a.n),
                    "ghz2-pure",
                )
            };
            report.family = Some(name.into());
            report.params.insert("theta".into(), json!(a.theta));
            report.params.insert("phi".into(), json!(a.phi));
            report.params.insert("samples".into(), json!(a.samples));
            let w = witness_expectation_test(&psi, &pair, a.samples, ctx.seed)?;
            let deg = top_eigenspace_degeneracy(&psi, &pair)?;
            table.push(vec!["max_deviation".into(), format_float(w.max_deviation)]);
            table.push(vec!["overlap".into(), format_float(w.overlap)]);
            table.push(vec!["top_gap".into(), format_float(deg.gap)]);
            let pass = w.max_deviation <= tol && deg.gap <= 1e-8;
            report.residuals = Some(json!({ "max_deviation": w.max_deviation }));
            report.details = Some(json!({ "witness": w, "top_eigenspace": deg }));
            pass
        }
        WitnessFamily::Ms => {
            report.family = Some("ms".into());
            report.params.insert("alpha".into(), json!(a.alpha));
            let psi = ms_vector(a.n, a.alpha)?;
            let op = ms_generator(a.n, a.alpha)?.total()?;
            let cert = ueme_check(&op, &psi)?;
            let split = search_projector_pair(&psi);
            table.push(vec!["gap".into(), format_float(cert.gap)]);
            table.push(vec!["fidelity".into(), format_float(cert.fidelity)]);
            table.push(vec!["holds".into(), cert.holds.to_string()]);
            report.residuals = Some(json!({ "infidelity": 1.0 - cert.fidelity }));
            report.details = Some(json!({
                "certificate": cert,
                "basis_projector_pair_found": split.is_some(),
            }));
            cert.holds && split.is_none()
        }
    };
    report.pass = Some(pass);
    Ok(Output {
        report,
        table,
        exit_code: if pass { 0 } else { 1 },
    })
}

pub fn oracle_dump(ctx: &Ctx, a: &OracleDumpArgs) -> CliResult<Output> {
    let (params, rho) = build_state(a.family, &a.state)?;
    let n = params.sites;
    if n > ORACLE_MAX_SITES {
        return Err(CliError::Usage(format!(
            "the oracle supports n <= {ORACLE_MAX_SITES}, got {n}"
        )));
    }
    if !(a.epsilon > 0.0 && a.epsilon < 1.0) {
        return Err(CliError::Usage("--epsilon must lie in (0, 1)".into()));
    }
    let levels: Vec<usize> = match a.level {
        Some(k) if k == 0 || k > n => {
            return Err(CliError::Usage(format!("--level must lie in 1..={n}")))
        }
        Some(k) => vec![k],
        None => (1..n).collect(),
    };
    let target = rho.mixed_with_identity(a.epsilon);
    let config = SolverConfig::default();
    let results = levels
        .par_iter()
        .map(|&k| solve(&target, k, &config).map(|r| (k, r)))
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = ctx.report("oracle-dump");
    report.family = Some(family_name(a.family).into());
    report.n = Some(n);
    if a.family == StateFamily::Ghz2 {
        report.m = Some(params.split);
    }
    report.method = Some("oracle".into());
    report.params = params_map(a.family, &params);
    report.params.insert("epsilon".into(), json!(a.epsilon));
    report.params.insert("config".into(), json!(config));
    let mut table = Table::new(&["level", "entropy", "residual", "iterations"]);
    let mut dumps = Vec::new();
    for (k, r) in &results {
        table.push(vec![
            k.to_string(),
            format_float(r.entropy),
            format_float(r.residual),
            r.iterations.to_string(),
        ]);
        let mut entry = json!({
            "level": k,
            "entropy": r.entropy,
            "residual": r.residual,
            "iterations": r.iterations,
            "final_objective": r.objective_trace.last(),
        });
        if a.level.is_some() && *k < n {
            let basis = local_basis(n, *k)?;
            entry["dual_params"] = json!((0..basis.len())
                .map(|i| json!({
                    "support": basis.support(i),
                    "labels": basis.labels(i),
                    "value": r.dual_params[i],
                }))
                .collect::<Vec<_>>());
        }
        dumps.push(entry);
    }
    report.residuals = Some(json!(results
        .iter()
        .map(|(k, r)| (k.to_string(), r.residual))
        .collect::<BTreeMap<_, _>>()));
    report.details = Some(json!({ "levels": dumps }));
    Ok(Output {
        report,
        table,
        exit_code: 0,
    })
}
