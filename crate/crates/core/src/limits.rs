//! Large-γ behaviour of the exponential-form states.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{
    diagonal_companion, ghz1, ghz2, ms_exp_limit, ms_state, ms_vector, sigma_2, sigma_g, sigma_s,
    tau_2, Companion, FamilyParams,
};
use crate::maxent::combinations;
use crate::tensor::{max_abs_diff, trace_distance, DensityMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LimitFamily {
    /// `σ_g → D_g`.
    Ghz1,
    /// `σ_2 → D_2`.
    Ghz2Sigma,
    /// `τ_2 → B_2`.
    Ghz2Tau,
    /// `σ_s → D_s`.
    Ms,
    /// `exp(γ(Q + X)) → |S><S|`.
    MsExp,
}

/// Largest entry-wise difference over all `level`-site marginals.
pub fn marginal_residual(a: &DensityMatrix, b: &DensityMatrix, level: usize) -> Result<f64> {
    if a.sites() != b.sites() {
        return Err(Error::DimensionMismatch(a.sites(), b.sites()));
    }
    let n = a.sites();
    if level == 0 || level > n {
        return Err(Error::OutOfRange(format!("level {level} outside 1..={n}")));
    }
    let mut worst: f64 = 0.0;
    for s in combinations(n, level) {
        let d = max_abs_diff(a.partial_trace(&s)?.matrix(), b.partial_trace(&s)?.matrix());
        worst = worst.max(d);
    }
    Ok(worst)
}

/// The state family reached in the limit, the original state whose
/// marginals it shares, and at which level.
#[derive(Debug, Clone)]
pub struct LimitTarget {
    pub limit: DensityMatrix,
    pub original: DensityMatrix,
    pub level: usize,
}

pub fn limit_target(family: LimitFamily, params: &FamilyParams) -> Result<LimitTarget> {
    let n = params.sites;
    let (limit, original, level) = match family {
        LimitFamily::Ghz1 => (
            diagonal_companion(Companion::Ghz1Diagonal, params)?,
            ghz1(params)?,
            n - 1,
        ),
        LimitFamily::Ghz2Sigma => {
            if n < params.split + 2 {
                return Err(Error::OutOfRange("need n - m >= 2".into()));
            }
            (
                diagonal_companion(Companion::Ghz2Diagonal, params)?,
                ghz2(params)?,
                n - params.split - 1,
            )
        }
        LimitFamily::Ghz2Tau => (
            diagonal_companion(Companion::Ghz2Coherent, params)?,
            ghz2(params)?,
            n - 1,
        ),
        LimitFamily::Ms => (
            diagonal_companion(Companion::MsDiagonal, params)?,
            ms_state(n, params.alpha)?,
            n - 2,
        ),
        LimitFamily::MsExp => {
            let s = ms_state(n, params.alpha)?;
            (s.clone(), s, n - 1)
        }
    };
    Ok(LimitTarget {
        limit,
        original,
        level,
    })
}

pub fn limit_state(family: LimitFamily, gamma: f64, params: &FamilyParams) -> Result<DensityMatrix> {
    match family {
        LimitFamily::Ghz1 => sigma_g(gamma, params),
        LimitFamily::Ghz2Sigma => sigma_2(gamma, params),
        LimitFamily::Ghz2Tau => tau_2(gamma, params),
        LimitFamily::Ms => sigma_s(gamma, params.sites, params.alpha),
        LimitFamily::MsExp => ms_exp_limit(gamma, params.sites, params.alpha),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitRow {
    pub gamma: f64,
    /// Trace distance to the limit state.
    pub distance: f64,
    /// Marginal mismatch with the original state at the matching level.
    pub marginal_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fidelity: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitSweep {
    pub family: LimitFamily,
    pub level: usize,
    pub rows: Vec<LimitRow>,
    /// Distances never increase along increasing γ (up to 1e-12).
    pub monotone: bool,
}

pub fn limit_sweep(family: LimitFamily, params: &FamilyParams, gammas: &[f64]) -> Result<LimitSweep> {
    let target = limit_target(family, params)?;
    let psi = match family {
        LimitFamily::MsExp => Some(ms_vector(params.sites, params.alpha)?),
        _ => None,
    };
    let mut rows = Vec::with_capacity(gammas.len());
    for &gamma in gammas {
        let s = limit_state(family, gamma, params)?;
        rows.push(LimitRow {
            gamma,
            distance: trace_distance(&s, &target.limit)?,
            marginal_residual: marginal_residual(&s, &target.original, target.level)?,
            fidelity: psi.as_ref().map(|v| s.fidelity_with_pure(v)),
        });
    }
    let mut sorted: Vec<&LimitRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.gamma.total_cmp(&b.gamma));
    let monotone = sorted
        .windows(2)
        .all(|w| w[1].distance <= w[0].distance + 1e-12);
    Ok(LimitSweep {
        family,
        level: target.level,
        rows,
        monotone,
    })
}
