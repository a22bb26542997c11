//! Bound sweeps over the chain-Laplacian source.

use rayon::prelude::*;

use corrnet_core::bounds::{min_symbols, upper_bound, Regime};
use corrnet_core::model::chain_laplacian_model;

use crate::config::ExperimentConfig;
use crate::report::{Metric, ResultRow};
use crate::{fmt_param, with_workers, HarnessError};

fn regime_code(regime: Regime) -> f64 {
    match regime {
        Regime::Trivial => 0.0,
        Regime::Interior => 1.0,
        Regime::RhoOne => 2.0,
    }
}

/// For every (q, p): the error bound at each L, then the minimal L/N at
/// each delta. A field larger than the alphabet gives the lifted variant.
pub fn run_bound_sweep(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    let alphabet = cfg.resolved_alphabet();
    let n = cfg.sources;
    let groups: Vec<(usize, f64)> = cfg
        .field_orders
        .iter()
        .flat_map(|&q| cfg.p_values.iter().map(move |&p| (q, p)))
        .collect();

    let per_group = with_workers(cfg.workers, || {
        groups
            .par_iter()
            .map(|&(q, p)| -> Result<Vec<ResultRow>, HarnessError> {
                let f = chain_laplacian_model(n, p, alphabet)?;
                let param = format!("p={};alphabet={alphabet}", fmt_param(p));
                let row = |l: usize, metric: Metric, value: f64, param: &str| ResultRow {
                    experiment: "bound_sweep".into(),
                    n,
                    q,
                    param: param.to_owned(),
                    l,
                    metric,
                    value,
                    samples: 0,
                };
                let mut rows = Vec::new();
                for &l in &cfg.l_values {
                    let report = upper_bound(&f, q, l)
                        .map_err(|e| HarnessError::from(e).context(format!("bound at q={q}, p={p}, L={l}")))?;
                    rows.push(row(l, Metric::Bound, report.bound, &param));
                    rows.push(row(l, Metric::Log2Bound, report.log2_bound, &param));
                    rows.push(row(l, Metric::RhoStar, report.rho_star, &param));
                    rows.push(row(l, Metric::Regime, regime_code(report.regime), &param));
                }
                for &delta in &cfg.deltas {
                    let req = min_symbols(&f, q, delta)?;
                    let param = format!("{param};delta={}", fmt_param(delta));
                    rows.push(row(req.min_l(n), Metric::MinLOverN, req.min_l_over_n, &param));
                }
                Ok(rows)
            })
            .collect::<Vec<_>>()
    })?;
    let mut rows = Vec::new();
    for group in per_group {
        rows.extend(group?);
    }
    Ok(rows)
}
