//! Monte Carlo decoding of a Gaussian sensor field.

use rayon::prelude::*;

use corrnet_core::coding::{preprocess, random_coding_matrix, CodedBatch};
use corrnet_core::decode::{decode, DecoderConfig, SourcePrior};
use corrnet_core::gf::FieldSpec;
use corrnet_core::model::{
    lift_marginal, AlphabetMap, CorrelationGraph, GaussianSensorModel, NoisePmf, UniformQuantizer,
};

use crate::config::{ExperimentConfig, MatrixMode};
use crate::report::{Metric, ResultRow};
use crate::{fmt_param, matrix_stream, source_stream, stream_rng, with_workers, HarnessError};

/// Pairwise noise pmfs of every sensor pair, in `(i, j)` order with i < j.
pub fn pairwise_noises(model: &GaussianSensorModel) -> Result<Vec<(usize, usize, NoisePmf)>, HarnessError> {
    let n = model.sources();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    pairs
        .par_iter()
        .map(|&(i, j)| {
            model
                .pairwise_noise(i, j)
                .map(|noise| (i, j, noise))
                .map_err(|e| HarnessError::from(e).context(format!("noise of sensors ({i}, {j})")))
        })
        .collect()
}

/// Decoder-side model: bin indices mapped into GF(q), Gaussian cell
/// marginals as priors, every pair correlated.
pub fn sensor_prior(
    model: &GaussianSensorModel,
    noises: &[(usize, usize, NoisePmf)],
    field: FieldSpec,
) -> Result<SourcePrior, HarnessError> {
    let map = AlphabetMap::offset(0, model.quantizer().levels(), field)?;
    let n = model.sources();
    let mut graph = CorrelationGraph::new(n);
    for (i, j, noise) in noises {
        graph.add_edge(*i, *j, noise.clone())?;
    }
    let priors = (0..n).map(|i| lift_marginal(&model.marginal_pmf(i), &map)).collect();
    Ok(SourcePrior::new(map, priors, graph)?)
}

/// Per-L outcome (true = sequence decoded wrongly) of one trial. Each
/// trial draws one matrix with max(L) rows and decodes every prefix.
pub fn sensor_trial(
    model: &GaussianSensorModel,
    prior: &SourcePrior,
    l_values: &[usize],
    seed: u64,
    trial: usize,
    matrix_mode: MatrixMode,
    decoder: &DecoderConfig,
) -> Result<Vec<bool>, HarnessError> {
    let map = prior.map();
    let x: Vec<u8> = model
        .sample_sources(&mut stream_rng(seed, source_stream(trial)))
        .into_iter()
        .map(|k| map.field_value(k))
        .collect();
    let matrix_trial = if matrix_mode == MatrixMode::Fixed { 0 } else { trial };
    let l_max = l_values.iter().copied().max().unwrap_or(0);
    let a = random_coding_matrix(
        l_max,
        model.sources(),
        prior.field(),
        &mut stream_rng(seed, matrix_stream(matrix_trial)),
    );
    l_values
        .iter()
        .map(|&l| {
            let batch = CodedBatch::encode(a.prefix(l), &x)?;
            let result = decode(&preprocess(&batch)?, prior, decoder)?;
            Ok(result.x_hat != x)
        })
        .collect()
}

pub fn run_sensor_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    let bits = cfg
        .bits
        .ok_or_else(|| HarnessError::Invalid("sensor needs bits".into()))?;
    let quantizer = UniformQuantizer::with_default_range(bits)?;
    let decoder = DecoderConfig {
        max_iterations: cfg.max_iterations,
        prior_factor: cfg.prior_factor,
        ..DecoderConfig::default()
    };
    with_workers(cfg.workers, || {
        let mut rows = Vec::new();
        for &beta in &cfg.betas {
            // Same seed for every beta: identical layout and common random
            // numbers across the curves.
            let model = GaussianSensorModel::random(cfg.sources, beta, cfg.seed, quantizer)?;
            let noises = pairwise_noises(&model)?;
            for &q in &cfg.field_orders {
                let prior = sensor_prior(&model, &noises, FieldSpec::with_order(q)?)?;
                let outcomes: Vec<Vec<bool>> = (0..cfg.samples)
                    .into_par_iter()
                    .map(|t| sensor_trial(&model, &prior, &cfg.l_values, cfg.seed, t, cfg.matrix_mode, &decoder))
                    .collect::<Result<_, _>>()?;
                let param = format!("beta={};bits={bits}", fmt_param(beta));
                for (k, &l) in cfg.l_values.iter().enumerate() {
                    let failures = outcomes.iter().filter(|o| o[k]).count();
                    rows.push(ResultRow {
                        experiment: "sensor".into(),
                        n: cfg.sources,
                        q,
                        param: param.clone(),
                        l,
                        metric: Metric::ErrorRate,
                        value: failures as f64 / cfg.samples as f64,
                        samples: cfg.samples,
                    });
                }
            }
        }
        // Group order: field, then beta.
        rows.sort_by_key(|r| cfg.field_orders.iter().position(|&q| q == r.q));
        Ok(rows)
    })?
}
