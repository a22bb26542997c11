//! Correlation-aware belief propagation over the factor graph of a
//! preprocessed batch, plus a brute-force MAP decoder for small problems.
//!
//! Variables are source symbols (field values), checks are the rows of A'.
//! Check-to-variable messages weight each configuration by the pairwise
//! correlation-noise pmfs of the sources sharing the check, evaluated on the
//! integer difference of the source values.

mod kernels;
mod map;
mod transform;

pub use kernels::{check_messages, CheckKernel};
pub use map::{decode_map_exact, MapOracle};
pub use transform::{fwht, xor_convolution, xor_convolution_naive};

use thiserror::Error;

use crate::coding::PreprocessedBatch;
use crate::gf::FieldSpec;
use crate::model::{AlphabetMap, CorrelationGraph, ModelError};

/// Default iteration cap.
pub const DEFAULT_MAX_ITERATIONS: usize = 100;
/// Variable-to-check messages never drop below this inside the prior support.
pub const MESSAGE_FLOOR: f64 = 1e-30;

const PRIOR_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("dimension mismatch: {what} is {found}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("prior of source {source_index} is not a pmf: {reason}")]
    InvalidPrior { source_index: usize, reason: String },
    #[error("field mismatch between batch ({batch}) and source model ({model})")]
    FieldMismatch { batch: String, model: String },
    #[error("no configuration satisfies the received equations")]
    NoFeasibleConfiguration,
    #[error("exhaustive decoding of {sources} sources over GF({q}) is too large")]
    TooLarge { sources: usize, q: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Everything the decoder knows about the sources, independent of any
/// particular batch: alphabet map, per-source priors over field values and
/// the correlation weights g(F^-1[v] - F^-1[a]) of every correlated pair.
#[derive(Debug, Clone)]
pub struct SourcePrior {
    map: AlphabetMap,
    priors: Vec<Vec<f64>>,
    correlation: CorrelationGraph,
    /// `sources x sources` index into `weights`.
    weight_index: Vec<Option<usize>>,
    /// q x q tables, entry [v * q + a] = P(X_other - X_target = F^-1[v] - F^-1[a]).
    weights: Vec<Vec<f64>>,
}

impl SourcePrior {
    /// `priors[n]` is the field-indexed pmf of source n.
    pub fn new(map: AlphabetMap, priors: Vec<Vec<f64>>, correlation: CorrelationGraph) -> Result<Self, DecodeError> {
        let n = priors.len();
        let q = map.field().order();
        if correlation.sources() != n {
            return Err(DecodeError::DimensionMismatch {
                what: "correlation graph size",
                expected: n,
                found: correlation.sources(),
            });
        }
        correlation.validate_support(&map)?;
        for (i, prior) in priors.iter().enumerate() {
            let invalid = |reason: String| DecodeError::InvalidPrior { source_index: i, reason };
            if prior.len() != q {
                return Err(invalid(format!("{} entries for GF({q})", prior.len())));
            }
            if prior.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err(invalid("negative or non-finite mass".into()));
            }
            let total: f64 = prior.iter().sum();
            if (total - 1.0).abs() > PRIOR_SUM_TOLERANCE {
                return Err(invalid(format!("sums to {total}")));
            }
            if let Some(v) = (0..q).find(|&v| prior[v] > 0.0 && map.symbol_of(v as u8).is_none()) {
                return Err(invalid(format!("mass on field value {v} outside the alphabet image")));
            }
        }

        let symbols = map.symbol_table();
        let mut weight_index = vec![None; n * n];
        let mut weights = Vec::new();
        for edge in correlation.edges() {
            for (other, target) in [(edge.i, edge.j), (edge.j, edge.i)] {
                let mut table = vec![0.0; q * q];
                for (v, sv) in symbols.iter().enumerate() {
                    let Some(sv) = sv else { continue };
                    for (a, sa) in symbols.iter().enumerate() {
                        let Some(sa) = sa else { continue };
                        table[v * q + a] = correlation.diff_prob(other, target, sv - sa).unwrap_or(0.0);
                    }
                }
                weight_index[other * n + target] = Some(weights.len());
                weights.push(table);
            }
        }
        Ok(SourcePrior {
            map,
            priors,
            correlation,
            weight_index,
            weights,
        })
    }

    /// Uniform priors over the alphabet image.
    pub fn uniform(map: AlphabetMap, correlation: CorrelationGraph) -> Result<Self, DecodeError> {
        let prior = crate::model::uniform_over_image(&map);
        Self::new(map, vec![prior; correlation.sources()], correlation)
    }

    pub fn sources(&self) -> usize {
        self.priors.len()
    }

    pub fn field(&self) -> &FieldSpec {
        self.map.field()
    }

    pub fn map(&self) -> &AlphabetMap {
        &self.map
    }

    pub fn prior(&self, n: usize) -> &[f64] {
        &self.priors[n]
    }

    pub fn correlation(&self) -> &CorrelationGraph {
        &self.correlation
    }

    /// q x q weight table for (other, target), if the pair is correlated.
    #[inline]
    pub fn weights(&self, other: usize, target: usize) -> Option<&[f64]> {
        self.weight_index[other * self.sources() + target].map(|k| self.weights[k].as_slice())
    }

    /// The expected-value estimate: integer prior mean rounded half up,
    /// snapped to the alphabet and mapped into the field.
    pub fn expected_value_estimate(&self) -> Vec<u8> {
        (0..self.sources())
            .map(|n| {
                let mean: f64 = self.priors[n]
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p > 0.0)
                    .map(|(v, &p)| p * self.map.symbol_of(v as u8).expect("validated support") as f64)
                    .sum();
                let symbol = self.map.nearest_symbol((mean + 0.5).floor() as i64);
                self.map.to_field(symbol).expect("nearest symbol is in the alphabet").value()
            })
            .collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Check {
    vars: Vec<usize>,
    coeffs: Vec<u8>,
    target: u8,
    /// Offset of this check's first edge in the message arrays.
    first_edge: usize,
}

/// Bipartite graph of sources and the equations of a preprocessed batch.
#[derive(Debug, Clone)]
pub struct FactorGraph<'p> {
    prior: &'p SourcePrior,
    checks: Vec<Check>,
    /// Per variable: the edges touching it.
    var_edges: Vec<Vec<usize>>,
    /// Per edge: (check, variable).
    edges: Vec<(usize, usize)>,
}

impl<'p> FactorGraph<'p> {
    pub fn new(batch: &PreprocessedBatch, prior: &'p SourcePrior) -> Result<Self, DecodeError> {
        let a = &batch.matrix;
        if a.cols() != prior.sources() {
            return Err(DecodeError::DimensionMismatch {
                what: "batch width",
                expected: prior.sources(),
                found: a.cols(),
            });
        }
        if a.field() != prior.field() {
            return Err(DecodeError::FieldMismatch {
                batch: a.field().to_string(),
                model: prior.field().to_string(),
            });
        }
        let mut checks = Vec::with_capacity(a.rows());
        let mut var_edges = vec![Vec::new(); a.cols()];
        let mut edges = Vec::new();
        for l in 0..a.rows() {
            let first_edge = edges.len();
            let mut vars = Vec::new();
            let mut coeffs = Vec::new();
            for (n, &c) in a.row(l).iter().enumerate() {
                if c != 0 {
                    var_edges[n].push(edges.len());
                    edges.push((l, n));
                    vars.push(n);
                    coeffs.push(c);
                }
            }
            checks.push(Check {
                vars,
                coeffs,
                target: batch.y[l],
                first_edge,
            });
        }
        Ok(FactorGraph {
            prior,
            checks,
            var_edges,
            edges,
        })
    }

    pub fn prior(&self) -> &SourcePrior {
        self.prior
    }

    pub fn sources(&self) -> usize {
        self.var_edges.len()
    }

    pub fn num_checks(&self) -> usize {
        self.checks.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Variables in check `l`.
    pub fn check_vars(&self, l: usize) -> &[usize] {
        &self.checks[l].vars
    }

    /// Checks touching variable `n`.
    pub fn var_checks(&self, n: usize) -> Vec<usize> {
        self.var_edges[n].iter().map(|&e| self.edges[e].0).collect()
    }

    pub fn mean_check_degree(&self) -> f64 {
        if self.checks.is_empty() {
            return 0.0;
        }
        self.edges.len() as f64 / self.checks.len() as f64
    }

    /// Whether `x` satisfies every check.
    pub fn is_satisfied_by(&self, x: &[u8]) -> bool {
        let f = self.prior.field();
        self.checks.iter().all(|c| {
            c.vars
                .iter()
                .zip(&c.coeffs)
                .fold(0u8, |acc, (&n, &a)| acc ^ f.mul_raw(a, x[n]))
                == c.target
        })
    }

    pub(crate) fn check(&self, l: usize) -> &Check {
        &self.checks[l]
    }
}

/// Messages on every edge, each a length-q vector, stored edge-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageSet {
    q: usize,
    /// Variable to check.
    pub to_check: Vec<f64>,
    /// Check to variable.
    pub to_var: Vec<f64>,
}

impl MessageSet {
    pub fn to_check(&self, edge: usize) -> &[f64] {
        &self.to_check[edge * self.q..(edge + 1) * self.q]
    }

    pub fn to_var(&self, edge: usize) -> &[f64] {
        &self.to_var[edge * self.q..(edge + 1) * self.q]
    }
}

/// Variable-to-check messages start at the priors, check-to-variable at one.
pub fn init_messages(graph: &FactorGraph) -> MessageSet {
    let q = graph.prior.field().order();
    let mut to_check = Vec::with_capacity(graph.num_edges() * q);
    for &(_, n) in &graph.edges {
        to_check.extend_from_slice(graph.prior.prior(n));
    }
    MessageSet {
        q,
        to_check,
        to_var: vec![1.0; graph.num_edges() * q],
    }
}

/// Variable update; returns how many messages collapsed to zero and were
/// reset to the prior.
pub fn var_update(ms: &mut MessageSet, graph: &FactorGraph, prior_factor: bool) -> usize {
    let q = ms.q;
    let mut resets = 0;
    let mut prefix = vec![0.0; q];
    for (n, edges) in graph.var_edges.iter().enumerate() {
        let prior = graph.prior.prior(n);
        // out[e] = prior * prod_{e' != e} r_e', via a forward pass writing
        // prefix products and a backward pass folding in suffix products.
        prefix.copy_from_slice(prior);
        if !prior_factor {
            prefix.fill(1.0);
        }
        for &e in edges {
            let out = &mut ms.to_check[e * q..(e + 1) * q];
            out.copy_from_slice(&prefix);
            for (p, r) in prefix.iter_mut().zip(&ms.to_var[e * q..(e + 1) * q]) {
                *p *= r;
            }
        }
        let mut suffix = vec![1.0; q];
        for &e in edges.iter().rev() {
            for a in 0..q {
                ms.to_check[e * q + a] *= suffix[a];
                suffix[a] *= ms.to_var[e * q + a];
            }
            let out = &mut ms.to_check[e * q..(e + 1) * q];
            if !prior_factor && edges.len() == 1 {
                out.copy_from_slice(prior);
                continue;
            }
            if !normalize_to_check(out, prior) {
                out.copy_from_slice(prior);
                resets += 1;
            }
        }
    }
    resets
}

/// Floors the prior support at MESSAGE_FLOOR and normalizes; false if the
/// message had no mass at all.
fn normalize_to_check(msg: &mut [f64], prior: &[f64]) -> bool {
    let total: f64 = msg.iter().sum();
    if !(total > 0.0 && total.is_finite()) {
        return false;
    }
    for (m, &p) in msg.iter_mut().zip(prior) {
        *m /= total;
        if p > 0.0 && *m < MESSAGE_FLOOR {
            *m = MESSAGE_FLOOR;
        }
    }
    let total: f64 = msg.iter().sum();
    msg.iter_mut().for_each(|m| *m /= total);
    true
}

/// Check update with the given kernel; returns the number of all-zero
/// messages that were reset to all-ones.
pub fn check_update(ms: &mut MessageSet, graph: &FactorGraph, kernel: CheckKernel) -> usize {
    let q = ms.q;
    let mut resets = 0;
    for l in 0..graph.num_checks() {
        let out = check_messages(graph, ms, l, kernel);
        let first = graph.check(l).first_edge;
        for (k, mut msg) in out.into_iter().enumerate() {
            let total: f64 = msg.iter().sum();
            if total > 0.0 && total.is_finite() {
                msg.iter_mut().for_each(|m| *m /= total);
            } else {
                msg.fill(1.0);
                resets += 1;
            }
            ms.to_var[(first + k) * q..(first + k + 1) * q].copy_from_slice(&msg);
        }
    }
    resets
}

/// Per variable, the log-domain belief ln prior(a) + sum_l ln r_ln(a)
/// (prior omitted when `prior_factor` is off).
pub fn beliefs(ms: &MessageSet, graph: &FactorGraph, prior_factor: bool) -> Vec<Vec<f64>> {
    let q = ms.q;
    (0..graph.sources())
        .map(|n| {
            let mut b: Vec<f64> = if prior_factor {
                graph.prior.prior(n).iter().map(|p| p.ln()).collect()
            } else {
                vec![0.0; q]
            };
            for &e in &graph.var_edges[n] {
                for (x, r) in b.iter_mut().zip(ms.to_var(e)) {
                    *x += r.ln();
                }
            }
            b
        })
        .collect()
}

/// Argmax of each belief; ties go to the smallest field value.
pub fn tentative_decision(ms: &MessageSet, graph: &FactorGraph, prior_factor: bool) -> Vec<u8> {
    beliefs(ms, graph, prior_factor)
        .iter()
        .map(|b| {
            let mut best = 0;
            for (a, &x) in b.iter().enumerate() {
                if x > b[best] {
                    best = a;
                }
            }
            best as u8
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    pub max_iterations: usize,
    /// Multiply the prior into every variable update and into the decision.
    pub prior_factor: bool,
    pub kernel: CheckKernel,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            max_iterations: DEFAULT_MAX_ITERATIONS,
            prior_factor: true,
            kernel: CheckKernel::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeResult {
    /// Decoded field symbols.
    pub x_hat: Vec<u8>,
    /// The tentative decision satisfied every check.
    pub converged: bool,
    pub iterations: usize,
    /// The expected-value estimate was returned instead.
    pub fallback_used: bool,
    /// Messages that collapsed to zero mass and were reset.
    pub resets: usize,
}

/// Parallel-schedule decoding: each iteration runs the variable update,
/// the check update and a tentative decision, stopping once the decision
/// satisfies A' x = y'.
pub fn decode(batch: &PreprocessedBatch, prior: &SourcePrior, config: &DecoderConfig) -> Result<DecodeResult, DecodeError> {
    let graph = FactorGraph::new(batch, prior)?;
    if graph.num_checks() == 0 {
        return Ok(DecodeResult {
            x_hat: prior.expected_value_estimate(),
            converged: false,
            iterations: 0,
            fallback_used: true,
            resets: 0,
        });
    }
    let mut ms = init_messages(&graph);
    let mut resets = 0;
    for iteration in 1..=config.max_iterations {
        resets += var_update(&mut ms, &graph, config.prior_factor);
        resets += check_update(&mut ms, &graph, config.kernel);
        let x_hat = tentative_decision(&ms, &graph, config.prior_factor);
        if graph.is_satisfied_by(&x_hat) {
            return Ok(DecodeResult {
                x_hat,
                converged: true,
                iterations: iteration,
                fallback_used: false,
                resets,
            });
        }
    }
    Ok(DecodeResult {
        x_hat: prior.expected_value_estimate(),
        converged: false,
        iterations: config.max_iterations,
        fallback_used: true,
        resets,
    })
}

/// `decode` with default settings and an explicit iteration cap.
pub fn decode_bp(batch: &PreprocessedBatch, prior: &SourcePrior, max_iterations: usize) -> Result<DecodeResult, DecodeError> {
    decode(
        batch,
        prior,
        &DecoderConfig {
            max_iterations,
            ..DecoderConfig::default()
        },
    )
}

#[cfg(test)]
mod tests;
