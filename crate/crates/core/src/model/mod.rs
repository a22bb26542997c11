//! Source statistics: alphabets and their field mapping, joint pmfs, and the
//! pairwise correlation-noise pmfs the decoder consumes.

mod gaussian;
mod quadrature;

pub use gaussian::{GaussianSensorModel, UniformQuantizer, DEFAULT_RANGE_SIGMAS};

use rand::Rng;
use thiserror::Error;

use crate::gf::{FieldElement, FieldSpec, GfError};

/// Explicit joint tables are limited to this many bits of state.
pub const MAX_EXPLICIT_STATE_BITS: f64 = 24.0;

const TABLE_SUM_TOLERANCE: f64 = 1e-12;
const NOISE_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("symbol {0} is not in the source alphabet")]
    NotInAlphabet(i64),
    #[error("field value {0} has no preimage in the source alphabet")]
    NotInImage(u8),
    #[error("invalid alphabet: {0}")]
    InvalidAlphabet(String),
    #[error("invalid pmf: {0}")]
    InvalidPmf(String),
    #[error("parameter {name} = {value} outside {expected}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },
    #[error("joint table over {sources} sources of {symbols} symbols exceeds the explicit-table limit")]
    TooLarge { sources: usize, symbols: usize },
    #[error("invalid correlation edge ({i}, {j}): {reason}")]
    InvalidEdge { i: usize, j: usize, reason: String },
    #[error("covariance matrix is not positive definite even after jitter")]
    NotPositiveDefinite,
    #[error("quadrature did not converge on [{lo}, {hi}] (estimate {estimate:e}, error {error:e})")]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error: f64,
    },
    #[error(transparent)]
    Field(#[from] GfError),
}

fn shannon_bits(masses: impl IntoIterator<Item = f64>) -> f64 {
    masses
        .into_iter()
        .filter(|&m| m > 0.0)
        .map(|m| -m * m.log2())
        .sum()
}

/// Bijection between an integer source alphabet and a subset of GF(q).
#[derive(Debug, Clone)]
pub struct AlphabetMap {
    alphabet: Vec<i64>,
    forward: Vec<u8>,
    inverse: Vec<Option<usize>>,
    field: FieldSpec,
}

impl AlphabetMap {
    /// `alphabet[i]` maps to field value `forward[i]`.
    pub fn new(alphabet: Vec<i64>, forward: Vec<u8>, field: FieldSpec) -> Result<Self, ModelError> {
        if alphabet.is_empty() {
            return Err(ModelError::InvalidAlphabet("empty alphabet".into()));
        }
        if alphabet.len() != forward.len() {
            return Err(ModelError::InvalidAlphabet(format!(
                "{} symbols but {} images",
                alphabet.len(),
                forward.len()
            )));
        }
        if alphabet.len() > field.order() {
            return Err(ModelError::InvalidAlphabet(format!(
                "{} symbols do not fit in {field}",
                alphabet.len()
            )));
        }
        let mut sorted = alphabet.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(ModelError::InvalidAlphabet("repeated symbol".into()));
        }
        let mut inverse = vec![None; field.order()];
        for (i, &v) in forward.iter().enumerate() {
            let slot = inverse
                .get_mut(v as usize)
                .ok_or(GfError::OutOfRange { value: v as u32, q: field.order() })?;
            if slot.replace(i).is_some() {
                return Err(ModelError::InvalidAlphabet(format!("field value {v} used twice")));
            }
        }
        Ok(AlphabetMap {
            alphabet,
            forward,
            inverse,
            field,
        })
    }

    /// Alphabet {0, ..., q-1} mapped onto itself.
    pub fn identity(field: FieldSpec) -> Self {
        let q = field.order();
        Self::offset(0, q, field).expect("identity map always fits")
    }

    /// Alphabet {min, ..., min+size-1} with x mapped to x - min.
    pub fn offset(min: i64, size: usize, field: FieldSpec) -> Result<Self, ModelError> {
        let alphabet = (0..size as i64).map(|k| min + k).collect();
        let forward = (0..size).map(|k| k as u8).collect();
        Self::new(alphabet, forward, field)
    }

    pub fn field(&self) -> &FieldSpec {
        &self.field
    }

    pub fn alphabet(&self) -> &[i64] {
        &self.alphabet
    }

    pub fn len(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphabet.is_empty()
    }

    pub fn min_symbol(&self) -> i64 {
        *self.alphabet.iter().min().expect("alphabet is nonempty")
    }

    pub fn max_symbol(&self) -> i64 {
        *self.alphabet.iter().max().expect("alphabet is nonempty")
    }

    pub fn to_field(&self, x: i64) -> Result<FieldElement, ModelError> {
        let index = self.index_of(x)?;
        Ok(self.field.element(self.forward[index] as u32)?)
    }

    pub fn from_field(&self, x: FieldElement) -> Result<i64, ModelError> {
        if x.tag() != self.field.tag() {
            return Err(GfError::FieldMismatch {
                left: self.field.tag(),
                right: x.tag(),
            }
            .into());
        }
        self.symbol_of(x.value()).ok_or(ModelError::NotInImage(x.value()))
    }

    pub fn index_of(&self, x: i64) -> Result<usize, ModelError> {
        self.alphabet
            .iter()
            .position(|&a| a == x)
            .ok_or(ModelError::NotInAlphabet(x))
    }

    /// Field image of the symbol at alphabet position `index`.
    pub fn field_value(&self, index: usize) -> u8 {
        self.forward[index]
    }

    /// Alphabet position of a field value, if it lies in the image.
    pub fn index_of_field(&self, value: u8) -> Option<usize> {
        self.inverse.get(value as usize).copied().flatten()
    }

    /// Integer symbol of a field value, if it lies in the image.
    pub fn symbol_of(&self, value: u8) -> Option<i64> {
        self.index_of_field(value).map(|i| self.alphabet[i])
    }

    /// Field-indexed table of integer symbols (`None` outside the image).
    pub fn symbol_table(&self) -> Vec<Option<i64>> {
        (0..self.field.order()).map(|v| self.symbol_of(v as u8)).collect()
    }

    /// The alphabet symbol nearest to `x`, ties resolved toward the smaller.
    pub fn nearest_symbol(&self, x: i64) -> i64 {
        *self
            .alphabet
            .iter()
            .min_by_key(|&&a| ((a - x).abs(), a))
            .expect("alphabet is nonempty")
    }
}

/// Joint pmf of N sources over a common alphabet of `symbols` entries,
/// indexed by alphabet position.
#[derive(Debug, Clone)]
pub enum JointPmf {
    /// Table over all configurations, source 0 most significant.
    Explicit {
        sources: usize,
        symbols: usize,
        table: Vec<f64>,
    },
    /// f(x) = initial(x_1) * prod_i kernel[x_{i-1}][x_i].
    Chain {
        sources: usize,
        initial: Vec<f64>,
        /// Row-major `symbols x symbols`, row = previous symbol.
        kernel: Vec<f64>,
    },
}

fn state_bits(sources: usize, symbols: usize) -> f64 {
    sources as f64 * (symbols as f64).log2()
}

fn check_masses(name: &str, masses: &[f64], tol: f64) -> Result<(), ModelError> {
    if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(ModelError::InvalidPmf(format!("{name} has a negative or non-finite mass")));
    }
    let total: f64 = masses.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(ModelError::InvalidPmf(format!("{name} sums to {total}")));
    }
    Ok(())
}

fn sample_index<R: Rng + ?Sized>(masses: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, &m) in masses.iter().enumerate() {
        acc += m;
        if u < acc {
            return i;
        }
    }
    masses.iter().rposition(|&m| m > 0.0).unwrap_or(0)
}

impl JointPmf {
    pub fn explicit(sources: usize, symbols: usize, table: Vec<f64>) -> Result<Self, ModelError> {
        if sources == 0 || symbols == 0 {
            return Err(ModelError::InvalidPmf("empty support".into()));
        }
        if state_bits(sources, symbols) > MAX_EXPLICIT_STATE_BITS {
            return Err(ModelError::TooLarge { sources, symbols });
        }
        let expected = symbols.pow(sources as u32);
        if table.len() != expected {
            return Err(ModelError::InvalidPmf(format!(
                "table has {} entries, expected {expected}",
                table.len()
            )));
        }
        check_masses("joint table", &table, TABLE_SUM_TOLERANCE)?;
        Ok(JointPmf::Explicit {
            sources,
            symbols,
            table,
        })
    }

    /// Independent sources with identical marginal `marginal`.
    pub fn independent(sources: usize, marginal: &[f64]) -> Result<Self, ModelError> {
        let k = marginal.len();
        let kernel = marginal.repeat(k);
        Self::chain(sources, marginal.to_vec(), kernel)
    }

    pub fn chain(sources: usize, initial: Vec<f64>, kernel: Vec<f64>) -> Result<Self, ModelError> {
        let symbols = initial.len();
        if sources == 0 || symbols == 0 {
            return Err(ModelError::InvalidPmf("empty support".into()));
        }
        if kernel.len() != symbols * symbols {
            return Err(ModelError::InvalidPmf("kernel is not square".into()));
        }
        check_masses("initial pmf", &initial, TABLE_SUM_TOLERANCE)?;
        for (row_index, row) in kernel.chunks(symbols).enumerate() {
            check_masses(&format!("kernel row {row_index}"), row, TABLE_SUM_TOLERANCE)?;
        }
        Ok(JointPmf::Chain {
            sources,
            initial,
            kernel,
        })
    }

    pub fn sources(&self) -> usize {
        match self {
            JointPmf::Explicit { sources, .. } | JointPmf::Chain { sources, .. } => *sources,
        }
    }

    pub fn symbols(&self) -> usize {
        match self {
            JointPmf::Explicit { symbols, .. } => *symbols,
            JointPmf::Chain { initial, .. } => initial.len(),
        }
    }

    /// Whether the full table fits the explicit-table limit.
    pub fn is_enumerable(&self) -> bool {
        state_bits(self.sources(), self.symbols()) <= MAX_EXPLICIT_STATE_BITS
    }

    /// Probability of a configuration given by alphabet positions.
    pub fn prob(&self, x: &[usize]) -> f64 {
        assert_eq!(x.len(), self.sources(), "configuration length");
        match self {
            JointPmf::Explicit { symbols, table, .. } => {
                let index = x.iter().fold(0, |acc, &v| acc * symbols + v);
                table[index]
            }
            JointPmf::Chain { initial, kernel, .. } => {
                let k = initial.len();
                x.windows(2)
                    .fold(initial[x[0]], |acc, w| acc * kernel[w[0] * k + w[1]])
            }
        }
    }

    /// Full table, source 0 most significant.
    pub fn to_table(&self) -> Result<Vec<f64>, ModelError> {
        match self {
            JointPmf::Explicit { table, .. } => Ok(table.clone()),
            JointPmf::Chain { .. } => {
                let (n, k) = (self.sources(), self.symbols());
                if !self.is_enumerable() {
                    return Err(ModelError::TooLarge {
                        sources: n,
                        symbols: k,
                    });
                }
                let mut config = vec![0usize; n];
                let total = k.pow(n as u32);
                let mut table = Vec::with_capacity(total);
                for mut index in 0..total {
                    for slot in config.iter_mut().rev() {
                        *slot = index % k;
                        index /= k;
                    }
                    table.push(self.prob(&config));
                }
                Ok(table)
            }
        }
    }

    /// Marginal pmf of source `i`.
    pub fn marginal(&self, i: usize) -> Vec<f64> {
        let (n, k) = (self.sources(), self.symbols());
        assert!(i < n, "source index out of range");
        match self {
            JointPmf::Explicit { table, .. } => {
                let stride = k.pow((n - 1 - i) as u32);
                let mut out = vec![0.0; k];
                for (index, &m) in table.iter().enumerate() {
                    out[(index / stride) % k] += m;
                }
                out
            }
            JointPmf::Chain {
                initial, kernel, ..
            } => {
                let mut v = initial.clone();
                for _ in 0..i {
                    let mut next = vec![0.0; k];
                    for (prev, &mass) in v.iter().enumerate() {
                        for (cur, slot) in next.iter_mut().enumerate() {
                            *slot += mass * kernel[prev * k + cur];
                        }
                    }
                    v = next;
                }
                v
            }
        }
    }

    /// Joint entropy H(X) in bits.
    pub fn entropy_bits(&self) -> f64 {
        match self {
            JointPmf::Explicit { table, .. } => shannon_bits(table.iter().copied()),
            JointPmf::Chain {
                initial, kernel, ..
            } => {
                let k = initial.len();
                let mut total = shannon_bits(initial.iter().copied());
                let mut marginal = initial.clone();
                for _ in 1..self.sources() {
                    let mut next = vec![0.0; k];
                    for (prev, &mass) in marginal.iter().enumerate() {
                        let row = &kernel[prev * k..(prev + 1) * k];
                        total += mass * shannon_bits(row.iter().copied());
                        for (slot, &t) in next.iter_mut().zip(row) {
                            *slot += mass * t;
                        }
                    }
                    marginal = next;
                }
                total
            }
        }
    }

    /// Draws one configuration of alphabet positions.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        match self {
            JointPmf::Explicit {
                sources,
                symbols,
                table,
            } => {
                let mut index = sample_index(table, rng);
                let mut out = vec![0; *sources];
                for slot in out.iter_mut().rev() {
                    *slot = index % symbols;
                    index /= symbols;
                }
                out
            }
            JointPmf::Chain {
                sources,
                initial,
                kernel,
            } => {
                let k = initial.len();
                let mut out = Vec::with_capacity(*sources);
                out.push(sample_index(initial, rng));
                for _ in 1..*sources {
                    let prev = *out.last().expect("nonempty");
                    out.push(sample_index(&kernel[prev * k..(prev + 1) * k], rng));
                }
                out
            }
        }
    }
}

/// A joint pmf carried over to GF(q): marginals always, the joint table only
/// when small enough to enumerate.
#[derive(Debug, Clone)]
pub struct LiftedPmf {
    pub field_order: usize,
    /// Field-indexed marginal of each source.
    pub marginals: Vec<Vec<f64>>,
    /// Field-indexed joint table, source 0 most significant.
    pub joint: Option<Vec<f64>>,
}

/// Moves `f` onto field values: mass of f at mapped points, zero elsewhere.
pub fn lift_pmf(f: &JointPmf, map: &AlphabetMap) -> Result<LiftedPmf, ModelError> {
    if f.symbols() != map.len() {
        return Err(ModelError::InvalidPmf(format!(
            "pmf has {} symbols but the alphabet has {}",
            f.symbols(),
            map.len()
        )));
    }
    let q = map.field().order();
    let n = f.sources();
    let marginals = (0..n)
        .map(|i| lift_marginal(&f.marginal(i), map))
        .collect();
    let joint = if state_bits(n, q) <= MAX_EXPLICIT_STATE_BITS {
        let source_table = f.to_table()?;
        let k = f.symbols();
        let mut out = vec![0.0; q.pow(n as u32)];
        for (index, &mass) in source_table.iter().enumerate() {
            let mut rest = index;
            let mut target = 0;
            let mut weight = 1;
            for _ in 0..n {
                target += map.field_value(rest % k) as usize * weight;
                rest /= k;
                weight *= q;
            }
            out[target] = mass;
        }
        Some(out)
    } else {
        None
    };
    Ok(LiftedPmf {
        field_order: q,
        marginals,
        joint,
    })
}

/// Field-indexed copy of an alphabet-indexed marginal.
pub fn lift_marginal(marginal: &[f64], map: &AlphabetMap) -> Vec<f64> {
    let mut out = vec![0.0; map.field().order()];
    for (index, &mass) in marginal.iter().enumerate() {
        out[map.field_value(index) as usize] = mass;
    }
    out
}

/// Uniform pmf over the image of `map`, field-indexed.
pub fn uniform_over_image(map: &AlphabetMap) -> Vec<f64> {
    lift_marginal(&vec![1.0 / map.len() as f64; map.len()], map)
}

/// Entropy of a pmf in bits.
pub fn entropy_bits(pmf: &[f64]) -> f64 {
    shannon_bits(pmf.iter().copied())
}

/// Pmf over integer differences, stored from `offset` upward.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisePmf {
    offset: i64,
    mass: Vec<f64>,
}

impl NoisePmf {
    pub fn new(offset: i64, mass: Vec<f64>) -> Result<Self, ModelError> {
        if mass.is_empty() {
            return Err(ModelError::InvalidPmf("empty noise pmf".into()));
        }
        check_masses("noise pmf", &mass, NOISE_SUM_TOLERANCE)?;
        Ok(NoisePmf { offset, mass })
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn min_diff(&self) -> i64 {
        self.offset
    }

    pub fn max_diff(&self) -> i64 {
        self.offset + self.mass.len() as i64 - 1
    }

    #[inline]
    pub fn prob(&self, w: i64) -> f64 {
        let i = w - self.offset;
        if i < 0 {
            return 0.0;
        }
        self.mass.get(i as usize).copied().unwrap_or(0.0)
    }

    /// Pmf of -W.
    pub fn reversed(&self) -> NoisePmf {
        let mut mass = self.mass.clone();
        mass.reverse();
        NoisePmf {
            offset: -self.max_diff(),
            mass,
        }
    }
}

/// Untruncated two-sided geometric mass ((1-p)/(1+p)) p^|w|.
pub fn laplacian_mass(p: f64, w: i64) -> f64 {
    (1.0 - p) / (1.0 + p) * p.powi(w.unsigned_abs() as i32)
}

fn check_open_unit(name: &'static str, p: f64) -> Result<(), ModelError> {
    if !(p > 0.0 && p < 1.0) {
        return Err(ModelError::InvalidParameter {
            name,
            value: p,
            expected: "(0, 1)",
        });
    }
    Ok(())
}

/// Zero-mean discrete Laplacian on |w| <= radius, renormalized.
pub fn laplacian_noise_pmf(p: f64, radius: u32) -> Result<NoisePmf, ModelError> {
    check_open_unit("p_m", p)?;
    let r = radius as i64;
    let raw: Vec<f64> = (-r..=r).map(|w| laplacian_mass(p, w)).collect();
    let total: f64 = raw.iter().sum();
    NoisePmf::new(-r, raw.into_iter().map(|m| m / total).collect())
}

/// Maximum-likelihood Laplacian parameter for observed differences, using
/// the untruncated mass. The stationary point of the log-likelihood solves
/// S p^2 + 2 n p - S = 0 with S = sum |w|.
pub fn fit_laplacian_parameter(diffs: impl IntoIterator<Item = i64>) -> f64 {
    const FLOOR: f64 = 1e-6;
    const CEIL: f64 = 1.0 - 1e-6;
    let (count, abs_sum) = diffs
        .into_iter()
        .fold((0u64, 0u64), |(n, s), w| (n + 1, s + w.unsigned_abs()));
    if count == 0 || abs_sum == 0 {
        return FLOOR;
    }
    let (n, s) = (count as f64, abs_sum as f64);
    let p = (-n + (n * n + s * s).sqrt()) / s;
    p.clamp(FLOOR, CEIL)
}

/// Chain source with X_1 uniform and a shifted, truncated discrete
/// Laplacian kernel on {0, ..., q-1}.
pub fn chain_laplacian_model(sources: usize, p: f64, q: usize) -> Result<JointPmf, ModelError> {
    check_open_unit("p", p)?;
    if q < 2 {
        return Err(ModelError::InvalidParameter {
            name: "q",
            value: q as f64,
            expected: "q >= 2",
        });
    }
    if sources == 0 {
        return Err(ModelError::InvalidParameter {
            name: "sources",
            value: 0.0,
            expected: "at least one source",
        });
    }
    let mut kernel = Vec::with_capacity(q * q);
    for prev in 0..q as i64 {
        let row: Vec<f64> = (0..q as i64).map(|x| laplacian_mass(p, x - prev)).collect();
        let k: f64 = row.iter().sum();
        kernel.extend(row.into_iter().map(|m| m / k));
    }
    JointPmf::chain(sources, vec![1.0 / q as f64; q], kernel)
}

#[derive(Debug, Clone)]
pub struct CorrelationEdge {
    pub i: usize,
    pub j: usize,
    /// Pmf of X_i - X_j.
    pub noise: NoisePmf,
}

/// Undirected graph of correlated source pairs.
#[derive(Debug, Clone)]
pub struct CorrelationGraph {
    sources: usize,
    edges: Vec<CorrelationEdge>,
    /// Dense `sources x sources` lookup into `edges`.
    lookup: Vec<Option<u32>>,
}

impl CorrelationGraph {
    pub fn new(sources: usize) -> Self {
        CorrelationGraph {
            sources,
            edges: Vec::new(),
            lookup: vec![None; sources * sources],
        }
    }

    /// Graph with the same noise pmf on every pair within `window` positions
    /// of each other (`window >= sources` gives the complete graph).
    pub fn windowed(sources: usize, window: usize, noise: impl Fn(usize, usize) -> NoisePmf) -> Result<Self, ModelError> {
        let mut graph = Self::new(sources);
        for i in 0..sources {
            for j in i + 1..sources.min(i + window) {
                graph.add_edge(i, j, noise(i, j))?;
            }
        }
        Ok(graph)
    }

    pub fn sources(&self) -> usize {
        self.sources
    }

    pub fn edges(&self) -> &[CorrelationEdge] {
        &self.edges
    }

    /// Adds an edge carrying the pmf of X_i - X_j.
    pub fn add_edge(&mut self, i: usize, j: usize, noise: NoisePmf) -> Result<(), ModelError> {
        let invalid = |reason: &str| ModelError::InvalidEdge {
            i,
            j,
            reason: reason.into(),
        };
        if i >= self.sources || j >= self.sources {
            return Err(invalid("source index out of range"));
        }
        if i == j {
            return Err(invalid("self loop"));
        }
        let (lo, hi, noise) = if i < j { (i, j, noise) } else { (j, i, noise.reversed()) };
        if self.lookup[lo * self.sources + hi].is_some() {
            return Err(invalid("duplicate edge"));
        }
        let id = self.edges.len() as u32;
        self.lookup[lo * self.sources + hi] = Some(id);
        self.lookup[hi * self.sources + lo] = Some(id);
        self.edges.push(CorrelationEdge { i: lo, j: hi, noise });
        Ok(())
    }

    pub fn are_correlated(&self, a: usize, b: usize) -> bool {
        self.lookup[a * self.sources + b].is_some()
    }

    /// P(X_a - X_b = w), or `None` for an uncorrelated pair.
    #[inline]
    pub fn diff_prob(&self, a: usize, b: usize, w: i64) -> Option<f64> {
        let edge = &self.edges[self.lookup[a * self.sources + b]? as usize];
        Some(if edge.i == a { edge.noise.prob(w) } else { edge.noise.prob(-w) })
    }

    /// Checks every edge pmf against the feasible difference range of `map`.
    pub fn validate_support(&self, map: &AlphabetMap) -> Result<(), ModelError> {
        let span = map.max_symbol() - map.min_symbol();
        for e in &self.edges {
            let outside = e
                .noise
                .masses()
                .iter()
                .enumerate()
                .any(|(k, &m)| m > 0.0 && (e.noise.offset() + k as i64).abs() > span);
            if outside {
                return Err(ModelError::InvalidEdge {
                    i: e.i,
                    j: e.j,
                    reason: format!("support exceeds the feasible range +-{span}"),
                });
            }
        }
        Ok(())
    }
}
