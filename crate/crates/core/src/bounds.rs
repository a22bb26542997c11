//! Upper bounds on the MAP decoding error probability.
//!
//! Everything is in bits. With s = 1/(1+rho), the tilted pmf is
//! f_rho = f^s / Z, and the exponent
//!
//!   E(rho) = -rho L log2 q + (1 + rho) log2 Z
//!          = -rho L log2 q + rho H_rho - D(f_rho || f)
//!
//! is convex in rho with derivative H_rho - L log2 q. Chain pmfs are handled
//! by transfer-matrix recursions so N = 30, q = 32 never touches a q^N table.

use thiserror::Error;

use crate::model::JointPmf;

/// Points of the rho grid used alongside the analytic minimizer.
pub const RHO_GRID_POINTS: usize = 101;
/// Bisection stops once the bracket on rho* is narrower than this.
pub const RHO_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("rho = {0} is outside [0, 1]")]
    InvalidRho(f64),
    #[error("delta = {0} is outside (0, 1)")]
    InvalidDelta(f64),
    #[error("field order {q} is smaller than the {symbols}-symbol source alphabet")]
    FieldTooSmall { q: usize, symbols: usize },
}

fn check_rho(rho: f64) -> Result<(), BoundsError> {
    if (0.0..=1.0).contains(&rho) {
        Ok(())
    } else {
        Err(BoundsError::InvalidRho(rho))
    }
}

fn check_field(f: &JointPmf, q: usize) -> Result<(), BoundsError> {
    if q < 2 || q < f.symbols() {
        return Err(BoundsError::FieldTooSmall { q, symbols: f.symbols() });
    }
    Ok(())
}

/// m^s with 0^s = 0, also for s = 0 (never reached: s >= 1/2).
fn pow(m: f64, s: f64) -> f64 {
    if m > 0.0 {
        m.powf(s)
    } else {
        0.0
    }
}

/// m * log2 m' that treats zero weight as contributing nothing.
fn weighted_log(weight: f64, mass: f64) -> f64 {
    if weight > 0.0 {
        weight * mass.log2()
    } else {
        0.0
    }
}

/// log2 of sum_x f(x)^(1/(1+rho)).
pub fn log_partition(f: &JointPmf, rho: f64) -> Result<f64, BoundsError> {
    check_rho(rho)?;
    if rho == 0.0 {
        // sum f = 1; skip the rounding noise.
        return Ok(0.0);
    }
    let s = 1.0 / (1.0 + rho);
    Ok(match f {
        JointPmf::Explicit { table, .. } => table.iter().map(|&m| pow(m, s)).sum::<f64>().log2(),
        JointPmf::Chain {
            sources,
            initial,
            kernel,
        } => {
            let k = initial.len();
            let tilted_kernel: Vec<f64> = kernel.iter().map(|&m| pow(m, s)).collect();
            let mut v: Vec<f64> = initial.iter().map(|&m| pow(m, s)).collect();
            let mut log_scale = 0.0;
            let mut next = vec![0.0; k];
            for _ in 1..*sources {
                let total: f64 = v.iter().sum();
                log_scale += total.log2();
                next.fill(0.0);
                for (prev, &weight) in v.iter().enumerate() {
                    if weight == 0.0 {
                        continue;
                    }
                    let row = &tilted_kernel[prev * k..(prev + 1) * k];
                    for (out, &t) in next.iter_mut().zip(row) {
                        *out += weight / total * t;
                    }
                }
                std::mem::swap(&mut v, &mut next);
            }
            log_scale + v.iter().sum::<f64>().log2()
        }
    })
}

/// Tilted-distribution statistics at one value of rho.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TiltedStats {
    pub rho: f64,
    pub log2_z: f64,
    /// Entropy of f_rho, bits.
    pub h_rho: f64,
    /// D(f_rho || f), bits.
    pub d_kl: f64,
}

/// f^(1/(1+rho)) normalized, for a pmf given as a table.
pub fn tilted_distribution(f: &[f64], rho: f64) -> Result<Vec<f64>, BoundsError> {
    check_rho(rho)?;
    let s = 1.0 / (1.0 + rho);
    let w: Vec<f64> = f.iter().map(|&m| pow(m, s)).collect();
    let z: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / z).collect())
}

pub fn tilted_stats(f: &JointPmf, rho: f64) -> Result<TiltedStats, BoundsError> {
    check_rho(rho)?;
    let s = 1.0 / (1.0 + rho);
    let log2_z = log_partition(f, rho)?;
    // Everything follows from E_rho[log2 f]:
    //   H_rho = log2 Z - s E,  D = (s - 1) E - log2 Z.
    let mean_log_f = match f {
        JointPmf::Explicit { table, .. } => {
            let tilted = tilted_distribution(table, rho)?;
            tilted.iter().zip(table).map(|(&t, &m)| weighted_log(t, m)).sum::<f64>()
        }
        JointPmf::Chain {
            sources,
            initial,
            kernel,
        } => chain_mean_log(*sources, initial, kernel, s),
    };
    Ok(TiltedStats {
        rho,
        log2_z,
        h_rho: (log2_z - s * mean_log_f).max(0.0),
        d_kl: ((s - 1.0) * mean_log_f - log2_z).max(0.0),
    })
}

/// E[log2 f(X)] under the tilted chain, from forward-backward pairwise
/// marginals.
fn chain_mean_log(sources: usize, initial: &[f64], kernel: &[f64], s: f64) -> f64 {
    let k = initial.len();
    let t: Vec<f64> = kernel.iter().map(|&m| pow(m, s)).collect();
    let normalize = |v: &mut Vec<f64>| {
        let total: f64 = v.iter().sum();
        v.iter_mut().for_each(|x| *x /= total);
    };

    let mut forward = Vec::with_capacity(sources);
    let mut alpha: Vec<f64> = initial.iter().map(|&m| pow(m, s)).collect();
    normalize(&mut alpha);
    forward.push(alpha.clone());
    for _ in 1..sources {
        let mut next = vec![0.0; k];
        for (a, &w) in alpha.iter().enumerate() {
            for (b, out) in next.iter_mut().enumerate() {
                *out += w * t[a * k + b];
            }
        }
        normalize(&mut next);
        forward.push(next.clone());
        alpha = next;
    }

    let mut beta = vec![1.0 / k as f64; k];
    let mut total = 0.0;
    for i in (1..sources).rev() {
        let prev = &forward[i - 1];
        let mut pair_mass = 0.0;
        let mut pair_log = 0.0;
        for a in 0..k {
            for b in 0..k {
                let w = prev[a] * t[a * k + b] * beta[b];
                pair_mass += w;
                pair_log += weighted_log(w, kernel[a * k + b]);
            }
        }
        total += pair_log / pair_mass;
        let mut next = vec![0.0; k];
        for (a, out) in next.iter_mut().enumerate() {
            *out = (0..k).map(|b| t[a * k + b] * beta[b]).sum();
        }
        normalize(&mut next);
        beta = next;
    }
    // forward[0] * beta is the tilted marginal of X_1.
    let first: Vec<f64> = forward[0].iter().zip(&beta).map(|(a, b)| a * b).collect();
    let z: f64 = first.iter().sum();
    total + first.iter().zip(initial).map(|(&w, &m)| weighted_log(w / z, m)).sum::<f64>()
}

/// E(rho) for L received symbols over GF(q).
pub fn exponent(f: &JointPmf, q: usize, l: usize, rho: f64) -> Result<f64, BoundsError> {
    check_field(f, q)?;
    Ok(-rho * l as f64 * (q as f64).log2() + (1.0 + rho) * log_partition(f, rho)?)
}

/// E(rho) through the entropy / divergence form.
pub fn exponent_from_stats(stats: &TiltedStats, q: usize, l: usize) -> f64 {
    -stats.rho * l as f64 * (q as f64).log2() + stats.rho * stats.h_rho - stats.d_kl
}

/// Which side of the stationarity condition L log2 q = H_rho we are on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// L log2 q < H(X): the bound is the trivial 1.
    Trivial,
    /// L log2 q > H_1: minimized at rho = 1.
    RhoOne,
    /// Stationary point inside [0, 1].
    Interior,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Trivial => "trivial",
            Regime::RhoOne => "rho_one",
            Regime::Interior => "interior",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub l: usize,
    pub q: usize,
    pub n: usize,
    pub regime: Regime,
    pub rho_star: f64,
    /// log2 of the bound before clamping.
    pub log2_bound: f64,
    /// min(1, 2^log2_bound).
    pub bound: f64,
    /// |H_rho* - L log2 q| in the interior regime.
    pub stationarity_residual: Option<f64>,
}

/// Upper bound on the MAP error probability with L symbols over GF(q).
pub fn upper_bound(f: &JointPmf, q: usize, l: usize) -> Result<BoundReport, BoundsError> {
    check_field(f, q)?;
    let rate = l as f64 * (q as f64).log2();
    let h0 = tilted_stats(f, 0.0)?.h_rho;
    let h1 = tilted_stats(f, 1.0)?.h_rho;

    let (regime, mut rho_star, mut log2_bound, residual) = if rate < h0 {
        (Regime::Trivial, 0.0, 0.0, None)
    } else if rate > h1 {
        (Regime::RhoOne, 1.0, exponent(f, q, l, 1.0)?, None)
    } else {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > RHO_TOLERANCE {
            let mid = 0.5 * (lo + hi);
            if tilted_stats(f, mid)?.h_rho < rate {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let rho = 0.5 * (lo + hi);
        let stats = tilted_stats(f, rho)?;
        (
            Regime::Interior,
            rho,
            exponent(f, q, l, rho)?,
            Some((stats.h_rho - rate).abs()),
        )
    };

    // Guard against numerical edge cases with a plain grid search.
    for k in 0..RHO_GRID_POINTS {
        let rho = k as f64 / (RHO_GRID_POINTS - 1) as f64;
        let e = exponent(f, q, l, rho)?;
        if e < log2_bound {
            log2_bound = e;
            rho_star = rho;
        }
    }
    Ok(BoundReport {
        l,
        q,
        n: f.sources(),
        regime,
        rho_star,
        log2_bound,
        bound: log2_bound.exp2().min(1.0),
        stationarity_residual: residual,
    })
}

/// Sufficient number of symbols for error probability at most delta.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolRequirement {
    pub delta: f64,
    /// Smallest right-hand side over the rho grid.
    pub min_l_over_n: f64,
    pub rho_star: f64,
    /// (rho, required L/N) for rho = 1/100, ..., 1.
    pub curve: Vec<(f64, f64)>,
}

impl SymbolRequirement {
    /// The smallest integer L meeting the requirement.
    pub fn min_l(&self, n: usize) -> usize {
        // Guard against 30.000000000000004 style round-up.
        (self.min_l_over_n * n as f64 - 1e-9).ceil().max(0.0) as usize
    }
}

/// Sufficient L/N for P_e <= delta, minimized over rho in
/// (0, 1]. Uses rho H_rho - D = (1 + rho) log2 Z for the numerator.
pub fn min_symbols(f: &JointPmf, q: usize, delta: f64) -> Result<SymbolRequirement, BoundsError> {
    check_field(f, q)?;
    if !(delta > 0.0 && delta < 1.0) {
        return Err(BoundsError::InvalidDelta(delta));
    }
    let scale = f.sources() as f64 * (q as f64).log2();
    let steps = RHO_GRID_POINTS - 1;
    let mut curve = Vec::with_capacity(steps);
    for k in 1..=steps {
        let rho = k as f64 / steps as f64;
        let numerator = -delta.log2() + (1.0 + rho) * log_partition(f, rho)?;
        curve.push((rho, numerator / (rho * scale)));
    }
    let &(rho_star, min_l_over_n) = curve
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    Ok(SymbolRequirement {
        delta,
        min_l_over_n,
        rho_star,
        curve,
    })
}
