//! Spatially correlated Gaussian sensor field with a uniform quantizer.
//!
//! Sensors sit at uniform-random points in the unit square; the readings are
//! jointly normal with unit variances and correlation exp(-beta * distance).
//! Quantized symbols are bin indices {0, ..., 2^bits - 1}.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::quadrature::{integrate, Unconverged};
use super::{ModelError, NoisePmf};

/// Quantizer half-range in standard deviations.
pub const DEFAULT_RANGE_SIGMAS: f64 = 4.0;

/// Cells extending to infinity are integrated out to this many standard
/// deviations.
const TAIL_LIMIT: f64 = 12.0;

const QUAD_REL_TOL: f64 = 1e-6;
const QUAD_ABS_TOL: f64 = 1e-13;
const CHOLESKY_JITTER: f64 = 1e-10;
const NOISE_SUM_TOLERANCE: f64 = 1e-6;

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Uniform quantizer with 2^bits bins over [-range, range]; samples outside
/// the range clamp to the outer bins.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformQuantizer {
    bits: u32,
    range: f64,
}

impl UniformQuantizer {
    pub fn new(bits: u32, range: f64) -> Result<Self, ModelError> {
        if !(1..=8).contains(&bits) {
            return Err(ModelError::InvalidParameter {
                name: "bits",
                value: bits as f64,
                expected: "1..=8",
            });
        }
        if !(range.is_finite() && range > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "range",
                value: range,
                expected: "a finite positive value",
            });
        }
        Ok(UniformQuantizer { bits, range })
    }

    /// Quantizer over +-4 standard deviations of a unit-variance source.
    pub fn with_default_range(bits: u32) -> Result<Self, ModelError> {
        Self::new(bits, DEFAULT_RANGE_SIGMAS)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn levels(&self) -> usize {
        1 << self.bits
    }

    pub fn bin_width(&self) -> f64 {
        2.0 * self.range / self.levels() as f64
    }

    pub fn quantize(&self, s: f64) -> usize {
        let raw = ((s + self.range) / self.bin_width()).floor();
        raw.clamp(0.0, (self.levels() - 1) as f64) as usize
    }

    pub fn bin_center(&self, index: usize) -> f64 {
        -self.range + (index as f64 + 0.5) * self.bin_width()
    }

    /// Preimage of a bin; the outer bins are unbounded.
    pub fn cell(&self, index: usize) -> (f64, f64) {
        let lo = if index == 0 {
            f64::NEG_INFINITY
        } else {
            -self.range + index as f64 * self.bin_width()
        };
        let hi = if index + 1 == self.levels() {
            f64::INFINITY
        } else {
            -self.range + (index + 1) as f64 * self.bin_width()
        };
        (lo, hi)
    }
}

#[derive(Debug, Clone)]
pub struct GaussianSensorModel {
    positions: Vec<[f64; 2]>,
    beta: f64,
    /// Row-major N x N.
    covariance: Vec<f64>,
    /// Lower-triangular Cholesky factor, row-major.
    cholesky: Vec<f64>,
    jitter: f64,
    quantizer: UniformQuantizer,
}

impl GaussianSensorModel {
    /// `sources` sensors placed uniformly at random in the unit square.
    pub fn random(sources: usize, beta: f64, seed: u64, quantizer: UniformQuantizer) -> Result<Self, ModelError> {
        if sources < 2 {
            return Err(ModelError::InvalidParameter {
                name: "sources",
                value: sources as f64,
                expected: "at least 2",
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let positions = (0..sources)
            .map(|_| [rng.random::<f64>(), rng.random::<f64>()])
            .collect();
        Self::from_positions(positions, beta, quantizer)
    }

    pub fn from_positions(positions: Vec<[f64; 2]>, beta: f64, quantizer: UniformQuantizer) -> Result<Self, ModelError> {
        if !(beta.is_finite() && beta > 0.0) {
            return Err(ModelError::InvalidParameter {
                name: "beta",
                value: beta,
                expected: "beta > 0",
            });
        }
        let n = positions.len();
        let mut covariance = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let d = (positions[i][0] - positions[j][0]).hypot(positions[i][1] - positions[j][1]);
                covariance[i * n + j] = (-beta * d).exp();
            }
        }
        let (cholesky, jitter) = cholesky_with_jitter(&covariance, n)?;
        Ok(GaussianSensorModel {
            positions,
            beta,
            covariance,
            cholesky,
            jitter,
            quantizer,
        })
    }

    pub fn sources(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[[f64; 2]] {
        &self.positions
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn quantizer(&self) -> &UniformQuantizer {
        &self.quantizer
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        self.covariance[i * self.sources() + j]
    }

    /// Diagonal jitter that was needed for the Cholesky factorization.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// One draw of the continuous readings.
    pub fn sample_readings<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.sources();
        let z: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        (0..n)
            .map(|i| (0..=i).map(|k| self.cholesky[i * n + k] * z[k]).sum())
            .collect()
    }

    /// One draw of quantized symbols (bin indices).
    pub fn sample_sources<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        self.sample_readings(rng)
            .into_iter()
            .map(|s| self.quantizer.quantize(s))
            .collect()
    }

    /// Marginal pmf of a quantized reading (identical for every sensor since
    /// all variances are one).
    pub fn marginal_pmf(&self, _i: usize) -> Vec<f64> {
        (0..self.quantizer.levels())
            .map(|k| {
                let (lo, hi) = self.quantizer.cell(k);
                std_normal_cdf(hi) - std_normal_cdf(lo)
            })
            .collect()
    }

    /// Joint pmf of the quantized pair (x_i, x_j), row-major in x_i.
    pub fn pairwise_cell_pmf(&self, i: usize, j: usize) -> Result<Vec<f64>, ModelError> {
        cell_pmf(&self.quantizer, self.correlation(i, j))
    }

    /// Pmf of X_i - X_j over the full feasible difference range.
    pub fn pairwise_noise(&self, i: usize, j: usize) -> Result<NoisePmf, ModelError> {
        if i == j {
            return Err(ModelError::InvalidEdge {
                i,
                j,
                reason: "noise of a source with itself".into(),
            });
        }
        noise_from_cells(&self.pairwise_cell_pmf(i, j)?, self.quantizer.levels())
    }
}

fn cholesky_with_jitter(covariance: &[f64], n: usize) -> Result<(Vec<f64>, f64), ModelError> {
    let matrix = DMatrix::from_row_slice(n, n, covariance);
    for jitter in [0.0, CHOLESKY_JITTER] {
        let shifted = &matrix + DMatrix::identity(n, n) * jitter;
        if let Some(chol) = shifted.cholesky() {
            let l = chol.l();
            let mut out = vec![0.0; n * n];
            for i in 0..n {
                for k in 0..=i {
                    out[i * n + k] = l[(i, k)];
                }
            }
            return Ok((out, jitter));
        }
    }
    Err(ModelError::NotPositiveDefinite)
}

fn finite(x: f64) -> f64 {
    x.clamp(-TAIL_LIMIT, TAIL_LIMIT)
}

/// Joint pmf of two quantized unit normals with correlation `rho`, by
/// integrating the density over each pair of cells. The inner integral is
/// a normal cdf difference; the outer one is done by adaptive quadrature.
pub(crate) fn cell_pmf(quantizer: &UniformQuantizer, rho: f64) -> Result<Vec<f64>, ModelError> {
    let k = quantizer.levels();
    let mut out = vec![0.0; k * k];
    let cond_sd = (1.0 - rho * rho).max(0.0).sqrt();
    for xi in 0..k {
        let (a1, b1) = quantizer.cell(xi);
        let (a1, b1) = (finite(a1), finite(b1));
        for xj in 0..k {
            let (a2, b2) = quantizer.cell(xj);
            let mass = if cond_sd < 1e-12 {
                // Perfect correlation: both readings are the same variable.
                let lo = a1.max(a2);
                let hi = b1.min(b2);
                if hi > lo {
                    std_normal_cdf(hi) - std_normal_cdf(lo)
                } else {
                    0.0
                }
            } else {
                let inner = |s: f64| {
                    let upper = std_normal_cdf((b2 - rho * s) / cond_sd);
                    let lower = std_normal_cdf((a2 - rho * s) / cond_sd);
                    std_normal_pdf(s) * (upper - lower)
                };
                integrate(inner, a1, b1, QUAD_ABS_TOL, QUAD_REL_TOL).map_err(
                    |Unconverged { lo, hi, estimate, error }| ModelError::Quadrature {
                        lo,
                        hi,
                        estimate,
                        error,
                    },
                )?
            };
            out[xi * k + xj] = mass.max(0.0);
        }
    }
    Ok(out)
}

/// Collapses a k x k joint cell table to the pmf of x_i - x_j.
pub(crate) fn noise_from_cells(cells: &[f64], k: usize) -> Result<NoisePmf, ModelError> {
    let span = k as i64 - 1;
    let mut mass = vec![0.0; 2 * k - 1];
    for xi in 0..k {
        for xj in 0..k {
            mass[(xi as i64 - xj as i64 + span) as usize] += cells[xi * k + xj];
        }
    }
    let total: f64 = mass.iter().sum();
    if (total - 1.0).abs() > NOISE_SUM_TOLERANCE {
        return Err(ModelError::InvalidPmf(format!(
            "integrated pair pmf sums to {total}"
        )));
    }
    NoisePmf::new(-span, mass.into_iter().map(|m| m / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    #[test]
    fn quantizer_bins_and_clamping() {
        let q = UniformQuantizer::with_default_range(3).unwrap();
        assert_eq!(q.levels(), 8);
        assert_abs_diff_eq!(q.bin_width(), 1.0);
        for k in 0..8 {
            assert_eq!(q.quantize(q.bin_center(k)), k);
        }
        assert_eq!(q.quantize(-100.0), 0);
        assert_eq!(q.quantize(-4.0001), 0);
        assert_eq!(q.quantize(4.5), 7);
        assert_eq!(q.quantize(f64::INFINITY), 7);
        assert!(UniformQuantizer::new(0, 4.0).is_err());
        assert!(UniformQuantizer::new(3, 0.0).is_err());
    }

    #[test]
    fn correlation_follows_distance() {
        let q = UniformQuantizer::with_default_range(3).unwrap();
        let m = GaussianSensorModel::from_positions(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]], 0.1, q);
        // Two coincident sensors make the covariance singular.
        let m = m.unwrap();
        assert_eq!(m.correlation(0, 2), 1.0);
        assert_abs_diff_eq!(m.correlation(0, 1), 0.904_837_418_035_959_6, epsilon = 1e-15);
        assert_eq!(m.jitter(), CHOLESKY_JITTER);
    }

    #[test]
    fn reported_correlation_intervals_match_distance_range() {
        // Sensor layout whose pairwise distances span [0.03, 1.0252].
        let q = UniformQuantizer::with_default_range(3).unwrap();
        let positions = vec![[0.0, 0.0], [0.03, 0.0], [1.0252, 0.0], [0.5, 0.3]];
        let reported = [
            (0.01, 0.9898, 0.9997),
            (0.05, 0.9502, 0.9986),
            (0.1, 0.9027, 0.9972),
            (0.2, 0.8153, 0.9943),
        ];
        for (beta, lo, hi) in reported {
            let m = GaussianSensorModel::from_positions(positions.clone(), beta, q).unwrap();
            let mut min: f64 = 1.0;
            let mut max: f64 = 0.0;
            for i in 0..4 {
                for j in i + 1..4 {
                    min = min.min(m.correlation(i, j));
                    max = max.max(m.correlation(i, j));
                }
            }
            assert!((min - lo).abs() < 1e-3, "beta {beta}: min {min}");
            assert!((max - hi).abs() < 1e-3, "beta {beta}: max {max}");
        }
        // A random layout keeps every correlation inside [exp(-beta*sqrt 2), 1].
        let m = GaussianSensorModel::random(20, 0.01, 7, q).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let r = m.correlation(i, j);
                assert!(r >= (-0.01 * SQRT_2).exp() && r <= 1.0);
                assert_eq!(r, m.correlation(j, i));
            }
            assert_eq!(m.correlation(i, i), 1.0);
        }
    }

    #[test]
    fn marginal_matches_normal_cdf() {
        let q = UniformQuantizer::with_default_range(2).unwrap();
        let m = GaussianSensorModel::random(2, 0.1, 1, q).unwrap();
        let f = m.marginal_pmf(0);
        assert_abs_diff_eq!(f.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        // Cells (-inf,-2], (-2,0], (0,2], (2,inf).
        assert_abs_diff_eq!(f[0], 0.022_750_131_948_179_2, epsilon = 1e-12);
        assert_abs_diff_eq!(f[1], 0.477_249_868_051_820_8, epsilon = 1e-12);
    }

    #[test]
    fn independent_pair_is_convolution_of_marginals() {
        let q = UniformQuantizer::with_default_range(3).unwrap();
        let cells = cell_pmf(&q, 0.0).unwrap();
        let marginal: Vec<f64> = (0..8)
            .map(|k| {
                let (lo, hi) = q.cell(k);
                std_normal_cdf(hi) - std_normal_cdf(lo)
            })
            .collect();
        let noise = noise_from_cells(&cells, 8).unwrap();
        for w in -7i64..=7 {
            let expected: f64 = (0..8i64)
                .filter(|&xj| (0..8).contains(&(xj + w)))
                .map(|xj| marginal[(xj + w) as usize] * marginal[xj as usize])
                .sum();
            assert!((noise.prob(w) - expected).abs() < 1e-9, "w={w}");
        }
    }

    #[test]
    fn near_perfect_correlation_concentrates_at_zero() {
        let q = UniformQuantizer::with_default_range(3).unwrap();
        let noise = noise_from_cells(&cell_pmf(&q, 0.999_999).unwrap(), 8).unwrap();
        assert!(noise.prob(0) > 0.99);
        let exact = noise_from_cells(&cell_pmf(&q, 1.0).unwrap(), 8).unwrap();
        assert_abs_diff_eq!(exact.prob(0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let q = UniformQuantizer::with_default_range(3).unwrap();
        let m = GaussianSensorModel::random(5, 0.05, 3, q).unwrap();
        let a = m.sample_sources(&mut ChaCha8Rng::seed_from_u64(11));
        let b = m.sample_sources(&mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| x < 8));
    }
}
