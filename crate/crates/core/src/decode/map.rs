//! Exhaustive MAP decoding: the most probable configuration consistent with
//! the received equations. Only for small N log2 q.

use super::DecodeError;
use crate::coding::CodedBatch;
use crate::model::MAX_EXPLICIT_STATE_BITS;

/// Configurations of a field-indexed joint pmf sorted by decreasing mass,
/// ties in lexicographic order, so decoding is a scan for the first
/// feasible one.
#[derive(Debug, Clone)]
pub struct MapOracle {
    sources: usize,
    q: usize,
    order: Vec<u32>,
}

impl MapOracle {
    /// `joint` is indexed with source 0 most significant.
    pub fn new(sources: usize, q: usize, joint: &[f64]) -> Result<Self, DecodeError> {
        if sources as f64 * (q as f64).log2() > MAX_EXPLICIT_STATE_BITS {
            return Err(DecodeError::TooLarge { sources, q });
        }
        let expected = q.pow(sources as u32);
        if joint.len() != expected {
            return Err(DecodeError::DimensionMismatch {
                what: "joint table length",
                expected,
                found: joint.len(),
            });
        }
        let mut order: Vec<u32> = (0..expected as u32).filter(|&i| joint[i as usize] > 0.0).collect();
        order.sort_by(|&a, &b| joint[b as usize].total_cmp(&joint[a as usize]).then(a.cmp(&b)));
        Ok(MapOracle { sources, q, order })
    }

    pub fn configuration(&self, index: u32) -> Vec<u8> {
        let mut x = vec![0u8; self.sources];
        let mut rest = index as usize;
        for v in x.iter_mut().rev() {
            *v = (rest % self.q) as u8;
            rest /= self.q;
        }
        x
    }

    pub fn decode(&self, batch: &CodedBatch) -> Result<Vec<u8>, DecodeError> {
        if batch.sources() != self.sources {
            return Err(DecodeError::DimensionMismatch {
                what: "batch width",
                expected: self.sources,
                found: batch.sources(),
            });
        }
        self.order
            .iter()
            .map(|&i| self.configuration(i))
            .find(|x| batch.is_satisfied_by(x))
            .ok_or(DecodeError::NoFeasibleConfiguration)
    }
}

/// One-shot MAP decode; build a `MapOracle` when decoding many batches
/// under the same pmf.
pub fn decode_map_exact(batch: &CodedBatch, joint: &[f64]) -> Result<Vec<u8>, DecodeError> {
    let q = batch.matrix.field().order();
    MapOracle::new(batch.sources(), q, joint)?.decode(batch)
}
