//! Image-sequence experiment: every pixel position gives one source
//! sequence across N grayscale frames.

use std::collections::HashMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ColorType, ExtendedColorType, GrayImage, ImageEncoder, ImageFormat, ImageReader};
use rayon::prelude::*;

use corrnet_core::coding::{encode, preprocess, random_coding_matrix, CodedBatch, CodingMatrix};
use corrnet_core::decode::{decode, DecoderConfig, SourcePrior};
use corrnet_core::gf::FieldSpec;
use corrnet_core::model::{
    fit_laplacian_parameter, laplacian_noise_pmf, lift_marginal, uniform_over_image, AlphabetMap, CorrelationGraph,
};

use crate::config::{ExperimentConfig, MatrixMode, PriorMode};
use crate::report::{psnr_db, Metric, ResultRow};
use crate::{matrix_stream, stream_rng, with_workers, HarnessError};

/// Equally sized 8-bit grayscale frames.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameSet {
    pub width: u32,
    pub height: u32,
    /// Row-major pixels of each frame.
    pub frames: Vec<Vec<u8>>,
}

impl FrameSet {
    pub fn pixels(&self) -> usize {
        self.width as usize * self.height as usize
    }

    /// Keeps the `bits` most significant bits of every pixel.
    pub fn quantized(&self, bits: u32) -> Vec<Vec<u8>> {
        self.frames.iter().map(|f| quantize_pixels(f, bits)).collect()
    }
}

pub fn quantize_pixels(pixels: &[u8], bits: u32) -> Vec<u8> {
    assert!((1..=8).contains(&bits), "bit depth {bits} outside 1..=8");
    pixels.iter().map(|&v| v >> (8 - bits)).collect()
}

/// Reads an 8-bit grayscale PGM.
pub fn load_pgm(path: &Path) -> Result<GrayImage, HarnessError> {
    let bad = |reason: String| HarnessError::Image {
        path: path.to_owned(),
        reason,
    };
    let mut reader = ImageReader::open(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    reader.set_format(ImageFormat::Pnm);
    let img = reader.decode().map_err(|e| bad(e.to_string()))?;
    if img.color() != ColorType::L8 {
        return Err(bad(format!("expected 8-bit grayscale, found {:?}", img.color())));
    }
    Ok(img.into_luma8())
}

/// Writes a binary (P5) PGM.
pub fn save_pgm(path: &Path, width: u32, height: u32, pixels: Vec<u8>) -> Result<(), HarnessError> {
    let bad = |reason: String| HarnessError::Image {
        path: path.to_owned(),
        reason,
    };
    if pixels.len() != width as usize * height as usize {
        return Err(bad("pixel count does not match size".into()));
    }
    let file = File::create(path).map_err(|source| HarnessError::Io {
        path: path.to_owned(),
        source,
    })?;
    PnmEncoder::new(BufWriter::new(file))
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(&pixels, width, height, ExtendedColorType::L8)
        .map_err(|e| bad(e.to_string()))
}

/// The first `count` `.pgm` files of `dir` in lexical order.
pub fn load_frames(dir: &Path, count: usize) -> Result<FrameSet, HarnessError> {
    let io = |source| HarnessError::Io {
        path: dir.to_owned(),
        source,
    };
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io)?
        .map(|entry| entry.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io)?;
    paths.retain(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("pgm")));
    paths.sort();
    if paths.len() < count {
        return Err(HarnessError::Invalid(format!(
            "{} holds {} PGM frames, {count} needed",
            dir.display(),
            paths.len()
        )));
    }
    let mut frames = Vec::with_capacity(count);
    let mut size = None;
    for path in &paths[..count] {
        let img = load_pgm(path)?;
        let dims = img.dimensions();
        if *size.get_or_insert(dims) != dims {
            return Err(HarnessError::Image {
                path: path.clone(),
                reason: format!("frame is {}x{}, expected {}x{}", dims.0, dims.1, size.unwrap().0, size.unwrap().1),
            });
        }
        frames.push(img.into_raw());
    }
    let (width, height) = size.unwrap_or((0, 0));
    Ok(FrameSet { width, height, frames })
}

/// Laplacian parameter of every correlated pair `(i, j)`, i < j, j - i < window:
/// taken from `overrides` (one shared value or one per pair of the full
/// triangle, row by row) or fitted to the frame differences.
pub fn pair_parameters(symbols: &[Vec<u8>], window: usize, overrides: &[f64]) -> Vec<(usize, usize, f64)> {
    let n = symbols.len();
    let mut out = Vec::new();
    let mut pair_index = 0;
    for i in 0..n {
        for j in i + 1..n {
            if j - i < window {
                let p = match overrides {
                    [] => fit_laplacian_parameter(
                        symbols[i].iter().zip(&symbols[j]).map(|(&a, &b)| a as i64 - b as i64),
                    ),
                    [p] => *p,
                    all => all[pair_index],
                };
                out.push((i, j, p));
            }
            pair_index += 1;
        }
    }
    out
}

/// Decoder-side model of a quantized frame set.
pub fn image_prior(
    symbols: &[Vec<u8>],
    bits: u32,
    field: FieldSpec,
    window: usize,
    overrides: &[f64],
    prior_mode: PriorMode,
) -> Result<SourcePrior, HarnessError> {
    let levels = 1usize << bits;
    let map = AlphabetMap::offset(0, levels, field)?;
    let n = symbols.len();
    let mut graph = CorrelationGraph::new(n);
    for (i, j, p) in pair_parameters(symbols, window, overrides) {
        graph.add_edge(i, j, laplacian_noise_pmf(p, levels as u32 - 1)?)?;
    }
    let priors = symbols
        .iter()
        .map(|frame| match prior_mode {
            PriorMode::Uniform => uniform_over_image(&map),
            PriorMode::Empirical => {
                let mut hist = vec![0.0; levels];
                for &s in frame {
                    hist[s as usize] += 1.0;
                }
                let total = frame.len() as f64;
                let pmf: Vec<f64> = hist.into_iter().map(|c| c / total).collect();
                lift_marginal(&pmf, &map)
            }
        })
        .collect();
    Ok(SourcePrior::new(map, priors, graph)?)
}

/// Reconstruction of a frame set from one coding matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameDecode {
    /// Decoded symbols, frame by frame.
    pub frames: Vec<Vec<u8>>,
    /// Pixel positions whose sequence was decoded wrongly.
    pub failures: usize,
}

fn to_field(map: &AlphabetMap, x: &[u8]) -> Vec<u8> {
    x.iter().map(|&s| map.field_value(s as usize)).collect()
}

/// Decoded field values of one received batch.
fn decode_received(a: &CodingMatrix, y: Vec<u8>, prior: &SourcePrior, decoder: &DecoderConfig) -> Result<Vec<u8>, HarnessError> {
    let batch = CodedBatch::new(a.clone(), y)?;
    Ok(decode(&preprocess(&batch)?, prior, decoder)?.x_hat)
}

fn sequence_at(symbols: &[Vec<u8>], pixel: usize) -> Vec<u8> {
    symbols.iter().map(|f| f[pixel]).collect()
}

/// `decoded[pixel]` holds field values; a sequence fails unless it equals
/// the mapped original exactly.
fn assemble(symbols: &[Vec<u8>], map: &AlphabetMap, decoded: Vec<Vec<u8>>) -> FrameDecode {
    let n = symbols.len();
    let mut frames = vec![Vec::with_capacity(decoded.len()); n];
    let mut failures = 0;
    for (pixel, seq) in decoded.into_iter().enumerate() {
        failures += usize::from(seq != to_field(map, &sequence_at(symbols, pixel)));
        for (frame, v) in frames.iter_mut().zip(seq) {
            // Without the prior factor a decision may leave the alphabet
            // image; such values are snapped to the nearest symbol.
            let symbol = map.symbol_of(v).unwrap_or_else(|| map.nearest_symbol(v as i64));
            frame.push(symbol as u8);
        }
    }
    FrameDecode { frames, failures }
}

/// Encodes every pixel sequence with the same matrix and decodes it.
/// Decoding depends only on (A, y), so results are cached by y.
pub fn decode_frames(
    symbols: &[Vec<u8>],
    prior: &SourcePrior,
    a: &CodingMatrix,
    decoder: &DecoderConfig,
) -> Result<FrameDecode, HarnessError> {
    let pixels = symbols.first().map_or(0, Vec::len);
    let map = prior.map();
    let mut cache: HashMap<Vec<u8>, Vec<u8>> = HashMap::new();
    let mut decoded = Vec::with_capacity(pixels);
    for pixel in 0..pixels {
        let y = encode(a, &to_field(map, &sequence_at(symbols, pixel)))?;
        let x_hat = match cache.get(&y) {
            Some(x_hat) => x_hat.clone(),
            None => {
                let x_hat = decode_received(a, y.clone(), prior, decoder)?;
                cache.insert(y, x_hat.clone());
                x_hat
            }
        };
        decoded.push(x_hat);
    }
    Ok(assemble(symbols, map, decoded))
}

/// Like [`decode_frames`] with a fresh `l`-row matrix for every pixel.
fn decode_frames_per_sequence(
    symbols: &[Vec<u8>],
    prior: &SourcePrior,
    l: usize,
    seed: u64,
    run: usize,
    decoder: &DecoderConfig,
) -> Result<FrameDecode, HarnessError> {
    let pixels = symbols.first().map_or(0, Vec::len);
    let decoded = (0..pixels)
        .into_par_iter()
        .map(|pixel| {
            let stream = matrix_stream(run * pixels + pixel);
            let a = random_coding_matrix(l, symbols.len(), prior.field(), &mut stream_rng(seed, stream));
            let y = encode(&a, &to_field(prior.map(), &sequence_at(symbols, pixel)))?;
            decode_received(&a, y, prior, decoder)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(assemble(symbols, prior.map(), decoded))
}

/// Sum of squared symbol errors between two frames.
pub fn frame_squared_error(original: &[u8], decoded: &[u8]) -> f64 {
    original
        .iter()
        .zip(decoded)
        .map(|(&a, &b)| {
            let d = a as f64 - b as f64;
            d * d
        })
        .sum()
}

/// The matrix of run `run` (rows = max L; smaller L use prefixes).
pub fn run_matrix(cfg: &ExperimentConfig, field: &FieldSpec, run: usize) -> CodingMatrix {
    let l_max = cfg.l_values.iter().copied().max().unwrap_or(0);
    let run = if cfg.matrix_mode == MatrixMode::Fixed { 0 } else { run };
    random_coding_matrix(l_max, cfg.sources, field, &mut stream_rng(cfg.seed, matrix_stream(run)))
}

/// Error rate per L and PSNR per (frame, L), averaged over `samples` runs.
/// PSNR is computed from the MSE pooled over runs, so it is the lossless
/// sentinel only when every run reconstructs the frame exactly.
pub fn run_image_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>, HarnessError> {
    let bits = cfg
        .bits
        .ok_or_else(|| HarnessError::Invalid("images needs bits".into()))?;
    let dir = cfg
        .frames_dir
        .as_deref()
        .ok_or_else(|| HarnessError::Invalid("images needs frames_dir".into()))?;
    let frames = load_frames(dir, cfg.sources)?;
    let symbols = frames.quantized(bits);
    let pixels = frames.pixels();
    let n = cfg.sources;
    let window = cfg.window.unwrap_or(n);
    let decoder = DecoderConfig {
        max_iterations: cfg.max_iterations,
        prior_factor: cfg.prior_factor,
        ..DecoderConfig::default()
    };

    with_workers(cfg.workers, || {
        let mut rows = Vec::new();
        for &q in &cfg.field_orders {
            let field = FieldSpec::with_order(q)?;
            let prior = image_prior(&symbols, bits, field.clone(), window, &cfg.p_values, cfg.prior_mode)?;
            let jobs: Vec<(usize, usize)> = (0..cfg.samples)
                .flat_map(|run| cfg.l_values.iter().map(move |&l| (run, l)))
                .collect();
            let results: Vec<FrameDecode> = jobs
                .par_iter()
                .map(|&(run, l)| match cfg.matrix_mode {
                    MatrixMode::PerSequence => decode_frames_per_sequence(&symbols, &prior, l, cfg.seed, run, &decoder),
                    _ => decode_frames(&symbols, &prior, &run_matrix(cfg, &field, run).prefix(l), &decoder),
                })
                .collect::<Result<_, _>>()?;

            let total = pixels * cfg.samples;
            for (k, &l) in cfg.l_values.iter().enumerate() {
                let runs: Vec<&FrameDecode> = results.iter().skip(k).step_by(cfg.l_values.len()).collect();
                let failures: usize = runs.iter().map(|r| r.failures).sum();
                let row = |param: String, metric, value| ResultRow {
                    experiment: "images".into(),
                    n,
                    q,
                    param,
                    l,
                    metric,
                    value,
                    samples: total,
                };
                rows.push(row(format!("bits={bits}"), Metric::ErrorRate, failures as f64 / total as f64));
                for (frame, original) in symbols.iter().enumerate() {
                    let sq: f64 = runs
                        .iter()
                        .map(|r| frame_squared_error(original, &r.frames[frame]))
                        .sum();
                    rows.push(row(
                        format!("bits={bits};frame={frame}"),
                        Metric::PsnrDb,
                        psnr_db(sq / total as f64, bits),
                    ));
                }
            }
        }
        Ok(rows)
    })?
}
