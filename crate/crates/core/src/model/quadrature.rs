//! Adaptive Gauss-Kronrod (7/15) quadrature on finite intervals.

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

/// Gauss weights for the odd-indexed Kronrod nodes (and the center).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_DEPTH: u32 = 40;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Unconverged {
    pub lo: f64,
    pub hi: f64,
    pub estimate: f64,
    pub error: f64,
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = half * XGK[i];
        let pair = f(center - dx) + f(center + dx);
        kron += WGK[i] * pair;
        if i % 2 == 1 {
            gauss += WG[i / 2] * pair;
        }
    }
    (kron * half, ((kron - gauss) * half).abs())
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
) -> Result<f64, Unconverged> {
    let (estimate, error) = kronrod(f, a, b);
    if error <= abs_tol.max(rel_tol * estimate.abs()) {
        return Ok(estimate);
    }
    if depth >= MAX_DEPTH {
        return Err(Unconverged {
            lo: a,
            hi: b,
            estimate,
            error,
        });
    }
    let mid = 0.5 * (a + b);
    Ok(adapt(f, a, mid, 0.5 * abs_tol, rel_tol, depth + 1)?
        + adapt(f, mid, b, 0.5 * abs_tol, rel_tol, depth + 1)?)
}

/// Integral of `f` over [a, b] to within max(abs_tol, rel_tol * |I|) per
/// accepted panel.
pub(crate) fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, Unconverged> {
    if a == b {
        return Ok(0.0);
    }
    adapt(&f, a, b, abs_tol, rel_tol, 0)
}
