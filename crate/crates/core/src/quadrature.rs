//! Adaptive Gauss–Kronrod quadrature and a log-space driver for log-concave
//! integrands on a half line.

use crate::error::{Error, Result};

/// Kronrod abscissae (positive half, descending) for the 15-point rule.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Gauss 7-point weights, matching XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_k = kronrod.abs();
    let mut values = [(0.0, 0.0); 7];
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = half * x;
        let (f1, f2) = (f(center - dx), f(center + dx));
        values[j] = (f1, f2);
        kronrod += w * (f1 + f2);
        abs_k += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for (&(f1, f2), &w) in values.iter().zip(WGK.iter()) {
        asc += w * ((f1 - mean).abs() + (f2 - mean).abs());
    }
    let value = kronrod * half;
    let asc = asc * half.abs();
    let abs_k = abs_k * half.abs();
    // QUADPACK error scaling
    let mut error = ((kronrod - gauss) * half).abs();
    if asc != 0.0 && error != 0.0 {
        error = asc * (200.0 * error / asc).powf(1.5).min(1.0);
    }
    if abs_k > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * abs_k);
    }
    Segment { a, b, value, error }
}

/// Globally adaptive G7–K15 on `[a, b]`. Stops once the summed error
/// estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    integrate_pieces(f, &[a, b], abs_tol, rel_tol)
}

/// As [`integrate`], starting from the partition given by the ascending
/// `breaks`.
pub fn integrate_pieces<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Estimate> {
    const MAX_SEGMENTS: usize = 4000;
    let mut segments: Vec<Segment> = breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gk15(&f, w[0], w[1]))
        .collect();
    if segments.is_empty() {
        return Ok(Estimate { value: 0.0, abs_error: 0.0 });
    }
    loop {
        let value: f64 = segments.iter().map(|s| s.value).sum();
        let error: f64 = segments.iter().map(|s| s.error).sum();
        let target = abs_tol.max(rel_tol * value.abs());
        if error <= target {
            return Ok(Estimate { value, abs_error: error });
        }
        let (worst_idx, worst) = segments
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, s)| (i, *s))
            .expect("at least one segment");
        let mid = 0.5 * (worst.a + worst.b);
        // stop when bisection no longer produces distinct nodes
        if segments.len() >= MAX_SEGMENTS || mid <= worst.a || mid >= worst.b {
            return Err(Error::Quadrature { achieved: error, requested: target });
        }
        segments[worst_idx] = gk15(&f, worst.a, mid);
        segments.push(gk15(&f, mid, worst.b));
    }
}

/// Natural log of an integral together with its relative error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEstimate {
    pub ln_value: f64,
    pub rel_error: f64,
}

/// Nats below the peak at which the integration window is cut.
const WINDOW_DEPTH: f64 = 50.0;

/// Integrates `exp(ln_f)` over `[lower, ∞)` for concave `ln_f`.
///
/// The mode is located by golden-section search, the window is grown until
/// `ln_f` has dropped [`WINDOW_DEPTH`] nats below the peak on both sides, and
/// the rescaled integrand `exp(ln_f − peak)` is integrated piecewise on each
/// side of the mode. The result stays accurate whatever the magnitude of the
/// integral. `hint` is a rough guess of where the mass sits.
pub fn integrate_log_concave<F: Fn(f64) -> f64>(
    ln_f: F,
    lower: f64,
    hint: f64,
    rel_tol: f64,
) -> Result<LogEstimate> {
    let g = |x: f64| {
        let v = ln_f(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };

    // Bracket the mode: march right until the function decreases.
    let mut prev_x = lower.max(hint).max(lower + 1e-300);
    let mut step = (prev_x - lower).max(1.0);
    let mut prev_g = g(prev_x);
    let mut hi;
    loop {
        hi = prev_x + step;
        let ghi = g(hi);
        if ghi < prev_g || (ghi == f64::NEG_INFINITY && prev_g == f64::NEG_INFINITY && hi > 1e300)
        {
            break;
        }
        if !hi.is_finite() {
            return Err(Error::Quadrature { achieved: f64::INFINITY, requested: rel_tol });
        }
        prev_x = hi;
        prev_g = ghi;
        step *= 2.0;
    }

    // Golden-section search on [lower, hi].
    let inv_phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lower, hi);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut gc, mut gd) = (g(c), g(d));
    for _ in 0..80 {
        if gc >= gd {
            b = d;
            d = c;
            gd = gc;
            c = b - inv_phi * (b - a);
            gc = g(c);
        } else {
            a = c;
            c = d;
            gc = gd;
            d = a + inv_phi * (b - a);
            gd = g(d);
        }
        if b - a <= 1e-12 * (1.0 + a.abs()) {
            break;
        }
    }
    let mut mode = 0.5 * (a + b);
    let mut peak = g(mode);
    if g(lower) > peak {
        mode = lower;
        peak = g(lower);
    }
    if peak == f64::NEG_INFINITY {
        return Ok(LogEstimate { ln_value: f64::NEG_INFINITY, rel_error: 0.0 });
    }

    // Characteristic width from the curvature at the mode.
    let h = 1e-4 * (1.0 + mode.abs());
    let curvature = if mode - h > lower {
        (g(mode + h) - 2.0 * peak + g(mode - h)) / (h * h)
    } else {
        f64::NAN
    };
    let width = if curvature.is_finite() && curvature < 0.0 {
        1.0 / (-curvature).sqrt()
    } else {
        1.0 + mode.abs() * 1e-2
    };

    let floor = peak - WINDOW_DEPTH;
    let mut right = mode + width;
    let mut reach = width;
    while g(right) > floor {
        reach *= 2.0;
        right = mode + reach;
        if !right.is_finite() {
            return Err(Error::Quadrature { achieved: f64::INFINITY, requested: rel_tol });
        }
    }
    let mut left = mode;
    if mode > lower {
        let mut reach = width;
        loop {
            left = (mode - reach).max(lower);
            if left == lower || g(left) <= floor {
                break;
            }
            reach *= 2.0;
        }
    }

    // Pieces double in length away from the mode so no node set can step
    // over the peak.
    let mut breaks = vec![mode];
    let mut reach = width;
    while mode - reach > left {
        breaks.push(mode - reach);
        reach *= 2.0;
    }
    breaks.push(left);
    breaks.reverse();
    let mut reach = width;
    while mode + reach < right {
        breaks.push(mode + reach);
        reach *= 2.0;
    }
    breaks.push(right);

    let scaled = |x: f64| (g(x) - peak).exp();
    // the peak contributes ~width, so this is a relative target
    let est = integrate_pieces(scaled, &breaks, rel_tol * width * 1e-3, rel_tol)?;
    if est.value <= 0.0 {
        return Err(Error::Quadrature { achieved: est.abs_error, requested: rel_tol });
    }
    Ok(LogEstimate { ln_value: peak + est.value.ln(), rel_error: est.abs_error / est.value })
}
