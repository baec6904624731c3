//! Adaptive Gauss-Kronrod quadrature and the covariance-integral oracle.

#![allow(clippy::excessive_precision)]

use crate::convexity::{ModelParams, RepoSchedule};

// 15-point Kronrod extension of the 7-point Gauss rule on [-1, 1].
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
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

const MAX_DEPTH: u32 = 48;

/// Kronrod estimate, |Kronrod - Gauss|, and the Kronrod estimate of `∫|f|`.
fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    let mut abs = WGK[7] * fc.abs();
    for j in 0..7 {
        let dx = half * XGK[j];
        let (f1, f2) = (f(center - dx), f(center + dx));
        kronrod += WGK[j] * (f1 + f2);
        abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs(), abs * half.abs())
}

/// Adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Intervals are bisected until the Kronrod/Gauss difference falls below
/// `rel_tol` times the integral of `|f|` over the whole range.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let (whole, err, abs) = gauss_kronrod(&f, a, b);
    let tol = rel_tol * abs.max(f64::MIN_POSITIVE);
    if err <= tol {
        return whole;
    }
    let mid = 0.5 * (a + b);
    refine(&f, a, mid, tol * 0.5, 1) + refine(&f, mid, b, tol * 0.5, 1)
}

fn refine<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let (value, err, _) = gauss_kronrod(f, a, b);
    if err <= tol || depth >= MAX_DEPTH {
        return value;
    }
    let mid = 0.5 * (a + b);
    refine(f, a, mid, tol * 0.5, depth + 1) + refine(f, mid, b, tol * 0.5, depth + 1)
}

const ORACLE_TOL: f64 = 1e-15;

// (1 - e^{-k w}) / k, written out here so the oracle shares no code with the closed form
fn ramp(k: f64, w: f64) -> f64 {
    if k == 0.0 {
        w
    } else {
        -(-k * w).exp_m1() / k
    }
}

/// Convexity adjustment by direct quadrature of the covariance integrals
///
/// ```text
/// C = ρσε [ A(θ,T-e) ∫_t^e e^{-θ(e-u)} A(κ,e-u) du - A(θ,T-s) ∫_t^s e^{-θ(s-u)} A(κ,e-u) du ]
/// ```
///
/// with `A(k, w) = (1 - e^{-k w}) / k` evaluated as a limit-safe integrand.
pub fn quadrature_covariance(params: &ModelParams, schedule: &RepoSchedule) -> f64 {
    let ModelParams { theta, kappa, .. } = *params;
    let (t, s, e, big_t) = (schedule.fix, schedule.start, schedule.end, schedule.bond_maturity);
    let end_leg = integrate(
        |u| (-theta * (e - u)).exp() * ramp(kappa, e - u),
        t,
        e,
        ORACLE_TOL,
    );
    let start_leg = integrate(
        |u| (-theta * (s - u)).exp() * ramp(kappa, e - u),
        t,
        s,
        ORACLE_TOL,
    );
    params.covariance_scale() * (ramp(theta, big_t - e) * end_leg - ramp(theta, big_t - s) * start_leg)
}
