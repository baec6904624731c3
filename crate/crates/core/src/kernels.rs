//! Exponential-decay integrals shared by the closed forms and the sampler.
//!
//! Everything in the model reduces to three integrals over a horizon `h`:
//!
//! ```text
//! decay_integral(a, h)            = ∫₀ʰ e^{-a w} dw
//! weighted_decay_integral(l, k, h) = ∫₀ʰ e^{-l w} decay_integral(k, w) dw
//! decay_product_integral(a, b, h)  = ∫₀ʰ decay_integral(a, w) decay_integral(b, w) dw
//! ```
//!
//! The textbook closed forms divide by the rates and cancel catastrophically
//! as a rate goes to zero. Here the closed form is only used once the small
//! rate times the horizon reaches [`SERIES_THRESHOLD`]; below it the integral
//! is summed as a power series in the small rate until the terms fall under
//! machine precision. All functions are finite and continuous at zero rates.

/// Below this value of `rate * horizon` the divided differences are summed as series.
pub const SERIES_THRESHOLD: f64 = 1.0;

const SERIES_TOL: f64 = 1e-17;
const MAX_TERMS: usize = 200;

/// `(1 - e^{-x}) / x`, equal to 1 at `x = 0`.
#[inline]
pub fn phi1(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

/// `∫₀ʰ e^{-rate·w} dw = (1 - e^{-rate·h}) / rate`, with limit `h` at zero rate.
///
/// This is the Hull-White duration factor; it is exactly zero at `h = 0`.
#[inline]
pub fn decay_integral(rate: f64, h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    h * phi1(rate * h)
}

/// `∫₀¹ vᵐ e^{-x v} dv` for `x ≥ 0`.
///
/// Upward recurrence from `phi1` is stable while `m ≤ x`; above that the
/// all-positive series `e^{-x} Σ xᵏ / ((m+1)…(m+k+1))` converges quickly.
pub fn scaled_moment(m: usize, x: f64) -> f64 {
    let mut seq = ScaledMoments::new(x);
    let mut value = seq.first();
    for _ in 0..m {
        value = seq.next_moment();
    }
    value
}

/// Iterates `ψ₀(x), ψ₁(x), …` where `ψₘ(x) = ∫₀¹ vᵐ e^{-x v} dv`.
struct ScaledMoments {
    x: f64,
    exp_neg_x: f64,
    m: usize,
    value: f64,
}

impl ScaledMoments {
    fn new(x: f64) -> Self {
        ScaledMoments {
            x,
            exp_neg_x: (-x).exp(),
            m: 0,
            value: phi1(x),
        }
    }

    fn first(&self) -> f64 {
        self.value
    }

    fn next_moment(&mut self) -> f64 {
        self.m += 1;
        let m = self.m as f64;
        self.value = if self.x == 0.0 {
            1.0 / (m + 1.0)
        } else if m <= self.x {
            (m * self.value - self.exp_neg_x) / self.x
        } else {
            positive_series(self.m, self.x, self.exp_neg_x)
        };
        self.value
    }
}

fn positive_series(m: usize, x: f64, exp_neg_x: f64) -> f64 {
    let m = m as f64;
    let mut term = 1.0 / (m + 1.0);
    let mut sum = term;
    let mut k = 1.0;
    while term > SERIES_TOL * sum && k < 10_000.0 {
        term *= x / (m + k + 1.0);
        sum += term;
        k += 1.0;
    }
    exp_neg_x * sum
}

/// `∫₀ʰ e^{-weight_rate·w} · decay_integral(rate, w) dw`.
///
/// Equals `(decay_integral(l, h) - decay_integral(l + k, h)) / k`; the series
/// branch expands `decay_integral(k, w)` in powers of `k`:
/// `h² Σₙ (-k h)ⁿ / (n+1)! · ψₙ₊₁(l h)`.
pub fn weighted_decay_integral(weight_rate: f64, rate: f64, h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    let y = rate * h;
    if y >= SERIES_THRESHOLD {
        return (decay_integral(weight_rate, h) - decay_integral(weight_rate + rate, h)) / rate;
    }
    let mut moments = ScaledMoments::new(weight_rate * h);
    let mut coef = 1.0;
    let mut sum = 0.0;
    for n in 0..MAX_TERMS {
        if n > 0 {
            coef *= -y / (n as f64 + 1.0);
        }
        let term = coef * moments.next_moment();
        sum += term;
        if term.abs() <= SERIES_TOL * sum.abs() {
            break;
        }
    }
    h * h * sum
}

/// `∫₀ʰ decay_integral(a, w) · decay_integral(b, w) dw`, symmetric in `a`, `b`.
pub fn decay_product_integral(a: f64, b: f64, h: f64) -> f64 {
    if h == 0.0 {
        return 0.0;
    }
    let (small, large) = if a <= b { (a, b) } else { (b, a) };
    let x = small * h;
    if x >= SERIES_THRESHOLD {
        let bracket = h - decay_integral(small, h) - decay_integral(large, h)
            + decay_integral(small + large, h);
        return bracket / (small * large);
    }
    // h³ Σₙ (-x)ⁿ/(n+1)! · kₙ₊₁(large·h), kₘ(y) = h^{-(m+2)} ∫₀ʰ wᵐ decay_integral(large, w) dw
    let y = large * h;
    let mut coef = 1.0;
    let mut sum = 0.0;
    for n in 0..MAX_TERMS {
        if n > 0 {
            coef *= -x / (n as f64 + 1.0);
        }
        let term = coef * ramp_moment(n + 1, y);
        sum += term;
        if term.abs() <= SERIES_TOL * sum.abs() {
            break;
        }
    }
    h * h * h * sum
}

/// `∫₀¹ vᵐ (1 - e^{-y v}) / y dv`.
fn ramp_moment(m: usize, y: f64) -> f64 {
    let mf = m as f64;
    if y >= SERIES_THRESHOLD {
        return (1.0 / (mf + 1.0) - scaled_moment(m, y)) / y;
    }
    // Σₖ (-y)ᵏ / ((k+1)! (m+k+2))
    let mut coef = 1.0;
    let mut sum = 0.0;
    for k in 0..MAX_TERMS {
        if k > 0 {
            coef *= -y / (k as f64 + 1.0);
        }
        let term = coef / (mf + k as f64 + 2.0);
        sum += term;
        if term.abs() <= SERIES_TOL * sum.abs() {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn phi1_limits() {
        assert_eq!(phi1(0.0), 1.0);
        assert!(rel(phi1(1e-12), 1.0 - 0.5e-12) < 1e-16);
        assert!(rel(phi1(2.0), (1.0 - (-2.0f64).exp()) / 2.0) < 1e-15);
    }

    #[test]
    fn decay_integral_is_zero_at_zero_horizon() {
        assert_eq!(decay_integral(0.3, 0.0), 0.0);
        assert_eq!(decay_integral(0.0, 2.5), 2.5);
    }

    #[test]
    fn scaled_moment_branches_agree_with_direct_forms() {
        // ψ₁(x) = (1 - (1+x)e^{-x}) / x²
        for &x in &[0.3, 1.0, 2.0, 7.5, 40.0] {
            let direct = (1.0 - (1.0 + x) * f64::exp(-x)) / (x * x);
            assert!(rel(scaled_moment(1, x), direct) < 1e-13, "x={x}");
        }
        assert_eq!(scaled_moment(4, 0.0), 0.2);
        // continuity across the recurrence/series switch at m = x
        let below = scaled_moment(5, 5.0);
        let above = scaled_moment(5, 5.0 - 1e-12);
        assert!(rel(below, above) < 1e-11);
    }

    // mpmath quadrature at 40 digits
    #[test]
    fn weighted_decay_integral_reference_values() {
        let cases = [
            (0.03, 0.1, 1.25, 0.731_303_597_577_216_6),
            (0.5, 1e-6, 30.0, 3.999_972_422_581_952),
            (0.0, 0.0, 2.0, 2.0),
            (1e-9, 0.2, 10.0, 28.383_381_905_164_586),
            (5.0, 0.3, 40.0, 0.037_735_849_056_603_77),
        ];
        for (l, k, h, want) in cases {
            let got = weighted_decay_integral(l, k, h);
            assert!(rel(got, want) < 1e-14, "l={l} k={k} h={h}: {got} vs {want}");
        }
    }

    #[test]
    fn decay_product_integral_reference_values() {
        let cases = [
            (0.03, 0.1, 1.25, 0.612_888_696_077_455),
            (0.0, 0.0, 2.0, 8.0 / 3.0),
            (0.5, 1e-6, 30.0, 891.991_055_222_335_7),
            (1e-9, 0.2, 10.0, 175.750_730_582_473_66),
        ];
        for (a, b, h, want) in cases {
            let got = decay_product_integral(a, b, h);
            assert!(rel(got, want) < 1e-14, "a={a} b={b} h={h}: {got} vs {want}");
            assert_eq!(got, decay_product_integral(b, a, h));
        }
    }

    #[test]
    fn continuous_across_series_threshold() {
        let h = 4.0;
        let k = SERIES_THRESHOLD / h;
        let lo = weighted_decay_integral(0.2, k * (1.0 - 1e-12), h);
        let hi = weighted_decay_integral(0.2, k * (1.0 + 1e-12), h);
        assert!(rel(lo, hi) < 1e-12);
        let lo = decay_product_integral(k * (1.0 - 1e-12), 0.7, h);
        let hi = decay_product_integral(k * (1.0 + 1e-12), 0.7, h);
        assert!(rel(lo, hi) < 1e-12);
    }
}
