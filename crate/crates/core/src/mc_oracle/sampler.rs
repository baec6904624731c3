//! Exact Gaussian transitions of the two Ornstein-Uhlenbeck factors and their integrals.
//!
//! Over a step of length `h` the state `(x, y, ∫x, ∫y)` moves by a deterministic
//! linear map plus a Gaussian innovation whose covariance is known in closed
//! form, so any number of steps samples the same joint law.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::convexity::ModelParams;
use crate::kernels::{decay_integral, decay_product_integral, weighted_decay_integral};

/// Bond factor, basis factor and their running time integrals.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FactorState {
    pub x: f64,
    pub y: f64,
    pub int_x: f64,
    pub int_y: f64,
}

/// Covariance of the innovation `(x, y, ∫x, ∫y)` over a step of length `h` from a zero state.
pub fn step_covariance(params: &ModelParams, h: f64) -> [[f64; 4]; 4] {
    let ModelParams {
        sigma,
        epsilon,
        theta,
        kappa,
        rho,
    } = *params;
    let ss = sigma * sigma;
    let ee = epsilon * epsilon;
    let se = rho * sigma * epsilon;

    let c00 = ss * decay_integral(2.0 * theta, h);
    let c11 = ee * decay_integral(2.0 * kappa, h);
    let c01 = se * decay_integral(theta + kappa, h);
    let c02 = ss * weighted_decay_integral(theta, theta, h);
    let c03 = se * weighted_decay_integral(theta, kappa, h);
    let c12 = se * weighted_decay_integral(kappa, theta, h);
    let c13 = ee * weighted_decay_integral(kappa, kappa, h);
    let c22 = ss * decay_product_integral(theta, theta, h);
    let c23 = se * decay_product_integral(theta, kappa, h);
    let c33 = ee * decay_product_integral(kappa, kappa, h);
    [
        [c00, c01, c02, c03],
        [c01, c11, c12, c13],
        [c02, c12, c22, c23],
        [c03, c13, c23, c33],
    ]
}

/// Lower Cholesky factor of a positive semi-definite matrix.
///
/// Pivots that vanish relative to the diagonal scale zero their column, so
/// perfectly correlated or zero-volatility factors factorise cleanly.
#[allow(clippy::needless_range_loop)]
pub fn cholesky_psd(m: &[[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let scale = (0..4).map(|i| m[i][i].abs()).fold(0.0, f64::max);
    let floor = 1e-14 * scale;
    let mut l = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut pivot = m[j][j];
        for k in 0..j {
            pivot -= l[j][k] * l[j][k];
        }
        if pivot <= floor {
            continue;
        }
        let d = pivot.sqrt();
        l[j][j] = d;
        for i in j + 1..4 {
            let mut v = m[i][j];
            for k in 0..j {
                v -= l[i][k] * l[j][k];
            }
            l[i][j] = v / d;
        }
    }
    l
}

#[derive(Debug, Clone)]
struct StepKernel {
    decay_x: f64,
    decay_y: f64,
    ramp_x: f64,
    ramp_y: f64,
    chol: [[f64; 4]; 4],
}

impl StepKernel {
    fn new(params: &ModelParams, h: f64) -> Self {
        StepKernel {
            decay_x: (-params.theta * h).exp(),
            decay_y: (-params.kappa * h).exp(),
            ramp_x: decay_integral(params.theta, h),
            ramp_y: decay_integral(params.kappa, h),
            chol: cholesky_psd(&step_covariance(params, h)),
        }
    }

    fn advance<R: Rng + ?Sized>(&self, state: &mut FactorState, rng: &mut R) {
        let z: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let l = &self.chol;
        let noise: [f64; 4] = std::array::from_fn(|i| (0..=i).map(|k| l[i][k] * z[k]).sum());
        state.int_x += self.ramp_x * state.x + noise[2];
        state.int_y += self.ramp_y * state.y + noise[3];
        state.x = self.decay_x * state.x + noise[0];
        state.y = self.decay_y * state.y + noise[1];
    }
}

/// Samples the factor state at the repo start and end from a zero state at the fixing.
#[derive(Debug, Clone)]
pub struct PathSampler {
    segments: [(StepKernel, usize); 2],
}

impl PathSampler {
    /// Splits `[fix, start]` and `[start, end]` into `steps` equal exact steps each.
    /// Empty segments take no steps.
    pub fn new(params: &ModelParams, fix: f64, start: f64, end: f64, steps: usize) -> Self {
        let segment = |len: f64| {
            let n = if len > 0.0 { steps.max(1) } else { 0 };
            let h = if n > 0 { len / n as f64 } else { 0.0 };
            (StepKernel::new(params, h), n)
        };
        PathSampler {
            segments: [segment(start - fix), segment(end - start)],
        }
    }

    /// Returns the state at the repo start and at the repo end.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (FactorState, FactorState) {
        let mut state = FactorState::default();
        let mut at_start = state;
        for (index, (kernel, n)) in self.segments.iter().enumerate() {
            for _ in 0..*n {
                kernel.advance(&mut state, rng);
            }
            if index == 0 {
                at_start = state;
            }
        }
        (at_start, state)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mc_oracle::quadrature::integrate;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ramp(k: f64, w: f64) -> f64 {
        if k == 0.0 {
            w
        } else {
            -(-k * w).exp_m1() / k
        }
    }

    // Each entry as the Itô isometry integral over the driving noise, by quadrature.
    fn quadrature_step_covariance(p: &ModelParams, h: f64) -> [[f64; 4]; 4] {
        let loads = |u: f64| {
            let w = h - u;
            [(-p.theta * w).exp(), (-p.kappa * w).exp(), ramp(p.theta, w), ramp(p.kappa, w)]
        };
        let vol = [p.sigma, p.epsilon, p.sigma, p.epsilon];
        let is_x = [true, false, true, false];
        let mut c = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                let corr = if is_x[i] == is_x[j] { 1.0 } else { p.rho };
                let integral = integrate(|u| loads(u)[i] * loads(u)[j], 0.0, h, 1e-15);
                c[i][j] = vol[i] * vol[j] * corr * integral;
            }
        }
        c
    }

    #[test]
    fn covariance_entries_match_quadrature() {
        let cases = [
            (ModelParams::new(0.01, 0.005, 0.03, 0.1, -0.5).unwrap(), 1.0),
            (ModelParams::new(0.02, 0.01, 0.5, 1e-8, 0.7).unwrap(), 0.25),
            (ModelParams::new(0.015, 0.02, 0.0, 0.0, 0.3).unwrap(), 9.0),
            (ModelParams::new(0.01, 0.01, 2.0, 0.8, -0.9).unwrap(), 3.0),
        ];
        for (p, h) in cases {
            let closed = step_covariance(&p, h);
            let quad = quadrature_step_covariance(&p, h);
            for i in 0..4 {
                for j in 0..4 {
                    let scale = quad[i][j].abs().max(1e-300);
                    assert!(
                        (closed[i][j] - quad[i][j]).abs() / scale < 1e-12,
                        "entry ({i},{j}) h={h}: {} vs {}",
                        closed[i][j],
                        quad[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn cholesky_reproduces_matrix() {
        let p = ModelParams::new(0.01, 0.005, 0.03, 0.1, -0.5).unwrap();
        let m = step_covariance(&p, 1.25);
        let l = cholesky_psd(&m);
        for i in 0..4 {
            for j in 0..4 {
                let v: f64 = (0..4).map(|k| l[i][k] * l[j][k]).sum();
                assert!((v - m[i][j]).abs() <= 1e-12 * m[i][i].max(m[j][j]));
            }
        }
    }

    #[test]
    fn cholesky_handles_singular_matrices() {
        let perfect = ModelParams::new(0.01, 0.01, 0.2, 0.2, 1.0).unwrap();
        let l = cholesky_psd(&step_covariance(&perfect, 1.0));
        assert!(l.iter().flatten().all(|v| v.is_finite()));
        let frozen = ModelParams::new(0.0, 0.0, 0.2, 0.2, 0.0).unwrap();
        assert_eq!(cholesky_psd(&step_covariance(&frozen, 1.0)), [[0.0; 4]; 4]);
    }

    #[test]
    fn zero_volatility_stays_at_zero() {
        let p = ModelParams::new(0.0, 0.0, 0.03, 0.1, 0.0).unwrap();
        let sampler = PathSampler::new(&p, 0.0, 1.0, 2.0, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (s, e) = sampler.sample(&mut rng);
        assert_eq!(s, FactorState::default());
        assert_eq!(e, FactorState::default());
    }

    #[test]
    fn sample_moments_match_transition_law() {
        // many small steps against the one-step covariance of the terminal state
        let p = ModelParams::new(0.01, 0.02, 0.4, 0.9, 0.6).unwrap();
        let sampler = PathSampler::new(&p, 0.0, 0.0, 2.0, 8);
        let cov = step_covariance(&p, 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut acc = [[0.0; 4]; 4];
        for _ in 0..n {
            let (_, e) = sampler.sample(&mut rng);
            let v = [e.x, e.y, e.int_x, e.int_y];
            for i in 0..4 {
                for j in 0..4 {
                    acc[i][j] += v[i] * v[j];
                }
            }
        }
        for i in 0..4 {
            for j in 0..4 {
                let est = acc[i][j] / n as f64;
                let sd = ((cov[i][i] * cov[j][j] + cov[i][j] * cov[i][j]) / n as f64).sqrt();
                assert!((est - cov[i][j]).abs() < 5.0 * sd, "({i},{j}) {est} vs {}", cov[i][j]);
            }
        }
    }
}
