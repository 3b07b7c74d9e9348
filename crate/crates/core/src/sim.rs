//! Exact simulation of IID, Brownian, OU and OUF movement tracks.
//!
//! Each principal axis evolves independently with its own variance; the two
//! axes are rotated by the model's `theta` and offset by its mean. Gaussian
//! noise for step `k` is addressed by `(seed, k)` so tracks are reproducible
//! bit for bit.

use crate::data::{Crs, Relocation, Trajectory};
use crate::rng::StepNormals;
use crate::variogram::{Family, MovementModel, VariogramError};

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub model: MovementModel,
    pub times: Vec<i64>,
    pub seed: u64,
    /// Fixed first location; drawn from the stationary law when absent.
    pub start: Option<[f64; 2]>,
}

impl SimSpec {
    /// `n` fixes every `step` seconds starting at `t0`.
    pub fn regular(model: MovementModel, t0: i64, step: i64, n: usize, seed: u64) -> Self {
        Self { model, times: (0..n as i64).map(|k| t0 + k * step).collect(), seed, start: None }
    }
}

/// Exact one-step transition of the position-velocity state of one OUF axis.
#[derive(Debug, Clone, Copy)]
struct OufKernel {
    m: [[f64; 2]; 2],
    chol: [[f64; 2]; 2],
}

impl OufKernel {
    fn new(var: f64, tau_p: f64, tau_v: f64, dt: f64) -> Self {
        let gap = tau_p - tau_v;
        let e1 = (-dt / tau_p).exp();
        let e2 = (-dt / tau_v).exp();
        let m00 = (tau_p * e1 - tau_v * e2) / gap;
        let m01 = tau_p * tau_v * (e1 - e2) / gap;
        let m10 = -(e1 - e2) / gap;
        let m11 = (tau_p * e2 - tau_v * e1) / gap;
        let w2 = 1.0 / (tau_p * tau_v);
        // Q = P∞ − M P∞ Mᵀ with P∞ = diag(var, var·w2)
        let q00 = var * (1.0 - m00 * m00 - m01 * m01 * w2);
        let q01 = -var * (m00 * m10 + m01 * m11 * w2);
        let q11 = var * (w2 * (1.0 - m11 * m11) - m10 * m10);
        let l00 = q00.max(0.0).sqrt();
        let l10 = if l00 > 0.0 { q01 / l00 } else { 0.0 };
        let l11 = (q11 - l10 * l10).max(0.0).sqrt();
        Self { m: [[m00, m01], [m10, m11]], chol: [[l00, 0.0], [l10, l11]] }
    }

    fn step(&self, state: [f64; 2], z: [f64; 2]) -> [f64; 2] {
        let [x, v] = state;
        [
            self.m[0][0] * x + self.m[0][1] * v + self.chol[0][0] * z[0],
            self.m[1][0] * x + self.m[1][1] * v + self.chol[1][0] * z[0] + self.chol[1][1] * z[1],
        ]
    }
}

/// Simulates the model at `spec.times`, starting from its stationary
/// distribution (Brownian motion starts at the mean).
pub fn simulate(spec: &SimSpec) -> Result<Trajectory, VariogramError> {
    let model = &spec.model;
    model.validate()?;
    if spec.times.is_empty() || spec.times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VariogramError::InvalidParams("times must be non-empty and strictly increasing".into()));
    }
    let mut noise = StepNormals::new(spec.seed);
    let mut z = [0.0f64; 4];
    let sd = [model.sigma2[0].sqrt(), model.sigma2[1].sqrt()];

    // principal-axis positions, plus velocities for OUF
    let mut pos = [0.0f64; 2];
    let mut vel = [0.0f64; 2];
    noise.fill(0, &mut z);
    match model.family {
        Family::Brownian => {}
        Family::Ouf => {
            let (tp, tv) = (model.tau_p.unwrap(), model.tau_v.unwrap());
            for a in 0..2 {
                pos[a] = sd[a] * z[2 * a];
                vel[a] = sd[a] / (tp * tv).sqrt() * z[2 * a + 1];
            }
        }
        _ => {
            pos = [sd[0] * z[0], sd[1] * z[1]];
        }
    }

    let (s, c) = model.theta.sin_cos();
    if let Some([x0, y0]) = spec.start {
        let (dx, dy) = (x0 - model.mu[0], y0 - model.mu[1]);
        pos = [c * dx + s * dy, -s * dx + c * dy];
    }
    let place = |u: [f64; 2], t: i64| {
        Relocation::new(t, model.mu[0] + c * u[0] - s * u[1], model.mu[1] + s * u[0] + c * u[1])
    };
    let mut out = Vec::with_capacity(spec.times.len());
    out.push(place(pos, spec.times[0]));

    let mut cached: Option<(i64, [OufKernel; 2])> = None;
    for (k, w) in spec.times.windows(2).enumerate() {
        let step = (k + 1) as u64;
        let dt = (w[1] - w[0]) as f64;
        match model.family {
            Family::Iid => {
                noise.fill(step, &mut z[..2]);
                pos = [sd[0] * z[0], sd[1] * z[1]];
            }
            Family::Brownian => {
                noise.fill(step, &mut z[..2]);
                let scale = (model.diffusion.unwrap() * dt).sqrt();
                pos[0] += scale * z[0];
                pos[1] += scale * z[1];
            }
            Family::Ou => {
                noise.fill(step, &mut z[..2]);
                let tp = model.tau_p.unwrap();
                let decay = (-dt / tp).exp();
                let keep = -(-2.0 * dt / tp).exp_m1();
                for a in 0..2 {
                    pos[a] = decay * pos[a] + sd[a] * keep.sqrt() * z[a];
                }
            }
            Family::Ouf => {
                noise.fill(step, &mut z);
                let kernels = match cached {
                    Some((d, kern)) if d == w[1] - w[0] => kern,
                    _ => {
                        let (tp, tv) = (model.tau_p.unwrap(), model.tau_v.unwrap());
                        let kern = [
                            OufKernel::new(model.sigma2[0], tp, tv, dt),
                            OufKernel::new(model.sigma2[1], tp, tv, dt),
                        ];
                        cached = Some((w[1] - w[0], kern));
                        kern
                    }
                };
                for a in 0..2 {
                    let next = kernels[a].step([pos[a], vel[a]], [z[2 * a], z[2 * a + 1]]);
                    pos[a] = next[0];
                    vel[a] = next[1];
                }
            }
        }
        out.push(place(pos, w[1]));
    }
    Ok(Trajectory::new("sim", Crs::Identity, out)?)
}
