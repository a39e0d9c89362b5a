//! Monte-Carlo simulation of the full asset / fast factor / slow factor system.
//!
//! `ln X` is stepped with Euler (exact per step when the volatility is
//! constant), `Y` and `Z` with their exact OU transitions. The geometric
//! average is accumulated by the trapezoidal rule on `ln X` and continued
//! from the running average at the valuation time:
//! `T ln G_T = t ln g + int_t^T ln X ds`.
//!
//! Every path (or antithetic pair) draws from its own ChaCha stream keyed by
//! `(seed, index)`, so results do not depend on the thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Kind, MarketState, ModelParams, OptionSpec, Style};

pub const DEFAULT_F_MIN: f64 = 0.01;
pub const DEFAULT_F_MAX: f64 = 2.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Euler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    /// Total number of paths; with antithetic sampling this is rounded up to
    /// an even count.
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub antithetic: bool,
}

impl McConfig {
    pub fn new(n_paths: usize, n_steps: usize, seed: u64) -> Self {
        Self {
            n_paths,
            n_steps,
            seed,
            scheme: Scheme::Euler,
            antithetic: false,
        }
    }

    pub fn with_antithetic(mut self, on: bool) -> Self {
        self.antithetic = on;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_paths < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_paths = {} must be >= 2",
                self.n_paths
            )));
        }
        if self.n_steps < 2 {
            return Err(Error::InvalidConfig(format!(
                "n_steps = {} must be >= 2",
                self.n_steps
            )));
        }
        Ok(())
    }

    /// Number of independent samples (paths, or pairs when antithetic).
    fn n_samples(&self) -> usize {
        if self.antithetic {
            self.n_paths.div_ceil(2)
        } else {
            self.n_paths
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum VolSpec {
    ConstantVol { sigma: f64 },
    FullModel { f_min: f64, f_max: f64 },
}

impl VolSpec {
    pub fn full_default() -> Self {
        Self::FullModel {
            f_min: DEFAULT_F_MIN,
            f_max: DEFAULT_F_MAX,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            // sigma = 0 is kept as the deterministic limit.
            Self::ConstantVol { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => Err(
                Error::InvalidConfig(format!("constant volatility {sigma} must be >= 0")),
            ),
            Self::FullModel { f_min, f_max } if !(0.0 < f_min && f_min < f_max) => Err(
                Error::InvalidConfig(format!("need 0 < f_min < f_max (got {f_min}, {f_max})")),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub price: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
}

/// `min(f_max, max(f_min, z exp(y - alpha)))`.
pub fn f_full(y: f64, z: f64, alpha: f64, f_min: f64, f_max: f64) -> f64 {
    let f = z * (y - alpha).exp();
    if f.is_nan() {
        return f_min;
    }
    f.clamp(f_min, f_max)
}

/// Lower Cholesky factor of the (x, y, z) correlation matrix.
pub fn correlation_cholesky(rho_xy: f64, rho_xz: f64, rho_yz: f64) -> Result<[[f64; 3]; 3]> {
    let c = [
        [1.0, rho_xy, rho_xz],
        [rho_xy, 1.0, rho_yz],
        [rho_xz, rho_yz, 1.0],
    ];
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|m| l[i][m] * l[j][m]).sum();
            if i == j {
                let d = c[i][i] - s;
                if !(d > 0.0) {
                    return Err(Error::PdFactorizationFailure);
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (c[i][j] - s) / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Terminal log-spot and log-average of each simulated path.
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub ln_x: Vec<f64>,
    pub ln_g: Vec<f64>,
}

/// Per-step constants shared by every path.
struct Kernel {
    steps: usize,
    dt: f64,
    sqrt_dt: f64,
    r: f64,
    t: f64,
    maturity: f64,
    ln_x0: f64,
    ln_g0: f64,
    vol: VolKernel,
}

enum VolKernel {
    Constant {
        drift: f64,
        diffusion: f64,
    },
    Full {
        chol: [[f64; 3]; 3],
        alpha: f64,
        y_decay: f64,
        y_sd: f64,
        alpha_prime: f64,
        z_decay: f64,
        z_sd: f64,
        y0: f64,
        z0: f64,
        f_min: f64,
        f_max: f64,
    },
}

#[derive(Clone, Copy)]
struct PathState {
    ln_x: f64,
    y: f64,
    z: f64,
    // Sum of interior ln X nodes.
    interior: f64,
}

impl Kernel {
    fn new(
        model: &ModelParams,
        vol: &VolSpec,
        t: f64,
        maturity: f64,
        x0: f64,
        g0: f64,
        cfg: &McConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        vol.validate()?;
        model.validate()?;
        if !(maturity > t && t >= 0.0) {
            return Err(Error::DegenerateHorizon(maturity - t));
        }
        if !(x0 > 0.0) {
            return Err(Error::NonPositivePrice {
                name: "x",
                value: x0,
            });
        }
        if !(g0 > 0.0) {
            return Err(Error::NonPositivePrice {
                name: "g",
                value: g0,
            });
        }
        let dt = (maturity - t) / cfg.n_steps as f64;
        let vol = match *vol {
            VolSpec::ConstantVol { sigma } => VolKernel::Constant {
                drift: (model.r - 0.5 * sigma * sigma) * dt,
                diffusion: sigma * dt.sqrt(),
            },
            VolSpec::FullModel { f_min, f_max } => {
                let chol = correlation_cholesky(model.rho_xy, model.rho_xz, model.rho_yz)?;
                let y_decay = (-dt / model.epsilon).exp();
                let z_decay = (-model.k * dt).exp();
                VolKernel::Full {
                    chol,
                    alpha: model.alpha,
                    y_decay,
                    // stationary variance of Y is nu^2
                    y_sd: model.nu * (1.0 - y_decay * y_decay).sqrt(),
                    alpha_prime: model.alpha_prime,
                    z_decay,
                    z_sd: model.beta * ((1.0 - z_decay * z_decay) / (2.0 * model.k)).sqrt(),
                    y0: model.alpha,
                    // Z starts on its mean path at the valuation time.
                    z0: model.alpha_prime + (model.z0 - model.alpha_prime) * (-model.k * t).exp(),
                    f_min,
                    f_max,
                }
            }
        };
        Ok(Self {
            steps: cfg.n_steps,
            dt,
            sqrt_dt: dt.sqrt(),
            r: model.r,
            t,
            maturity,
            ln_x0: x0.ln(),
            ln_g0: g0.ln(),
            vol,
        })
    }

    fn start(&self) -> PathState {
        let (y, z) = match self.vol {
            VolKernel::Constant { .. } => (0.0, 0.0),
            VolKernel::Full { y0, z0, .. } => (y0, z0),
        };
        PathState {
            ln_x: self.ln_x0,
            y,
            z,
            interior: 0.0,
        }
    }

    #[inline]
    fn step(&self, p: &mut PathState, n: &[f64; 3], sign: f64, last: bool) {
        match self.vol {
            VolKernel::Constant { drift, diffusion } => {
                p.ln_x += drift + diffusion * sign * n[0];
            }
            VolKernel::Full {
                chol,
                alpha,
                y_decay,
                y_sd,
                alpha_prime,
                z_decay,
                z_sd,
                f_min,
                f_max,
                ..
            } => {
                let wx = sign * n[0];
                let wy = sign * (chol[1][0] * n[0] + chol[1][1] * n[1]);
                let wz = sign * (chol[2][0] * n[0] + chol[2][1] * n[1] + chol[2][2] * n[2]);
                let f = f_full(p.y, p.z, alpha, f_min, f_max);
                p.ln_x += (self.r - 0.5 * f * f) * self.dt + f * self.sqrt_dt * wx;
                p.y = alpha + (p.y - alpha) * y_decay + y_sd * wy;
                p.z = alpha_prime + (p.z - alpha_prime) * z_decay + z_sd * wz;
            }
        }
        if !last {
            p.interior += p.ln_x;
        }
    }

    fn ln_average(&self, p: &PathState) -> f64 {
        let integral = self.dt * (p.interior + 0.5 * (self.ln_x0 + p.ln_x));
        (self.t * self.ln_g0 + integral) / self.maturity
    }

    fn normals_per_step(&self) -> usize {
        match self.vol {
            VolKernel::Constant { .. } => 1,
            VolKernel::Full { .. } => 3,
        }
    }

    /// Simulates sample `index` and hands each terminal `(ln X, ln G)` to
    /// `visit` (twice for an antithetic pair, plain path first).
    fn sample(&self, seed: u64, index: u64, antithetic: bool, mut visit: impl FnMut(f64, f64)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let k = self.normals_per_step();
        let mut a = self.start();
        let mut b = a;
        let mut n = [0.0; 3];
        for i in 0..self.steps {
            for slot in n.iter_mut().take(k) {
                *slot = StandardNormal.sample(&mut rng);
            }
            let last = i + 1 == self.steps;
            self.step(&mut a, &n, 1.0, last);
            if antithetic {
                self.step(&mut b, &n, -1.0, last);
            }
        }
        visit(a.ln_x, self.ln_average(&a));
        if antithetic {
            visit(b.ln_x, self.ln_average(&b));
        }
    }
}

/// Simulates `cfg.n_paths` paths on `[t, T]` from spot `x0` and running
/// average `g0`. Antithetic partners are stored next to each other.
pub fn simulate_paths(
    model: &ModelParams,
    vol: &VolSpec,
    t: f64,
    maturity: f64,
    x0: f64,
    g0: f64,
    cfg: &McConfig,
) -> Result<PathBatch> {
    let kernel = Kernel::new(model, vol, t, maturity, x0, g0, cfg)?;
    let per = if cfg.antithetic { 2 } else { 1 };
    let pairs: Vec<[(f64, f64); 2]> = (0..cfg.n_samples() as u64)
        .into_par_iter()
        .map(|i| {
            let mut out = [(0.0, 0.0); 2];
            let mut j = 0;
            kernel.sample(cfg.seed, i, cfg.antithetic, |lx, lg| {
                out[j] = (lx, lg);
                j += 1;
            });
            out
        })
        .collect();
    let mut batch = PathBatch {
        ln_x: Vec::with_capacity(pairs.len() * per),
        ln_g: Vec::with_capacity(pairs.len() * per),
    };
    for pair in &pairs {
        for &(lx, lg) in &pair[..per] {
            batch.ln_x.push(lx);
            batch.ln_g.push(lg);
        }
    }
    Ok(batch)
}

pub fn payoff(spec: &OptionSpec, x_t: f64, g_t: f64) -> f64 {
    match (spec.style, spec.kind) {
        (Style::FloatingStrike, Kind::Call) => (x_t - g_t).max(0.0),
        (Style::FloatingStrike, Kind::Put) => (g_t - x_t).max(0.0),
        (Style::FixedStrike, Kind::Call) => (g_t - spec.strike.unwrap_or(0.0)).max(0.0),
        (Style::FixedStrike, Kind::Put) => (spec.strike.unwrap_or(0.0) - g_t).max(0.0),
    }
}

/// Discounted mean of an arbitrary functional of `(X_T, G_T)`, with the
/// standard error taken over independent samples (antithetic pairs count
/// once).
pub fn expectation_mc(
    h: impl Fn(f64, f64) -> f64 + Sync,
    model: &ModelParams,
    vol: &VolSpec,
    state: &MarketState,
    maturity: f64,
    cfg: &McConfig,
) -> Result<McEstimate> {
    let kernel = Kernel::new(
        model,
        vol,
        state.t,
        maturity,
        state.spot(),
        state.average(),
        cfg,
    )?;
    let samples: Vec<f64> = (0..cfg.n_samples() as u64)
        .into_par_iter()
        .map(|i| {
            let (mut sum, mut count) = (0.0, 0.0);
            kernel.sample(cfg.seed, i, cfg.antithetic, |lx, lg| {
                sum += h(lx.exp(), lg.exp());
                count += 1.0;
            });
            sum / count
        })
        .collect();
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let disc = (-model.r * (maturity - state.t)).exp();
    Ok(McEstimate {
        price: disc * mean,
        std_error: disc * (var / n).sqrt(),
        n_paths: if cfg.antithetic {
            2 * samples.len()
        } else {
            samples.len()
        },
        n_steps: cfg.n_steps,
        seed: cfg.seed,
    })
}

pub fn price_mc(
    spec: &OptionSpec,
    model: &ModelParams,
    vol: &VolSpec,
    state: &MarketState,
    cfg: &McConfig,
) -> Result<McEstimate> {
    expectation_mc(
        |x, g| payoff(spec, x, g),
        model,
        vol,
        state,
        spec.maturity,
        cfg,
    )
}
