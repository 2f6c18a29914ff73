//! Experiment configuration file. Every section and key is optional; unknown
//! keys are rejected.

use std::path::Path;

use pisco_core::neighborhood::SubsetOrder;
use pisco_core::nik::{DcLossConfig, SirenConfig};
use pisco_core::phantom::{default_ellipses, Ellipse};
use pisco_core::pisco::PiscoConfig;
use pisco_core::trainer::{AdamConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhantomSection {
    /// Square image grid size.
    pub grid: usize,
    pub n_coils: usize,
    /// Breathing period in spokes.
    pub period: f64,
    pub ellipses: Vec<Ellipse>,
}

impl Default for PhantomSection {
    fn default() -> Self {
        Self {
            grid: 64,
            n_coils: 6,
            period: 200.0,
            ellipses: default_ellipses(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrajectorySection {
    pub n_spokes: usize,
    /// Readout samples per spoke; defaults to the grid size.
    pub n_fe: Option<usize>,
    #[serde(alias = "R")]
    pub r: usize,
}

impl Default for TrajectorySection {
    fn default() -> Self {
        Self {
            n_spokes: 1341,
            n_fe: None,
            r: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NikSection {
    pub layers: usize,
    pub hidden: usize,
    pub omega0: f64,
    pub n_freqs: usize,
    pub sigma_k: f64,
    pub sigma_t: f64,
}

impl Default for NikSection {
    fn default() -> Self {
        let s = SirenConfig::default();
        Self {
            layers: s.layers,
            hidden: s.hidden,
            omega0: s.omega0,
            n_freqs: s.n_freqs,
            sigma_k: s.sigma_k,
            sigma_t: s.sigma_t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub e_pre: usize,
    pub batch: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub seed: u64,
    /// Denominator floor of the data-consistency loss.
    pub dc_epsilon: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            epochs: t.epochs,
            e_pre: t.e_pre,
            batch: t.batch,
            lr: t.adam.lr,
            beta1: t.adam.beta1,
            beta2: t.adam.beta2,
            adam_eps: t.adam.eps,
            seed: t.seed,
            dc_epsilon: t.dc.epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PiscoSection {
    pub enabled: bool,
    pub alpha: f64,
    pub f_od: f64,
    pub lambda: f64,
    /// Learning rate of the regularizer's optimizer; defaults to `train.lr`.
    pub lr: Option<f64>,
    /// `"HxW"`, both odd.
    pub kernel: String,
    pub coils_out: Option<usize>,
    /// `"temporal"` or `"random"`.
    pub subsets: String,
    pub grad_through_p: bool,
}

impl Default for PiscoSection {
    fn default() -> Self {
        let p = PiscoConfig::default();
        Self {
            enabled: true,
            alpha: p.alpha,
            f_od: p.f_od,
            lambda: p.lambda,
            lr: None,
            kernel: "3x3".into(),
            coils_out: None,
            subsets: "temporal".into(),
            grad_through_p: p.grad_through_p,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub frames: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        Self { frames: 50 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub phantom: PhantomSection,
    pub trajectory: TrajectorySection,
    pub nik: NikSection,
    pub train: TrainSection,
    pub pisco: PiscoSection,
    pub eval: EvalSection,
}

fn parse_kernel(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("kernel must look like \"3x3\", got {s:?}"));
    let (h, w) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    Ok((h.trim().parse().map_err(|_| bad())?, w.trim().parse().map_err(|_| bad())?))
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let p = &self.phantom;
        if p.grid < 8 || !p.grid.is_multiple_of(2) {
            return Err(CliError::Config(format!("phantom.grid must be even and >= 8, got {}", p.grid)));
        }
        if p.n_coils == 0 {
            return Err(CliError::Config("phantom.n_coils must be >= 1".into()));
        }
        if self.trajectory.r == 0 || self.trajectory.n_spokes == 0 {
            return Err(CliError::Config("trajectory.n_spokes and trajectory.r must be >= 1".into()));
        }
        if self.eval.frames == 0 {
            return Err(CliError::Config("eval.frames must be >= 1".into()));
        }
        if !matches!(self.pisco.subsets.as_str(), "temporal" | "random") {
            return Err(CliError::Config(format!(
                "pisco.subsets must be \"temporal\" or \"random\", got {:?}",
                self.pisco.subsets
            )));
        }
        parse_kernel(&self.pisco.kernel)?;
        Ok(())
    }

    pub fn n_fe(&self) -> usize {
        self.trajectory.n_fe.unwrap_or(self.phantom.grid)
    }

    pub fn siren(&self) -> SirenConfig {
        let n = &self.nik;
        SirenConfig {
            hidden: n.hidden,
            layers: n.layers,
            omega0: n.omega0,
            n_freqs: n.n_freqs,
            sigma_k: n.sigma_k,
            sigma_t: n.sigma_t,
            seed: self.train.seed,
        }
    }

    pub fn training(&self, pisco_enabled: bool) -> Result<TrainConfig, CliError> {
        let t = &self.train;
        let p = &self.pisco;
        Ok(TrainConfig {
            epochs: t.epochs,
            e_pre: t.e_pre,
            batch: t.batch,
            adam: AdamConfig {
                lr: t.lr,
                beta1: t.beta1,
                beta2: t.beta2,
                eps: t.adam_eps,
            },
            pisco_lr: p.lr,
            seed: t.seed,
            pisco_enabled,
            pisco: PiscoConfig {
                alpha: p.alpha,
                f_od: p.f_od,
                lambda: p.lambda,
                coils_out_per_iter: p.coils_out,
                order: if p.subsets == "random" {
                    SubsetOrder::Random(t.seed)
                } else {
                    SubsetOrder::Temporal
                },
                grad_through_p: p.grad_through_p,
            },
            kernel_size: parse_kernel(&p.kernel)?,
            kernel_delta: Some(1.0 / self.n_fe() as f64),
            dc: DcLossConfig { epsilon: t.dc_epsilon },
        })
    }
}
