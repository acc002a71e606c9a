//! Run configuration: a JSON document whose sections mirror the library types,
//! with command-line flags layered on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::ensemble::{DichotomyGates, EnsembleConfig};
use crate::error::{Error, Result};
use crate::gates;
use crate::manifold::{Chart, ExpansionFactor, Interval, ModelSpec};
use crate::sde::{DiffusionKind, DiffusionSpec, InitSpec, Scheme, StepConfig};

pub const DEFAULT_H: f64 = 1e-2;
pub const DEFAULT_S_MAX: f64 = 10.0;
pub const DEFAULT_TDOT: f64 = 2.0;
pub const DEFAULT_SEED: u64 = 7;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diffusion: Option<DiffusionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<StepConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleSection>,
    #[serde(default)]
    pub output: OutputSection,
    /// Chart point for `curvature`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSection {
    pub n_paths: u64,
    #[serde(default)]
    pub snapshots: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default)]
    pub verdicts: Vec<VerdictRequest>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "test", rename_all = "snake_case", deny_unknown_fields)]
pub enum VerdictRequest {
    TdotToOne {
        #[serde(default = "default_band")]
        band: f64,
    },
    AfuncDivergence,
    SpaceConvergence {
        #[serde(default = "default_shrink")]
        shrink: f64,
    },
    /// The configured ensemble is the exploding scenario; the settling one is
    /// run from `b_init` with `b_step`.
    EnergyDichotomy {
        #[serde(default = "gates::dichotomy_gates")]
        gates: DichotomyGates,
        b_init: InitSpec,
        b_step: StepConfig,
    },
}

fn default_band() -> f64 {
    gates::R_TDOT_BAND
}

fn default_shrink() -> f64 {
    gates::R_SHRINK
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default = "default_stride")]
    pub stride: u64,
}

fn default_stride() -> u64 {
    1
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { path: None, stride: 1 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ModelKind {
    Minkowski,
    Warped,
    Rw,
    Eds,
}

/// Flag values that override the file; `None` leaves the file value alone.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub model: Option<ModelKind>,
    pub c: Option<f64>,
    pub k: Option<i32>,
    pub rho: Option<f64>,
    pub kind: Option<DiffusionKind>,
    pub h: Option<f64>,
    pub s_max: Option<f64>,
    pub scheme: Option<Scheme>,
    pub seed: Option<u64>,
    pub paths: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub stride: Option<u64>,
    pub point: Option<Vec<f64>>,
    pub tdot: Option<f64>,
    pub snapshots: Option<Vec<f64>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::invalid(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::invalid(format!("invalid config: {e}")))
    }

    pub fn to_json(&self) -> String {
        crate::io::to_json(self)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(kind) = o.model {
            self.model = Some(match kind {
                ModelKind::Minkowski => ModelSpec::minkowski(3),
                ModelKind::Eds => {
                    let c = o.c.or(self.model.as_ref().and_then(|m| m.eds_exponent()));
                    ModelSpec::eds(c.ok_or_else(|| Error::invalid("--model eds needs --c"))?)
                }
                ModelKind::Rw => ModelSpec::Rw {
                    k: o.k.ok_or_else(|| Error::invalid("--model rw needs --k"))?,
                    alpha: ExpansionFactor::Power { c: o.c.unwrap_or(2.0 / 3.0) },
                    chart: Chart::Spherical,
                    interval: Interval::default(),
                },
                ModelKind::Warped => match &self.model {
                    Some(m @ ModelSpec::Warped { .. }) => m.clone(),
                    _ => return Err(Error::invalid("--model warped needs a warped model section in --config")),
                },
            });
        } else if o.c.is_some() || o.k.is_some() {
            match self.model.as_mut() {
                Some(ModelSpec::Eds { c, .. }) if o.c.is_some() => *c = o.c.unwrap_or(*c),
                Some(ModelSpec::Rw { k, alpha, .. }) => {
                    if let Some(nk) = o.k {
                        *k = nk;
                    }
                    if let (Some(nc), ExpansionFactor::Power { c }) = (o.c, alpha) {
                        *c = nc;
                    }
                }
                _ => return Err(Error::invalid("--c/--k need --model eds or rw")),
            }
        }
        if o.kind.is_some() || o.rho.is_some() {
            let base = self.diffusion.unwrap_or(DiffusionSpec::new(DiffusionKind::Basic, 1.0));
            self.diffusion = Some(DiffusionSpec::new(o.kind.unwrap_or(base.kind), o.rho.unwrap_or(base.rho)));
        }
        if o.h.is_some() || o.s_max.is_some() || o.scheme.is_some() {
            let mut step = self.step.unwrap_or(StepConfig::new(DEFAULT_H, DEFAULT_S_MAX));
            step.h = o.h.unwrap_or(step.h);
            step.s_max = o.s_max.unwrap_or(step.s_max);
            step.scheme = o.scheme.unwrap_or(step.scheme);
            self.step = Some(step);
        }
        if o.point.is_some() {
            self.point = o.point.clone();
        }
        if o.point.is_some() || o.tdot.is_some() {
            let mut init = self.init.clone().unwrap_or(InitSpec { point: vec![], tdot: DEFAULT_TDOT, direction: None });
            if let Some(p) = &o.point {
                init.point = p.clone();
            }
            init.tdot = o.tdot.unwrap_or(init.tdot);
            self.init = Some(init);
        }
        if o.paths.is_some() || o.threads.is_some() || o.snapshots.is_some() {
            let mut ens = self.ensemble.clone().unwrap_or(EnsembleSection {
                n_paths: 100,
                snapshots: vec![],
                threads: None,
                verdicts: vec![],
            });
            ens.n_paths = o.paths.unwrap_or(ens.n_paths);
            ens.threads = o.threads.or(ens.threads);
            if let Some(s) = &o.snapshots {
                ens.snapshots = s.clone();
            }
            self.ensemble = Some(ens);
        }
        if o.seed.is_some() {
            self.seed = o.seed;
        }
        if o.out.is_some() {
            self.output.path = o.out.clone();
        }
        if let Some(s) = o.stride {
            self.output.stride = s;
        }
        Ok(())
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let m = self.model.clone().ok_or_else(|| Error::invalid("no model given (--model or config)"))?;
        m.validate()?;
        Ok(m)
    }

    pub fn diffusion(&self, model: &ModelSpec) -> Result<DiffusionSpec> {
        let d = self.diffusion.ok_or_else(|| Error::invalid("no diffusion given (--kind or config)"))?;
        d.validate(model)?;
        Ok(d)
    }

    pub fn step(&self) -> Result<StepConfig> {
        let s = self.step.unwrap_or(StepConfig::new(DEFAULT_H, DEFAULT_S_MAX));
        s.validate()?;
        Ok(s)
    }

    /// The configured initial condition, or a default one at t = 1 inside the chart.
    pub fn init(&self, model: &ModelSpec) -> Result<InitSpec> {
        let mut init = self.init.clone().unwrap_or(InitSpec { point: vec![], tdot: DEFAULT_TDOT, direction: None });
        if init.point.is_empty() {
            init.point = default_point(model);
        }
        init.frame_state(model)?;
        Ok(init)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn ensemble_config(&self) -> Result<(EnsembleConfig, Vec<VerdictRequest>)> {
        let model = self.model()?;
        let ens = self.ensemble.clone().ok_or_else(|| Error::invalid("no ensemble section (--paths or config)"))?;
        let cfg = EnsembleConfig {
            diffusion: self.diffusion(&model)?,
            init: self.init(&model)?,
            step: self.step()?,
            n_paths: ens.n_paths,
            seed: self.seed(),
            snapshots: ens.snapshots,
            threads: ens.threads,
            model,
        };
        cfg.validate()?;
        Ok((cfg, ens.verdicts))
    }
}

/// t = 1 (or 0 for Minkowski) with spatial coordinates inside every chart.
pub fn default_point(model: &ModelSpec) -> Vec<f64> {
    let t = if model.has_time_origin() { 1.0 } else { 0.0 };
    let spatial = match model.warp().factor {
        crate::manifold::RiemannFactor::ConstantCurvature { .. } => vec![0.5, std::f64::consts::FRAC_PI_2, 0.0],
        crate::manifold::RiemannFactor::SphereTimesLine => vec![std::f64::consts::FRAC_PI_2, 0.0, 0.0],
        _ => vec![0.0; model.dim()],
    };
    std::iter::once(t).chain(spatial).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse(r#"{"model": {"kind": "eds", "c": 0.5}, "bogus": 1}"#).is_err());
        assert!(RunConfig::parse(r#"{"model": {"kind": "eds", "c": 0.5, "q": 1}}"#).is_err());
    }

    #[test]
    fn flags_override_file() {
        let mut cfg = RunConfig::parse(r#"{"model": {"kind": "eds", "c": 0.5}, "step": {"h": 0.01, "s_max": 2}}"#).unwrap();
        cfg.apply(&Overrides { c: Some(0.7), h: Some(0.005), ..Default::default() }).unwrap();
        assert_eq!(cfg.model().unwrap().eds_exponent(), Some(0.7));
        assert_eq!(cfg.step().unwrap().h, 0.005);
        assert_eq!(cfg.step().unwrap().s_max, 2.0);
    }
}
