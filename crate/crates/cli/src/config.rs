use mlnfuse_core::fusion::FusionParams;
use mlnfuse_core::infer::InferenceParams;
use mlnfuse_core::learn::LearnParams;
use mlnfuse_core::pipeline::PipelineParams;
use serde::Deserialize;

/// Settings file. Tables left out keep the library defaults; `pipeline` and
/// `fusion` replace the scenario's own settings only when present.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub seed: Option<u64>,
    pub inference: InferenceParams,
    pub learn: LearnParams,
    pub pipeline: Option<PipelineParams>,
    pub fusion: Option<FusionParams>,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        let mut c: Config = toml::from_str(text)?;
        if let Some(s) = c.seed {
            c.set_seed(s);
        }
        Ok(c)
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = Some(seed);
        self.inference.seed = seed;
        self.learn.inference.seed = seed;
        if let Some(p) = &mut self.pipeline {
            p.inference.seed = seed;
        }
    }

    pub fn apply_sampler(&mut self, samples: Option<usize>, burn_in: Option<usize>, chains: Option<usize>, hard_weight: Option<f64>) {
        let inf = &mut self.inference;
        inf.samples = samples.unwrap_or(inf.samples);
        inf.burn_in = burn_in.or(inf.burn_in);
        inf.chains = chains.unwrap_or(inf.chains);
        inf.hard_weight = hard_weight.unwrap_or(inf.hard_weight);
    }
}
