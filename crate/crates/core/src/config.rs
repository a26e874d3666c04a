use serde::Serialize;

use crate::augment::AugmentConfig;
use crate::simulator::{PromptMode, SelectStrategy, DEFAULT_GAMMA};

/// Chunk sizes swept by default.
pub const DEFAULT_CHUNKS: [usize; 6] = [3, 5, 7, 9, 11, 13];
pub const DEFAULT_BEAM: usize = 5;
pub const DEFAULT_TEMPLATE: &str = "llama2";

/// Everything a run depends on. Printed as JSON by every subcommand.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig {
    #[serde(flatten)]
    pub augment: AugmentConfig,
    pub chunks: Vec<usize>,
    pub beam: usize,
    pub gamma: f64,
    pub select: SelectStrategy,
    pub template: String,
    pub prompt: PromptMode,
    pub system_msg: String,
    pub workers: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            augment: AugmentConfig::default(),
            chunks: DEFAULT_CHUNKS.to_vec(),
            beam: DEFAULT_BEAM,
            gamma: DEFAULT_GAMMA,
            select: SelectStrategy::Ralcp { gamma: DEFAULT_GAMMA },
            template: DEFAULT_TEMPLATE.to_owned(),
            prompt: PromptMode::Conversational,
            system_msg: String::new(),
            workers: 0,
        }
    }
}

impl PipelineConfig {
    pub fn seed(&self) -> u64 {
        self.augment.seed
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_appear_in_resolved_config() {
        let json = PipelineConfig::default().to_json();
        for field in [
            r#""delta_min":2"#,
            r#""delta_max":10"#,
            r#""beta":0.5"#,
            r#""rho_min":0.5"#,
            r#""seed":0"#,
            r#""chunks":[3,5,7,9,11,13]"#,
            r#""beam":5"#,
            r#""gamma":0.6"#,
            r#""template":"llama2""#,
        ] {
            assert!(json.contains(field), "{field} missing from {json}");
        }
    }
}
