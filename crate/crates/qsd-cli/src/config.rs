//! The structured run configuration: one TOML file fully determines a run.

use serde::{Deserialize, Serialize};

use qsd::schemes::rng::{Lane, RunRng};
use qsd::schemes::{GrowthSchedule, Scheme, SchemeConfig, StepSchedule};
use qsd::{AbsorbingChain, QsdError, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfigFile {
    pub chain: ChainSection,
    pub scheme: SchemeSection,
    pub init: InitSection,
    pub run: RunSection,
}

/// Exactly one of `preset`, `file`, or `inline`.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ChainSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inline: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SchemeSection {
    pub kind: Scheme,
    pub horizon: u64,
    pub gamma_star: f64,
    pub growth: GrowthSchedule,
}

/// Either an explicit list of 1-based state labels or a set to draw from
/// uniformly, once, using the master seed.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct InitSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform_from: Option<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSection {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reps: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stride: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| QsdError::Config(format!("config parse: {e}")))
    }

    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }
}

/// A description of where the chain came from, with the matrix embedded so
/// manifests are self-contained.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainDescriptor {
    pub source: String,
    pub matrix: Vec<Vec<f64>>,
}

pub fn resolve_chain(section: &ChainSection) -> Result<(AbsorbingChain, ChainDescriptor)> {
    let provided = [
        section.preset.is_some(),
        section.file.is_some(),
        section.inline.is_some(),
    ]
    .iter()
    .filter(|x| **x)
    .count();
    if provided != 1 {
        return Err(QsdError::Config(
            "chain section needs exactly one of: preset, file, inline".into(),
        ));
    }
    if let Some(name) = &section.preset {
        let chain = AbsorbingChain::preset(name).ok_or_else(|| {
            QsdError::Config(format!(
                "unknown preset {name:?}; available: {:?}",
                AbsorbingChain::preset_names()
            ))
        })?;
        let matrix = chain_rows(&chain);
        return Ok((
            chain,
            ChainDescriptor {
                source: format!("preset:{name}"),
                matrix,
            },
        ));
    }
    if let Some(path) = &section.file {
        let chain = AbsorbingChain::parse_text(&std::fs::read_to_string(path)?)?;
        let matrix = chain_rows(&chain);
        return Ok((
            chain,
            ChainDescriptor {
                source: format!("file:{path}"),
                matrix,
            },
        ));
    }
    let rows = section.inline.as_ref().unwrap();
    let chain = AbsorbingChain::validate(rows)?;
    let matrix = chain_rows(&chain);
    Ok((
        chain,
        ChainDescriptor {
            source: "inline".into(),
            matrix,
        },
    ))
}

/// Loads a chain from a preset name or a file path.
pub fn chain_from_arg(arg: &str) -> Result<(AbsorbingChain, ChainDescriptor)> {
    if let Some(chain) = AbsorbingChain::preset(arg) {
        let matrix = chain_rows(&chain);
        return Ok((
            chain,
            ChainDescriptor {
                source: format!("preset:{arg}"),
                matrix,
            },
        ));
    }
    let chain = AbsorbingChain::parse_text(&std::fs::read_to_string(arg)?)?;
    let matrix = chain_rows(&chain);
    Ok((
        chain,
        ChainDescriptor {
            source: format!("file:{arg}"),
            matrix,
        },
    ))
}

fn chain_rows(chain: &AbsorbingChain) -> Vec<Vec<f64>> {
    let n = chain.dim() + 1;
    (0..n)
        .map(|i| (0..n).map(|j| chain.p(i, j)).collect())
        .collect()
}

/// Resolves the initial-state multiset of a configuration. The uniform draw
/// uses the master seed and is therefore identical across replications.
pub fn resolve_initial_states(
    cfg: &ConfigFile,
    chain: &AbsorbingChain,
    master_seed: u64,
) -> Result<Vec<usize>> {
    let scheme = cfg.scheme.kind;
    let needed = match scheme {
        Scheme::Single | Scheme::Branching => 1,
        _ => cfg.scheme.growth.a_of(cfg.scheme.horizon) as usize,
    };
    let states = match (&cfg.init.states, &cfg.init.uniform_from) {
        (Some(s), None) => s.clone(),
        (None, Some(set)) => {
            if set.is_empty() {
                return Err(QsdError::Config("uniform_from set is empty".into()));
            }
            for &s in set {
                if s < 1 || s > chain.dim() {
                    return Err(QsdError::Config(format!(
                        "uniform_from label {s} outside 1..={}",
                        chain.dim()
                    )));
                }
            }
            let mut rng = RunRng::new(master_seed);
            (0..needed)
                .map(|i| set[rng.index(Lane::Init, 0, i as u64, set.len() as u64) as usize])
                .collect()
        }
        _ => {
            return Err(QsdError::Config(
                "init section needs exactly one of: states, uniform_from".into(),
            ))
        }
    };
    if states.len() != needed {
        return Err(QsdError::Config(format!(
            "{} scheme needs {} initial states, got {}",
            scheme.name(),
            needed,
            states.len()
        )));
    }
    Ok(states)
}

/// Builds the engine configuration, leaving the per-run seed to the caller.
pub fn build_scheme_config(
    cfg: &ConfigFile,
    initial_states: Vec<usize>,
    stride_override: Option<u64>,
) -> Result<SchemeConfig> {
    let steps = StepSchedule::new(cfg.scheme.gamma_star)?;
    let stride = stride_override
        .or(cfg.run.stride)
        .unwrap_or_else(|| default_stride(cfg.scheme.kind, cfg.scheme.horizon, &cfg.scheme.growth));
    Ok(SchemeConfig {
        scheme: cfg.scheme.kind,
        horizon_n: cfg.scheme.horizon,
        growth: cfg.scheme.growth,
        steps,
        initial_states,
        seed: 0,
        trace_stride: stride,
    })
}

/// Batch-count stride giving roughly a thousand trace points per run.
pub fn default_stride(scheme: Scheme, n: u64, growth: &GrowthSchedule) -> u64 {
    let batches = match scheme {
        Scheme::Single | Scheme::FlemingViot => n * growth.a_of(n),
        Scheme::Independent | Scheme::Interacting => n,
        Scheme::Branching => growth.xi_budget(n),
    };
    (batches / 1000).max(1)
}
