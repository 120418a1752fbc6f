//! Domain selection by name.

use std::path::PathBuf;

use plite_core::domains::{
    make_battleship, make_deterministic_chain, make_rocksample, make_standard_rocksample, make_tiger,
};
use plite_core::{parse_model, PliteModel, PomdpLite};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Tiger { gamma: f64 },
    /// `None` picks the standard layout where one exists.
    RockSample { n: usize, k: usize, layout_seed: Option<u64> },
    Battleship { n: usize, k: usize },
    Chain { variants: usize, length: usize },
    File(PathBuf),
}

/// Receives the constructed model.
pub trait DomainVisitor {
    type Output;
    fn visit<M: PomdpLite + 'static>(self, model: &M, info: &DomainInfo) -> Self::Output;
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainInfo {
    pub name: String,
    pub default_max_steps: usize,
}

impl DomainSpec {
    /// Builds a spec from a CLI domain name and the optional size flags.
    pub fn from_args(
        domain: &str,
        n: Option<usize>,
        k: Option<usize>,
        gamma: Option<f64>,
        layout_seed: Option<u64>,
    ) -> Result<Self> {
        if let Some(path) = domain.strip_prefix("file:") {
            if path.is_empty() {
                return Err(HarnessError::Config("file: needs a path".into()));
            }
            return Ok(DomainSpec::File(PathBuf::from(path)));
        }
        match domain {
            "tiger" => Ok(DomainSpec::Tiger {
                gamma: gamma.unwrap_or(0.95),
            }),
            "rocksample" => Ok(DomainSpec::RockSample {
                n: n.unwrap_or(7),
                k: k.unwrap_or(8),
                layout_seed,
            }),
            "battleship" => Ok(DomainSpec::Battleship {
                n: n.unwrap_or(10),
                k: k.unwrap_or(5),
            }),
            "chain" => Ok(DomainSpec::Chain {
                variants: k.unwrap_or(4),
                length: n.unwrap_or(6),
            }),
            other => Err(HarnessError::Config(format!(
                "unknown domain `{other}` (expected tiger, rocksample, battleship, chain or file:<path>)"
            ))),
        }
    }

    pub fn name(&self) -> String {
        match self {
            DomainSpec::Tiger { .. } => "tiger".into(),
            DomainSpec::RockSample { n, k, .. } => format!("rocksample({n},{k})"),
            DomainSpec::Battleship { n, k } => format!("battleship({n},{k})"),
            DomainSpec::Chain { variants, length } => format!("chain({variants},{length})"),
            DomainSpec::File(path) => format!("file:{}", path.display()),
        }
    }

    pub fn with_model<V: DomainVisitor>(&self, visitor: V) -> Result<V::Output> {
        let name = self.name();
        match self {
            DomainSpec::Tiger { gamma } => {
                let model = make_tiger::<f64>(*gamma)?;
                Ok(visitor.visit(&model, &DomainInfo { name, default_max_steps: 100 }))
            }
            DomainSpec::RockSample { n, k, layout_seed } => {
                let model = match layout_seed {
                    Some(seed) => make_rocksample::<f64>(*n, *k, *seed)?,
                    None => make_standard_rocksample::<f64>(*n, *k)?,
                };
                Ok(visitor.visit(&model, &DomainInfo { name, default_max_steps: 200 }))
            }
            DomainSpec::Battleship { n, k } => {
                let mut rng = ChaCha8Rng::seed_from_u64(0);
                let model = make_battleship::<f64, _>(*n, *k, &mut rng)?;
                Ok(visitor.visit(&model, &DomainInfo {
                    name,
                    default_max_steps: n * n,
                }))
            }
            DomainSpec::Chain { variants, length } => {
                let model = make_deterministic_chain::<f64>(*variants, *length)?;
                Ok(visitor.visit(&model, &DomainInfo {
                    name,
                    default_max_steps: 100,
                }))
            }
            DomainSpec::File(path) => {
                let model = load_model(path)?;
                Ok(visitor.visit(&model, &DomainInfo {
                    name,
                    default_max_steps: 100,
                }))
            }
        }
    }
}

pub fn load_model(path: &std::path::Path) -> Result<PliteModel<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_model(&text).map_err(|e| HarnessError::Plite(e.into()))
}
