use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How hop-1 attended sequences are reduced to a vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pooling {
    Max,
    Mean,
    /// Both reductions, concatenated (max first).
    MaxMean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interaction {
    CoAttention,
    /// Score = ⟨mean(avg context, avg persona), avg response⟩; no cross-sequence attention.
    None,
}

/// Which matching components contribute to the feature vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub use_hop1: bool,
    pub use_hop2: bool,
    pub use_hop3: bool,
    pub pooling: Pooling,
    pub interaction: Interaction,
}

impl Default for AblationConfig {
    fn default() -> Self {
        Self::full()
    }
}

impl AblationConfig {
    pub const PRESETS: [&'static str; 7] = ["full", "-hop1", "-hop2", "+hop3", "-max+mean", "+mean", "biencoder"];

    pub fn full() -> Self {
        AblationConfig {
            use_hop1: true,
            use_hop2: true,
            use_hop3: false,
            pooling: Pooling::Max,
            interaction: Interaction::CoAttention,
        }
    }

    pub fn biencoder() -> Self {
        AblationConfig { interaction: Interaction::None, ..Self::full() }
    }

    /// Named ablation presets. `mean` is accepted for `-max+mean` and
    /// `max+mean` for `+mean`.
    pub fn preset(name: &str) -> Result<Self> {
        let full = Self::full();
        let cfg = match name {
            "full" => full,
            "-hop1" => AblationConfig { use_hop1: false, ..full },
            "-hop2" => AblationConfig { use_hop2: false, ..full },
            "+hop3" => AblationConfig { use_hop3: true, ..full },
            "-max+mean" | "mean" => AblationConfig { pooling: Pooling::Mean, ..full },
            "+mean" | "max+mean" => AblationConfig { pooling: Pooling::MaxMean, ..full },
            "biencoder" | "bi-encoder" => Self::biencoder(),
            other => return Err(Error::Config(format!("unknown ablation config {other:?}"))),
        };
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.interaction == Interaction::CoAttention && !(self.use_hop1 || self.use_hop2 || self.use_hop3) {
            return Err(Error::Config("co-attention needs at least one hop enabled".into()));
        }
        Ok(())
    }

    /// Width of one side's contribution from a single (source, response) pair.
    pub fn pair_width(&self, d: usize) -> usize {
        let hop1 = match self.pooling {
            Pooling::Max | Pooling::Mean => d,
            Pooling::MaxMean => 2 * d,
        };
        usize::from(self.use_hop1) * hop1 + usize::from(self.use_hop2) * d + usize::from(self.use_hop3) * d
    }

    /// Length of the final context and response feature vectors.
    pub fn feature_width(&self, d: usize) -> usize {
        match self.interaction {
            Interaction::CoAttention => 2 * self.pair_width(d),
            Interaction::None => d,
        }
    }
}

impl fmt::Display for AblationConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.interaction == Interaction::None {
            return write!(f, "biencoder");
        }
        let pooling = match self.pooling {
            Pooling::Max => "max",
            Pooling::Mean => "mean",
            Pooling::MaxMean => "max+mean",
        };
        write!(
            f,
            "hop1={},hop2={},hop3={},pool={pooling}",
            u8::from(self.use_hop1),
            u8::from(self.use_hop2),
            u8::from(self.use_hop3)
        )
    }
}

impl FromStr for AblationConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Ok(cfg) = Self::preset(s) {
            return Ok(cfg);
        }
        let mut cfg = Self::full();
        for kv in s.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad ablation entry {kv:?}")))?;
            let flag = || match v {
                "1" => Ok(true),
                "0" => Ok(false),
                _ => Err(Error::Config(format!("bad flag {v:?}"))),
            };
            match k {
                "hop1" => cfg.use_hop1 = flag()?,
                "hop2" => cfg.use_hop2 = flag()?,
                "hop3" => cfg.use_hop3 = flag()?,
                "pool" => {
                    cfg.pooling = match v {
                        "max" => Pooling::Max,
                        "mean" => Pooling::Mean,
                        "max+mean" => Pooling::MaxMean,
                        _ => return Err(Error::Config(format!("bad pooling {v:?}"))),
                    }
                }
                _ => return Err(Error::Config(format!("unknown ablation key {k:?}"))),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
