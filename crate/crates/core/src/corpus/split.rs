//! Train/test splits: random, or independent by normalized surface form.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::types::LabeledMention;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitStrategy {
    /// Uniform shuffle; the first ⌈f·N⌉ mentions go to test.
    Random,
    /// Whole surface-form groups go to one side, so no test surface form is
    /// seen in training.
    Independent,
}

impl fmt::Display for SplitStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SplitStrategy::Random => "random",
            SplitStrategy::Independent => "independent",
        })
    }
}

impl FromStr for SplitStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(SplitStrategy::Random),
            "independent" => Ok(SplitStrategy::Independent),
            _ => Err(Error::Config(format!("unknown split strategy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusSplit {
    pub train: Vec<LabeledMention>,
    pub test: Vec<LabeledMention>,
    pub strategy: SplitStrategy,
    pub seed: u64,
}

/// Lowercased, with runs of whitespace collapsed to one space.
pub fn normalize_surface(surface: &str) -> String {
    surface.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

/// ⌈fraction·n⌉, tolerant of the representation error in `fraction`
/// (0.1·30 must give 3, not 4).
pub fn test_target(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) - 1e-9).ceil().max(0.0) as usize
}

/// Splits `mentions` deterministically for a given strategy and seed. Both
/// sides come back sorted by mention identity.
pub fn split(
    mentions: &[LabeledMention],
    strategy: SplitStrategy,
    test_fraction: f64,
    seed: u64,
) -> Result<CorpusSplit> {
    if mentions.is_empty() {
        return Err(Error::InvalidInput("cannot split an empty corpus".into()));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidInput(format!("test fraction {test_fraction} is outside (0, 1)")));
    }
    let n = mentions.len();
    let target = test_target(test_fraction, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut in_test = vec![false; n];
    match strategy {
        SplitStrategy::Random => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for &i in &order[..target] {
                in_test[i] = true;
            }
        }
        SplitStrategy::Independent => {
            let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
            for (i, m) in mentions.iter().enumerate() {
                groups.entry(normalize_surface(&m.surface)).or_default().push(i);
            }
            let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
            groups.shuffle(&mut rng);
            let mut taken = 0;
            for group in groups {
                if taken >= target {
                    break;
                }
                taken += group.len();
                for i in group {
                    in_test[i] = true;
                }
            }
        }
    }

    let mut train = Vec::with_capacity(n - target);
    let mut test = Vec::with_capacity(target);
    for (m, t) in mentions.iter().zip(in_test) {
        if t {
            test.push(m.clone());
        } else {
            train.push(m.clone());
        }
    }
    train.sort_by_key(LabeledMention::key);
    test.sort_by_key(LabeledMention::key);
    let out = CorpusSplit { train, test, strategy, seed };
    out.check_invariants()?;
    Ok(out)
}

impl CorpusSplit {
    /// For independent splits, verifies that no normalized surface form
    /// occurs on both sides.
    pub fn check_invariants(&self) -> Result<()> {
        if self.strategy == SplitStrategy::Independent {
            let train: HashSet<String> = self.train.iter().map(|m| normalize_surface(&m.surface)).collect();
            if let Some(m) = self.test.iter().find(|m| train.contains(&normalize_surface(&m.surface))) {
                return Err(Error::InvalidInput(format!("surface {:?} appears in both train and test", m.surface)));
            }
        }
        Ok(())
    }
}
