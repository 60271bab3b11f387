use serde::{Deserialize, Serialize};

use crate::corpus::{ConceptType, TypeSet};
use crate::error::{Error, Result};

/// A ranking of all six types; earlier wins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ConceptType>", into = "Vec<ConceptType>")]
pub struct PriorityOrder([ConceptType; ConceptType::COUNT]);

impl Default for PriorityOrder {
    /// Mutation > Species > Gene > Chemical > Disease > CellLine, i.e. the
    /// taggers ranked by precision.
    fn default() -> Self {
        use ConceptType::*;
        PriorityOrder([Mutation, Species, Gene, Chemical, Disease, CellLine])
    }
}

impl PriorityOrder {
    pub fn new(order: &[ConceptType]) -> Result<Self> {
        let set: TypeSet = order.iter().copied().collect();
        if order.len() != ConceptType::COUNT || set != TypeSet::FULL {
            return Err(Error::Config(format!("priority order must list each of the six types once, got {order:?}")));
        }
        let mut arr = [ConceptType::Gene; ConceptType::COUNT];
        arr.copy_from_slice(order);
        Ok(PriorityOrder(arr))
    }

    pub fn as_slice(&self) -> &[ConceptType] {
        &self.0
    }

    /// Position of `t` in the order.
    pub fn rank(&self, t: ConceptType) -> usize {
        self.0.iter().position(|x| *x == t).expect("order is a permutation")
    }
}

impl TryFrom<Vec<ConceptType>> for PriorityOrder {
    type Error = Error;
    fn try_from(v: Vec<ConceptType>) -> Result<Self> {
        PriorityOrder::new(&v)
    }
}

impl From<PriorityOrder> for Vec<ConceptType> {
    fn from(o: PriorityOrder) -> Self {
        o.0.to_vec()
    }
}

/// The candidate that comes first in `order`.
pub fn rule_predict(candidates: TypeSet, order: &PriorityOrder) -> Result<ConceptType> {
    order
        .0
        .iter()
        .copied()
        .find(|t| candidates.contains(*t))
        .ok_or_else(|| Error::InvalidInput("rule baseline needs at least one candidate type".into()))
}
