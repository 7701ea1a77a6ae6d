use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::RotationMatrix;
use crate::error::{Error, Result};

/// Proper symmetry group of an object. The symmetry axis is always body z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SymmetrySpec", into = "SymmetrySpec")]
pub enum SymmetryClass {
    NoProper,
    /// Invariant under rotations of `2pi/order` about body z. `order >= 2`.
    Cyclic { order: u32 },
    /// Invariant under any rotation about body z.
    Revolution,
}

impl SymmetryClass {
    pub fn cyclic(order: u32) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidObject(format!(
                "cyclic symmetry order must be at least 2, got {order}"
            )));
        }
        Ok(Self::Cyclic { order })
    }

    /// Order `k` used to bound `phi3`; 1 when the object has no proper symmetry.
    /// `None` for revolution objects, which carry no `phi3` at all.
    pub fn order(&self) -> Option<u32> {
        match *self {
            Self::NoProper => Some(1),
            Self::Cyclic { order } => Some(order),
            Self::Revolution => None,
        }
    }

    /// Range of `phi3`, i.e. `2pi/k`. Revolution objects report `2pi`; their
    /// `phi3` is pinned to zero anyway.
    pub fn phi3_range(&self) -> f64 {
        TAU / f64::from(self.order().unwrap_or(1))
    }

    /// Number of angle channels in the grid tensor (2 for revolution objects).
    pub fn angle_channels(&self) -> usize {
        match self {
            Self::Revolution => 2,
            _ => 3,
        }
    }

    /// Finite group elements `Rz(2pi j/k)`, `j = 0..k`. For revolution objects
    /// only the identity is returned; callers handle the continuous group by
    /// dropping the first two body axes.
    pub fn group_elements(&self) -> Vec<RotationMatrix> {
        match *self {
            Self::Cyclic { order } => (0..order)
                .map(|j| RotationMatrix::rot_z(TAU * f64::from(j) / f64::from(order)))
                .collect(),
            _ => vec![RotationMatrix::identity()],
        }
    }
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::NoProper => write!(f, "no proper symmetry"),
            Self::Cyclic { order } => write!(f, "cyclic, k={order}"),
            Self::Revolution => write!(f, "revolution"),
        }
    }
}

/// On-disk form: `{ type = "none" | "cyclic" | "revolution", k = .. }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SymmetrySpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
}

impl TryFrom<SymmetrySpec> for SymmetryClass {
    type Error = Error;

    fn try_from(spec: SymmetrySpec) -> Result<Self> {
        match spec.kind.as_str() {
            "none" | "no_proper" => Ok(Self::NoProper),
            "cyclic" => {
                let k = spec.k.ok_or_else(|| {
                    Error::InvalidObject("cyclic symmetry requires an order `k`".into())
                })?;
                Self::cyclic(k)
            }
            "revolution" => Ok(Self::Revolution),
            other => Err(Error::UnsupportedSymmetry(other.to_string())),
        }
    }
}

impl From<SymmetryClass> for SymmetrySpec {
    fn from(s: SymmetryClass) -> Self {
        match s {
            SymmetryClass::NoProper => SymmetrySpec {
                kind: "none".into(),
                k: None,
            },
            SymmetryClass::Cyclic { order } => SymmetrySpec {
                kind: "cyclic".into(),
                k: Some(order),
            },
            SymmetryClass::Revolution => SymmetrySpec {
                kind: "revolution".into(),
                k: None,
            },
        }
    }
}
