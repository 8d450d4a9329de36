//! Method identifiers shared by tuning, benchmarking and the C ABI.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;
use crate::estimators::{DistMetricKind, ScalarMethod};
use crate::matrix::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    RowNN,
    ColNN,
    TSNN,
    DRNN,
    AutoNN,
    AWNN,
    KernelNN(Axis),
    W2NN(Axis),
    USVT,
    SoftImpute,
}

impl Method {
    pub const ALL: [Method; 12] = [
        Method::RowNN,
        Method::ColNN,
        Method::TSNN,
        Method::DRNN,
        Method::AutoNN,
        Method::AWNN,
        Method::KernelNN(Axis::Row),
        Method::KernelNN(Axis::Col),
        Method::W2NN(Axis::Row),
        Method::W2NN(Axis::Col),
        Method::USVT,
        Method::SoftImpute,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::RowNN => "rownn",
            Method::ColNN => "colnn",
            Method::TSNN => "tsnn",
            Method::DRNN => "drnn",
            Method::AutoNN => "autonn",
            Method::AWNN => "awnn",
            Method::KernelNN(Axis::Row) => "kernelnn",
            Method::KernelNN(Axis::Col) => "kernelnn-col",
            Method::W2NN(Axis::Row) => "w2nn",
            Method::W2NN(Axis::Col) => "w2nn-col",
            Method::USVT => "usvt",
            Method::SoftImpute => "softimpute",
        }
    }

    /// Operates on distributional panels rather than scalar ones.
    pub fn is_distributional(self) -> bool {
        matches!(self, Method::KernelNN(_) | Method::W2NN(_))
    }

    pub fn scalar(self) -> Option<ScalarMethod> {
        match self {
            Method::RowNN => Some(ScalarMethod::RowNN),
            Method::ColNN => Some(ScalarMethod::ColNN),
            Method::TSNN => Some(ScalarMethod::TSNN),
            Method::DRNN => Some(ScalarMethod::DRNN),
            Method::AutoNN => Some(ScalarMethod::AutoNN),
            _ => None,
        }
    }

    pub fn dist(self) -> Option<(DistMetricKind, Axis)> {
        match self {
            Method::KernelNN(axis) => Some((DistMetricKind::Mmd2, axis)),
            Method::W2NN(axis) => Some((DistMetricKind::W2Squared, axis)),
            _ => None,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.id() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method '{s}'")))
    }
}

impl Serialize for Method {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
