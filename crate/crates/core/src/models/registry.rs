use super::{hopf_s3, htype_group, quaternionic_hopf_s7, FoliationModel};
use crate::clifford::build_rep;
use crate::error::{HtypeError, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Parsed registry key: `group:n,m`, `hopf-s3[@s]`, `qhopf-s7[@s]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModelId {
    Group { n: usize, m: usize },
    HopfS3 { scale: f64 },
    QHopfS7 { scale: f64 },
}

impl FromStr for ModelId {
    type Err = HtypeError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || HtypeError::UnknownModel(s.to_string());
        let (head, scale) = match s.split_once('@') {
            Some((h, sc)) => (h, Some(sc.parse::<f64>().map_err(|_| bad())?)),
            None => (s, None),
        };
        if let Some(dims) = head.strip_prefix("group:") {
            if scale.is_some() {
                return Err(bad());
            }
            let (n, m) = dims.split_once(',').ok_or_else(bad)?;
            let n = n.trim().parse().map_err(|_| bad())?;
            let m = m.trim().parse().map_err(|_| bad())?;
            return Ok(ModelId::Group { n, m });
        }
        let scale = scale.unwrap_or(1.0);
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(HtypeError::InvalidArgument(format!("scale must be positive in '{s}'")));
        }
        match head {
            "hopf-s3" => Ok(ModelId::HopfS3 { scale }),
            "qhopf-s7" => Ok(ModelId::QHopfS7 { scale }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for ModelId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelId::Group { n, m } => write!(f, "group:{n},{m}"),
            ModelId::HopfS3 { scale } => write!(f, "hopf-s3@{scale}"),
            ModelId::QHopfS7 { scale } => write!(f, "qhopf-s7@{scale}"),
        }
    }
}

impl ModelId {
    pub fn with_scale(self, s: Option<f64>) -> Self {
        match (self, s) {
            (ModelId::HopfS3 { .. }, Some(scale)) => ModelId::HopfS3 { scale },
            (ModelId::QHopfS7 { .. }, Some(scale)) => ModelId::QHopfS7 { scale },
            (id, _) => id,
        }
    }

    pub fn build(&self) -> Result<FoliationModel> {
        match *self {
            ModelId::Group { n, m } => Ok(htype_group(build_rep(n, m)?)),
            ModelId::HopfS3 { scale } => hopf_s3(scale),
            ModelId::QHopfS7 { scale } => quaternionic_hopf_s7(scale),
        }
    }
}

pub fn model_from_id(id: &str) -> Result<FoliationModel> {
    id.parse::<ModelId>()?.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_ids() {
        assert_eq!("group:4,3".parse::<ModelId>().unwrap(), ModelId::Group { n: 4, m: 3 });
        assert_eq!("hopf-s3".parse::<ModelId>().unwrap(), ModelId::HopfS3 { scale: 1.0 });
        assert_eq!("qhopf-s7@2".parse::<ModelId>().unwrap(), ModelId::QHopfS7 { scale: 2.0 });
        assert!("qhopf-s7@-1".parse::<ModelId>().is_err());
        assert!("torus".parse::<ModelId>().is_err());
        assert!(model_from_id("group:3,1").is_err());
    }
}
