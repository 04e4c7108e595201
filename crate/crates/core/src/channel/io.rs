//! Channel JSON files.
//!
//! `{"dim": d, "repr": "kraus"|"super"|"choi", "picture": "schrodinger"|"heisenberg", "data": ...}`
//! where `data` is a list of `d x d` matrices for `kraus` and one `d² x d²` matrix otherwise.
//! Matrices are nested rows of `[re, im]` pairs.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Channel, Picture};
use crate::error::{Error, Result};
use crate::matcore::ComplexMatrix;
use crate::tolerance::Tolerances;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Repr {
    Kraus,
    Super,
    Choi,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub dim: usize,
    pub repr: Repr,
    pub picture: Picture,
    pub data: serde_json::Value,
}

impl ChannelFile {
    pub fn from_channel(c: &Channel, repr: Repr) -> Result<Self> {
        let data = match repr {
            Repr::Kraus => serde_json::to_value(c.kraus(1e-14)?)?,
            Repr::Super => serde_json::to_value(c.superop())?,
            Repr::Choi => serde_json::to_value(c.choi())?,
        };
        Ok(Self { dim: c.dim(), repr, picture: c.picture(), data })
    }

    pub fn into_channel(self, tol: &Tolerances) -> Result<Channel> {
        let d = self.dim;
        if d == 0 {
            return Err(Error::Validation("dim must be positive".into()));
        }
        let channel = match self.repr {
            Repr::Kraus => {
                let ops: Vec<ComplexMatrix> = serde_json::from_value(self.data)?;
                if let Some(k) = ops.iter().find(|k| k.shape() != (d, d)) {
                    return Err(Error::Validation(format!("Kraus operator of shape {:?}, expected {d}x{d}", k.shape())));
                }
                Channel::from_kraus_with(&ops, self.picture, tol)?
            }
            Repr::Super | Repr::Choi => {
                let m: ComplexMatrix = serde_json::from_value(self.data)?;
                if m.shape() != (d * d, d * d) {
                    return Err(Error::Validation(format!(
                        "matrix of shape {:?}, expected {}x{}",
                        m.shape(),
                        d * d,
                        d * d
                    )));
                }
                if self.repr == Repr::Super {
                    Channel::from_superop_with(m, self.picture, tol)?
                } else {
                    Channel::from_choi_with(&m, self.picture, tol)?
                }
            }
        };
        Ok(channel)
    }
}

impl Channel {
    pub fn from_json_str(s: &str, tol: &Tolerances) -> Result<Self> {
        let f: ChannelFile = serde_json::from_str(s)?;
        f.into_channel(tol)
    }

    pub fn read_json(path: &Path, tol: &Tolerances) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?, tol)
    }

    pub fn to_json_value(&self, repr: Repr) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(ChannelFile::from_channel(self, repr)?)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::amplitude_damping_kraus;

    #[test]
    fn round_trip_all_representations() {
        let c = Channel::from_kraus(&amplitude_damping_kraus(), Picture::Heisenberg).unwrap();
        for repr in [Repr::Kraus, Repr::Super, Repr::Choi] {
            let v = c.to_json_value(repr).unwrap();
            let back = Channel::from_json_str(&v.to_string(), &Tolerances::default()).unwrap();
            assert!(back.superop().approx_eq(c.superop(), 1e-14), "{repr:?}");
            assert_eq!(back.picture(), Picture::Heisenberg);
        }
    }

    #[test]
    fn rejects_malformed_files() {
        let tol = Tolerances::default();
        let bad_shape = r#"{"dim":2,"repr":"super","picture":"heisenberg","data":[[[1,0]]]}"#;
        assert!(matches!(Channel::from_json_str(bad_shape, &tol), Err(Error::Validation(_))));
        let bad_repr = r#"{"dim":2,"repr":"stinespring","picture":"heisenberg","data":[]}"#;
        assert!(matches!(Channel::from_json_str(bad_repr, &tol), Err(Error::Json(_))));
        let ragged = r#"{"dim":1,"repr":"kraus","picture":"schrodinger","data":[[[[1,0]],[[1,0],[0,0]]]]}"#;
        assert!(Channel::from_json_str(ragged, &tol).is_err());
        let empty = r#"{"dim":1,"repr":"kraus","picture":"schrodinger","data":[]}"#;
        assert!(matches!(Channel::from_json_str(empty, &tol), Err(Error::Validation(_))));
    }
}
