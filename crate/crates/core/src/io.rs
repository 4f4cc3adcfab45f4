// Copyright 2026 EEQT Contributors
// SPDX-License-Identifier: Apache-2.0

//! JSON model and state files.
//!
//! A complex scalar is `[re, im]`; a matrix is a row-major array of rows.
//! Sector indices are 0-based.
//!
//! ```json
//! {"kind": "hybrid", "dims": [2, 2],
//!  "hamiltonians": [M1, M2],
//!  "couplings": [{"to": 1, "from": 0, "matrix": G}]}
//! {"kind": "pure", "dim": 2, "hamiltonian": H, "lindblad_ops": [A]}
//! {"kind": "pure_state", "sector": 0, "psi": [[1, 0], [0, 0]]}
//! {"kind": "density", "blocks": [R1, R2]}
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{
    embed_pure_state, BlockDensity, BlockMatrix, Coupling, HybridModel, HybridPureState,
    Lindbladian, PureLindbladModel,
};
use crate::numerics::{c64, CMatrix, CVector, ToleranceConfig};

pub type ComplexJson = [f64; 2];
pub type MatrixJson = Vec<Vec<ComplexJson>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingJson {
    pub to: usize,
    pub from: usize,
    pub matrix: MatrixJson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelFile {
    Hybrid {
        dims: Vec<usize>,
        hamiltonians: Vec<MatrixJson>,
        #[serde(default)]
        couplings: Vec<CouplingJson>,
    },
    Pure {
        dim: usize,
        hamiltonian: MatrixJson,
        #[serde(default)]
        lindblad_ops: Vec<MatrixJson>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateFile {
    PureState {
        sector: usize,
        psi: Vec<ComplexJson>,
    },
    Density {
        blocks: Vec<MatrixJson>,
    },
}

/// Either kind of model, as read from a file.
#[derive(Debug, Clone)]
pub enum AnyModel {
    Hybrid(HybridModel),
    Pure(PureLindbladModel),
}

impl Lindbladian for AnyModel {
    fn dims(&self) -> &[usize] {
        match self {
            AnyModel::Hybrid(m) => m.dims(),
            AnyModel::Pure(m) => m.dims(),
        }
    }

    fn liouville_rhs(&self, rho: &BlockMatrix) -> Result<BlockMatrix> {
        match self {
            AnyModel::Hybrid(m) => m.liouville_rhs(rho),
            AnyModel::Pure(m) => m.liouville_rhs(rho),
        }
    }

    fn heisenberg_rhs(&self, a: &BlockMatrix) -> Result<BlockMatrix> {
        match self {
            AnyModel::Hybrid(m) => m.heisenberg_rhs(a),
            AnyModel::Pure(m) => m.heisenberg_rhs(a),
        }
    }
}

pub fn matrix_from_json(m: &MatrixJson) -> Result<CMatrix> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        return Err(Error::Parse("ragged matrix rows".into()));
    }
    let data: Vec<_> = m.iter().flatten().map(|z| c64(z[0], z[1])).collect();
    Ok(CMatrix::from_row_slice(rows, cols, &data))
}

pub fn matrix_to_json(m: &CMatrix) -> MatrixJson {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn vector_from_json(v: &[ComplexJson]) -> CVector {
    CVector::from_iterator(v.len(), v.iter().map(|z| c64(z[0], z[1])))
}

pub fn vector_to_json(v: &CVector) -> serde_json::Value {
    serde_json::Value::Array(v.iter().map(|z| serde_json::json!([z.re, z.im])).collect())
}

impl ModelFile {
    pub fn into_model(self, tol: &ToleranceConfig) -> Result<AnyModel> {
        match self {
            ModelFile::Hybrid {
                dims,
                hamiltonians,
                couplings,
            } => {
                let hs = hamiltonians
                    .iter()
                    .map(matrix_from_json)
                    .collect::<Result<Vec<_>>>()?;
                if hs.len() != dims.len() {
                    return Err(Error::Dimension(format!(
                        "{} Hamiltonians for {} sectors",
                        hs.len(),
                        dims.len()
                    )));
                }
                for (alpha, (h, &n)) in hs.iter().zip(&dims).enumerate() {
                    if h.shape() != (n, n) {
                        return Err(Error::Dimension(format!(
                            "Hamiltonian of sector {alpha} is {:?}, dims say {n}",
                            h.shape()
                        )));
                    }
                }
                let cs = couplings
                    .iter()
                    .map(|c| Ok(Coupling::new(c.to, c.from, matrix_from_json(&c.matrix)?)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(AnyModel::Hybrid(HybridModel::new(hs, cs, tol)?))
            }
            ModelFile::Pure {
                dim,
                hamiltonian,
                lindblad_ops,
            } => {
                let h = matrix_from_json(&hamiltonian)?;
                if h.shape() != (dim, dim) {
                    return Err(Error::Dimension(format!(
                        "Hamiltonian is {:?}, dim says {dim}",
                        h.shape()
                    )));
                }
                let ops = lindblad_ops
                    .iter()
                    .map(matrix_from_json)
                    .collect::<Result<Vec<_>>>()?;
                Ok(AnyModel::Pure(PureLindbladModel::new(h, ops, tol)?))
            }
        }
    }

    pub fn from_model(model: &AnyModel) -> Self {
        match model {
            AnyModel::Hybrid(m) => ModelFile::Hybrid {
                dims: m.dims().to_vec(),
                hamiltonians: m.hamiltonians().iter().map(matrix_to_json).collect(),
                couplings: m
                    .couplings()
                    .iter()
                    .map(|c| CouplingJson {
                        to: c.to,
                        from: c.from,
                        matrix: matrix_to_json(&c.matrix),
                    })
                    .collect(),
            },
            AnyModel::Pure(m) => ModelFile::Pure {
                dim: m.dim(),
                hamiltonian: matrix_to_json(m.hamiltonian()),
                lindblad_ops: m.lindblad_ops().iter().map(matrix_to_json).collect(),
            },
        }
    }
}

impl StateFile {
    /// The pure state, if this file holds one.
    pub fn pure_state(&self, dims: &[usize], tol: &ToleranceConfig) -> Result<HybridPureState> {
        match self {
            StateFile::PureState { sector, psi } => {
                let x = HybridPureState::new(*sector, vector_from_json(psi), tol)?;
                x.check_against(dims)?;
                Ok(x)
            }
            StateFile::Density { .. } => Err(Error::InvalidConfig(
                "a pure_state file is required for trajectory methods".into(),
            )),
        }
    }

    pub fn density(&self, dims: &[usize], tol: &ToleranceConfig) -> Result<BlockDensity> {
        match self {
            StateFile::PureState { .. } => embed_pure_state(&self.pure_state(dims, tol)?, dims),
            StateFile::Density { blocks } => {
                let rho = BlockMatrix::new(
                    blocks
                        .iter()
                        .map(matrix_from_json)
                        .collect::<Result<Vec<_>>>()?,
                );
                rho.check_shape(dims)?;
                rho.validate_density(tol)?;
                Ok(rho)
            }
        }
    }

    pub fn from_pure(x: &HybridPureState) -> Self {
        StateFile::PureState {
            sector: x.sector,
            psi: x.psi.iter().map(|z| [z.re, z.im]).collect(),
        }
    }

    pub fn from_density(rho: &BlockDensity) -> Self {
        StateFile::Density {
            blocks: rho.blocks.iter().map(matrix_to_json).collect(),
        }
    }
}

pub fn parse_model(text: &str, tol: &ToleranceConfig) -> Result<AnyModel> {
    serde_json::from_str::<ModelFile>(text)?.into_model(tol)
}

pub fn load_model(path: &Path, tol: &ToleranceConfig) -> Result<AnyModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    parse_model(&text, tol)
}

pub fn load_state(path: &Path) -> Result<StateFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const DETECTOR: &str = r#"{
        "kind": "hybrid",
        "dims": [2, 2],
        "hamiltonians": [[[[0,0],[0,0]],[[0,0],[0,0]]], [[[0,0],[0,0]],[[0,0],[0,0]]]],
        "couplings": [{"to": 1, "from": 0, "matrix": [[[1,0],[0,0]],[[0,0],[1,0]]]}]
    }"#;

    #[test]
    fn parses_hybrid_model() {
        let m = parse_model(DETECTOR, &ToleranceConfig::default()).unwrap();
        match &m {
            AnyModel::Hybrid(h) => {
                assert_eq!(h.dims(), &[2, 2]);
                assert_eq!(h.coupling(1, 0).unwrap(), &CMatrix::identity(2, 2));
            }
            _ => panic!("expected hybrid"),
        }
        let back = serde_json::to_string(&ModelFile::from_model(&m)).unwrap();
        let again = parse_model(&back, &ToleranceConfig::default()).unwrap();
        assert_eq!(ModelFile::from_model(&again), ModelFile::from_model(&m));
    }

    #[test]
    fn rejects_bad_models() {
        let tol = ToleranceConfig::default();
        let diag = r#"{"kind":"hybrid","dims":[1],"hamiltonians":[[[[0,0]]]],
            "couplings":[{"to":0,"from":0,"matrix":[[[1,0]]]}]}"#;
        assert_eq!(
            parse_model(diag, &tol).unwrap_err(),
            Error::DiagonalCouplingPresent(0)
        );
        let nonherm = r#"{"kind":"pure","dim":2,"hamiltonian":[[[0,0],[1,0]],[[0,0],[0,0]]]}"#;
        assert_eq!(
            parse_model(nonherm, &tol).unwrap_err(),
            Error::NonHermitian(0)
        );
        assert!(matches!(
            parse_model("{\"kind\":\"other\"}", &tol),
            Err(Error::Parse(_))
        ));
        let ragged = r#"{"kind":"pure","dim":2,"hamiltonian":[[[0,0],[0,0]],[[0,0]]]}"#;
        assert!(parse_model(ragged, &tol).is_err());
    }

    #[test]
    fn states() {
        let tol = ToleranceConfig::default();
        let s: StateFile =
            serde_json::from_str(r#"{"kind":"pure_state","sector":1,"psi":[[0,0],[1,0]]}"#)
                .unwrap();
        let x = s.pure_state(&[2, 2], &tol).unwrap();
        assert_eq!(x.sector, 1);
        let rho = s.density(&[2, 2], &tol).unwrap();
        assert_eq!(rho.blocks[1][(1, 1)].re, 1.0);

        let d: StateFile = serde_json::from_str(
            r#"{"kind":"density","blocks":[[[[0.25,0],[0,0]],[[0,0],[0.75,0]]]]}"#,
        )
        .unwrap();
        assert!(d.pure_state(&[2], &tol).is_err());
        assert_eq!(d.density(&[2], &tol).unwrap().blocks[0][(1, 1)].re, 0.75);
        let bad: StateFile =
            serde_json::from_str(r#"{"kind":"density","blocks":[[[[2,0],[0,0]],[[0,0],[0,0]]]]}"#)
                .unwrap();
        assert!(matches!(
            bad.density(&[2], &tol),
            Err(Error::BadTrace { .. })
        ));
    }
}
