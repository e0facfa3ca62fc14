use serde::{Deserialize, Serialize};

use super::{make_cyclic, make_dihedral, make_symmetric, FiniteGroup, LieAlgebraBasis, MAX_VERIFIED_ORDER};
use crate::numerics::{ComplexMatrix, Tolerance};
use crate::serial::matrix_list;
use crate::{Error, Result};

/// Serializable description of a symmetry source.
///
/// JSON form: `{"kind": "cyclic"|"symmetric"|"dihedral"|"table"|"lie", ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GroupSpec {
    Cyclic {
        n: usize,
    },
    Symmetric {
        n: usize,
    },
    Dihedral {
        n: usize,
    },
    Table {
        table: Vec<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        generators: Option<Vec<usize>>,
        /// Tables above the exhaustive-check cap must be declared trusted.
        #[serde(default)]
        trusted: bool,
    },
    Lie {
        #[serde(with = "matrix_list")]
        generators: Vec<ComplexMatrix>,
    },
}

/// A finite group or a Lie algebra, the two sources a representation can have.
#[derive(Clone, Debug, PartialEq)]
pub enum SymmetrySource {
    Finite(FiniteGroup),
    Lie(LieAlgebraBasis),
}

impl SymmetrySource {
    pub fn as_finite(&self) -> Option<&FiniteGroup> {
        match self {
            SymmetrySource::Finite(g) => Some(g),
            SymmetrySource::Lie(_) => None,
        }
    }

    pub fn as_lie(&self) -> Option<&LieAlgebraBasis> {
        match self {
            SymmetrySource::Lie(a) => Some(a),
            SymmetrySource::Finite(_) => None,
        }
    }

    /// Lossless description: finite groups become explicit tables.
    pub fn to_spec(&self) -> GroupSpec {
        match self {
            SymmetrySource::Finite(g) => GroupSpec::Table {
                table: g.table(),
                labels: Some(g.labels().to_vec()),
                generators: Some(g.generators().to_vec()),
                trusted: g.order() > MAX_VERIFIED_ORDER,
            },
            SymmetrySource::Lie(a) => GroupSpec::Lie {
                generators: a.generators().to_vec(),
            },
        }
    }
}

impl GroupSpec {
    pub fn build(&self, tol: &Tolerance) -> Result<SymmetrySource> {
        Ok(match self {
            GroupSpec::Cyclic { n } => SymmetrySource::Finite(make_cyclic(*n)?),
            GroupSpec::Symmetric { n } => SymmetrySource::Finite(make_symmetric(*n)?),
            GroupSpec::Dihedral { n } => SymmetrySource::Finite(make_dihedral(*n)?),
            GroupSpec::Table {
                table,
                labels,
                generators,
                trusted,
            } => {
                let mut g = if *trusted {
                    FiniteGroup::from_table_trusted(table.clone(), labels.clone())?
                } else {
                    FiniteGroup::from_table(table.clone(), labels.clone())?
                };
                if let Some(gens) = generators {
                    if gens.iter().any(|&s| s >= g.order()) || g.closure(gens).len() != g.order() {
                        return Err(Error::InvalidParameter("listed generators do not generate the table".into()));
                    }
                    g.generators = gens.clone();
                }
                SymmetrySource::Finite(g)
            }
            GroupSpec::Lie { generators } => SymmetrySource::Lie(LieAlgebraBasis::new(generators.clone(), tol)?),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        crate::serial::to_json_string(self)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{su2_basis, verify_group_axioms};
    use crate::numerics::c;

    #[test]
    fn specs_round_trip_bit_exact() {
        let mut gens = su2_basis().generators().to_vec();
        gens[0][(0, 1)] = c(0.1 + 0.2, 1.0 / 3.0);
        gens[0][(1, 0)] = c(0.1 + 0.2, -1.0 / 3.0);
        let specs = vec![
            GroupSpec::Cyclic { n: 5 },
            GroupSpec::Symmetric { n: 3 },
            GroupSpec::Dihedral { n: 4 },
            SymmetrySource::Finite(make_symmetric(3).unwrap()).to_spec(),
            GroupSpec::Lie { generators: gens },
        ];
        for spec in specs {
            let s = spec.to_json().unwrap();
            let back = GroupSpec::from_json(&s).unwrap();
            assert_eq!(back, spec);
            assert_eq!(back.to_json().unwrap(), s);
        }
    }

    #[test]
    fn built_groups_are_valid() {
        let tol = Tolerance::default();
        for spec in [GroupSpec::Cyclic { n: 4 }, GroupSpec::Dihedral { n: 5 }, GroupSpec::Symmetric { n: 4 }] {
            let src = spec.build(&tol).unwrap();
            assert!(verify_group_axioms(src.as_finite().unwrap()).unwrap().is_clean());
        }
        let bad = GroupSpec::Table {
            table: vec![vec![0, 1], vec![1, 1]],
            labels: None,
            generators: None,
            trusted: false,
        };
        assert!(bad.build(&tol).is_err());
        assert!(GroupSpec::Cyclic { n: 0 }.build(&tol).is_err());
    }

    #[test]
    fn parses_handwritten_json() {
        let spec = GroupSpec::from_json(r#"{"kind": "cyclic", "n": 2}"#).unwrap();
        assert_eq!(spec, GroupSpec::Cyclic { n: 2 });
        let lie = GroupSpec::from_json(r#"{"kind": "lie", "generators": [[[[1, 0], [0, 0]], [[0, 0], [-1, 0]]]]}"#).unwrap();
        assert!(matches!(lie.build(&Tolerance::default()).unwrap(), SymmetrySource::Lie(_)));
    }
}
