//! Material parameters and the default registry.
//!
//! All values are SI: densities in kg/m^3, moduli and strengths in Pa, fracture
//! energies in J/m^2. The 2D reduction is plane strain in the x-z plane; our
//! vertical axis `y` plays the role of the material `z` (axis 3) axis.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::sym3_eigenvalues;

#[derive(Debug, Error)]
pub enum MaterialError {
    #[error("material `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error("duplicate material name `{0}`")]
    Duplicate(String),
    #[error("unknown material `{name}`; registry has: {known}")]
    Unknown { name: String, known: String },
    #[error("material file: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("material file: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
pub enum ElasticModel {
    Isotropic {
        youngs_modulus: f64,
        poisson_ratio: f64,
    },
    TransverselyIsotropic {
        c11: f64,
        c13: f64,
        c33: f64,
        c55: f64,
    },
    Elastoplastic {
        youngs_modulus: f64,
        poisson_ratio: f64,
        yield_strength: f64,
        hardening_modulus: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialSpec {
    pub name: String,
    pub density: f64,
    pub elastic: ElasticModel,
    /// Critical energy release rate G_c.
    pub fracture_energy: f64,
}

/// Plane-strain Voigt stiffness acting on `[exx, eyy, 2 exy]`.
pub type Stiffness = [[f64; 3]; 3];

/// Von Mises parameters of an elastoplastic material.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct J2Params {
    pub shear: f64,
    pub bulk: f64,
    pub yield_strength: f64,
    pub hardening: f64,
}

impl MaterialSpec {
    pub fn isotropic(name: &str, density: f64, e: f64, nu: f64, gc: f64) -> Self {
        Self {
            name: name.to_string(),
            density,
            elastic: ElasticModel::Isotropic {
                youngs_modulus: e,
                poisson_ratio: nu,
            },
            fracture_energy: gc,
        }
    }

    pub fn elastoplastic(name: &str, density: f64, e: f64, nu: f64, sy: f64, h: f64, gc: f64) -> Self {
        Self {
            name: name.to_string(),
            density,
            elastic: ElasticModel::Elastoplastic {
                youngs_modulus: e,
                poisson_ratio: nu,
                yield_strength: sy,
                hardening_modulus: h,
            },
            fracture_energy: gc,
        }
    }

    pub fn is_plastic(&self) -> bool {
        matches!(self.elastic, ElasticModel::Elastoplastic { .. })
    }

    /// Lame parameters `(lambda, mu)`.
    ///
    /// For transversely isotropic media these are isotropic-equivalent values:
    /// `lambda + 2 mu` is the mean normal stiffness `(C11 + C33) / 2` and `mu`
    /// averages the two in-plane shear estimates `C55` and `((C11 + C33)/2 - C13)/2`.
    pub fn lame(&self) -> (f64, f64) {
        match self.elastic {
            ElasticModel::Isotropic {
                youngs_modulus: e,
                poisson_ratio: nu,
            }
            | ElasticModel::Elastoplastic {
                youngs_modulus: e,
                poisson_ratio: nu,
                ..
            } => {
                let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
                let mu = e / (2.0 * (1.0 + nu));
                (lambda, mu)
            }
            ElasticModel::TransverselyIsotropic { c11, c13, c33, c55 } => {
                let normal = 0.5 * (c11 + c33);
                let mu = 0.5 * (c55 + 0.5 * (normal - c13));
                (normal - 2.0 * mu, mu)
            }
        }
    }

    pub fn plane_strain_stiffness(&self) -> Stiffness {
        match self.elastic {
            ElasticModel::TransverselyIsotropic { c11, c13, c33, c55 } => {
                [[c11, c13, 0.0], [c13, c33, 0.0], [0.0, 0.0, c55]]
            }
            _ => {
                let (l, m) = self.lame();
                [[l + 2.0 * m, l, 0.0], [l, l + 2.0 * m, 0.0], [0.0, 0.0, m]]
            }
        }
    }

    pub fn j2(&self) -> Option<J2Params> {
        match self.elastic {
            ElasticModel::Elastoplastic {
                yield_strength,
                hardening_modulus,
                ..
            } => {
                let (l, m) = self.lame();
                Some(J2Params {
                    shear: m,
                    bulk: l + 2.0 * m / 3.0,
                    yield_strength,
                    hardening: hardening_modulus,
                })
            }
            _ => None,
        }
    }

    /// Dilatational (P) wave speed from the plane-strain stiffness.
    pub fn p_wave_speed(&self) -> f64 {
        let c = self.plane_strain_stiffness();
        (c[0][0].max(c[1][1]) / self.density).sqrt()
    }

    pub fn validate(&self) -> Result<(), MaterialError> {
        let bad = |reason: String| MaterialError::Invalid {
            name: self.name.clone(),
            reason,
        };
        let pos = |v: f64| v.is_finite() && v > 0.0;
        if self.name.trim().is_empty() {
            return Err(bad("empty name".into()));
        }
        if !pos(self.density) {
            return Err(bad(format!("density must be > 0, got {}", self.density)));
        }
        if !pos(self.fracture_energy) {
            return Err(bad(format!("G_c must be > 0, got {}", self.fracture_energy)));
        }
        match self.elastic {
            ElasticModel::Isotropic {
                youngs_modulus: e,
                poisson_ratio: nu,
            }
            | ElasticModel::Elastoplastic {
                youngs_modulus: e,
                poisson_ratio: nu,
                ..
            } => {
                if !pos(e) {
                    return Err(bad(format!("Young's modulus must be > 0, got {e}")));
                }
                if !(nu > -1.0 && nu < 0.5) {
                    return Err(bad(format!("Poisson ratio must lie in (-1, 0.5), got {nu}")));
                }
            }
            ElasticModel::TransverselyIsotropic { .. } => {}
        }
        if let ElasticModel::Elastoplastic {
            yield_strength,
            hardening_modulus,
            ..
        } = self.elastic
        {
            if !pos(yield_strength) {
                return Err(bad(format!("yield strength must be > 0, got {yield_strength}")));
            }
            if !(hardening_modulus.is_finite() && hardening_modulus >= 0.0) {
                return Err(bad(format!("hardening modulus must be >= 0, got {hardening_modulus}")));
            }
        }
        let ev = sym3_eigenvalues(&self.plane_strain_stiffness());
        if !(ev[0] > 0.0) {
            return Err(bad(format!("stiffness is not positive definite (eigenvalues {ev:?})")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default)]
pub struct MaterialRegistry {
    materials: BTreeMap<String, MaterialSpec>,
}

impl MaterialRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// PBX, shale, tungsten, aluminum, steel, titanium and concrete.
    pub fn with_defaults() -> Self {
        let mut r = Self::empty();
        for m in default_materials() {
            r.insert(m).expect("default materials are valid and distinct");
        }
        r
    }

    pub fn insert(&mut self, spec: MaterialSpec) -> Result<(), MaterialError> {
        spec.validate()?;
        let key = spec.name.to_lowercase();
        if self.materials.contains_key(&key) {
            return Err(MaterialError::Duplicate(spec.name));
        }
        self.materials.insert(key, spec);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&MaterialSpec, MaterialError> {
        self.materials
            .get(&name.to_lowercase())
            .ok_or_else(|| MaterialError::Unknown {
                name: name.to_string(),
                known: self.names().join(", "),
            })
    }

    pub fn contains(&self, name: &str) -> bool {
        self.materials.contains_key(&name.to_lowercase())
    }

    pub fn names(&self) -> Vec<String> {
        self.materials.keys().cloned().collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &MaterialSpec> {
        self.materials.values()
    }

    /// Adds every material of a JSON array. Nothing is inserted if any entry
    /// fails validation or collides with an existing name.
    pub fn load_json_str(&mut self, text: &str) -> Result<usize, MaterialError> {
        let specs: Vec<MaterialSpec> = serde_json::from_str(text)?;
        let mut staged = self.clone();
        for s in &specs {
            staged.insert(s.clone())?;
        }
        *self = staged;
        Ok(specs.len())
    }

    pub fn load_json_file(&mut self, path: impl AsRef<Path>) -> Result<usize, MaterialError> {
        let text = std::fs::read_to_string(path)?;
        self.load_json_str(&text)
    }
}

const GPA: f64 = 1e9;

fn default_materials() -> Vec<MaterialSpec> {
    vec![
        MaterialSpec::isotropic("pbx", 1820.0, 10.0 * GPA, 0.36, 641.0),
        MaterialSpec {
            name: "shale".into(),
            density: 2075.0,
            elastic: ElasticModel::TransverselyIsotropic {
                c11: 31.3 * GPA,
                c13: 3.40 * GPA,
                c33: 22.5 * GPA,
                c55: 6.49 * GPA,
            },
            fracture_energy: 50.0,
        },
        MaterialSpec::elastoplastic("tungsten", 19250.0, 400.0 * GPA, 0.28, 0.75 * GPA, 5.0 * GPA, 500.0),
        MaterialSpec::elastoplastic("aluminum", 2700.0, 64.9 * GPA, 0.25, 0.25 * GPA, 0.25 * GPA, 1e4),
        MaterialSpec::elastoplastic("steel", 7850.0, 200.0 * GPA, 0.30, 0.6 * GPA, 2.5 * GPA, 2.5e5),
        MaterialSpec::elastoplastic("titanium", 4430.0, 115.0 * GPA, 0.33, 1.0 * GPA, 2.0 * GPA, 2.4e4),
        MaterialSpec::isotropic("concrete", 2400.0, 30.0 * GPA, 0.15, 150.0),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn steel_matches_table() {
        let r = MaterialRegistry::with_defaults();
        let s = r.get("steel").unwrap();
        assert_eq!(s.density, 7850.0);
        assert_eq!(s.fracture_energy, 2.5e5);
        match s.elastic {
            ElasticModel::Elastoplastic {
                youngs_modulus,
                poisson_ratio,
                yield_strength,
                hardening_modulus,
            } => {
                assert!(close(youngs_modulus, 200e9));
                assert_eq!(poisson_ratio, 0.30);
                assert!(close(yield_strength, 0.6e9));
                assert!(close(hardening_modulus, 2.5e9));
            }
            _ => panic!("steel should be elastoplastic"),
        }
    }

    #[test]
    fn shale_and_pbx_match_table() {
        let r = MaterialRegistry::with_defaults();
        let shale = r.get("shale").unwrap();
        assert_eq!(shale.density, 2075.0);
        assert_eq!(shale.fracture_energy, 50.0);
        let c = shale.plane_strain_stiffness();
        assert!(close(c[0][0], 31.3e9) && close(c[0][1], 3.40e9) && close(c[1][1], 22.5e9) && close(c[2][2], 6.49e9));
        let pbx = r.get("PBX").unwrap();
        assert_eq!(pbx.density, 1820.0);
        assert_eq!(pbx.fracture_energy, 641.0);
        assert_eq!(
            pbx.elastic,
            ElasticModel::Isotropic {
                youngs_modulus: 10e9,
                poisson_ratio: 0.36
            }
        );
    }

    #[test]
    fn registry_has_all_defaults_and_all_validate() {
        let r = MaterialRegistry::with_defaults();
        for n in ["pbx", "shale", "tungsten", "aluminum", "steel", "titanium", "concrete"] {
            r.get(n).unwrap().validate().unwrap();
        }
        assert_eq!(r.names().len(), 7);
    }

    #[test]
    fn duplicate_load_is_rejected_with_name() {
        let mut r = MaterialRegistry::with_defaults();
        let text = r#"[{"name":"Steel","density":1.0,"fracture_energy":1.0,
            "elastic":{"model":"isotropic","youngs_modulus":1.0,"poisson_ratio":0.2}}]"#;
        match r.load_json_str(text) {
            Err(MaterialError::Duplicate(n)) => assert_eq!(n, "Steel"),
            other => panic!("expected duplicate error, got {other:?}"),
        }
        assert_eq!(r.names().len(), 7);
    }

    #[test]
    fn user_material_loads() {
        let mut r = MaterialRegistry::with_defaults();
        let text = r#"[{"name":"granite","density":2700.0,"fracture_energy":100.0,
            "elastic":{"model":"isotropic","youngs_modulus":5e10,"poisson_ratio":0.25}}]"#;
        assert_eq!(r.load_json_str(text).unwrap(), 1);
        assert!(r.contains("granite"));
    }

    #[test]
    fn indefinite_stiffness_is_rejected() {
        let m = MaterialSpec {
            name: "bad".into(),
            density: 1.0,
            elastic: ElasticModel::TransverselyIsotropic {
                c11: 1.0,
                c13: 5.0,
                c33: 1.0,
                c55: 1.0,
            },
            fracture_energy: 1.0,
        };
        assert!(matches!(m.validate(), Err(MaterialError::Invalid { .. })));
    }

    #[test]
    fn bad_poisson_ratio_rejected() {
        let m = MaterialSpec::isotropic("x", 1.0, 1.0, 0.5, 1.0);
        assert!(m.validate().is_err());
    }
}
