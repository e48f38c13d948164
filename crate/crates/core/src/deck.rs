//! Textual input decks.
//!
//! A deck is a one-sentence description of a simulation filled from a
//! controlled vocabulary:
//!
//! ```text
//! A simulation using the phase-field method on steel under axial loading, aiming to predict the final fracture pattern.
//! ```

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::material::MaterialRegistry;

#[derive(Debug, Error, PartialEq)]
pub enum DeckError {
    #[error("deck field `{field}`: {reason}")]
    Vocabulary { field: &'static str, reason: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimulationKind {
    RuleBased,
    PhaseField,
    #[serde(alias = "discrete–finite-element")]
    DiscreteFiniteElement,
}

impl SimulationKind {
    pub const ALL: [SimulationKind; 3] = [Self::RuleBased, Self::PhaseField, Self::DiscreteFiniteElement];

    pub fn term(&self) -> &'static str {
        match self {
            Self::RuleBased => "rule-based",
            Self::PhaseField => "phase-field",
            Self::DiscreteFiniteElement => "discrete–finite-element",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loading {
    Axial,
    Biaxial,
}

impl Loading {
    pub const ALL: [Loading; 2] = [Loading::Axial, Loading::Biaxial];

    pub fn term(&self) -> &'static str {
        match self {
            Loading::Axial => "axial loading",
            Loading::Biaxial => "biaxial loading",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    FracturePattern,
    TimeToFailure,
    DynamicTrajectory,
}

impl Target {
    pub const ALL: [Target; 3] = [Target::FracturePattern, Target::TimeToFailure, Target::DynamicTrajectory];

    pub fn term(&self) -> &'static str {
        match self {
            Target::FracturePattern => "final fracture pattern",
            Target::TimeToFailure => "time to failure",
            Target::DynamicTrajectory => "dynamic trajectory",
        }
    }
}

/// Material word used for the topological surrogate, which has no material.
pub const GENERIC_MATERIAL: &str = "generic material";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeckMeta {
    pub simulation: SimulationKind,
    pub material: String,
    pub boundary: Loading,
    pub target: Target,
    /// Simulator variant, e.g. the surrogate's growth mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    /// Position along the trajectory in [0.3, 1]; only for dynamic trajectories.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub progression: Option<f64>,
}

impl DeckMeta {
    pub fn new(simulation: SimulationKind, material: &str, boundary: Loading, target: Target) -> Self {
        Self {
            simulation,
            material: material.to_string(),
            boundary,
            target,
            variant: None,
            progression: None,
        }
    }
}

/// Lower bound of the progression range.
pub const PROGRESSION_START: f64 = 0.3;
pub const SNAPSHOT_COUNT: usize = 10;

/// The ten progression points `0.3 + 0.7 k / 9`.
pub fn progression_points() -> [f64; SNAPSHOT_COUNT] {
    let mut p = [0.0; SNAPSHOT_COUNT];
    for (k, v) in p.iter_mut().enumerate() {
        *v = PROGRESSION_START + (1.0 - PROGRESSION_START) * k as f64 / (SNAPSHOT_COUNT - 1) as f64;
    }
    p
}

fn display_material(name: &str) -> String {
    if name.eq_ignore_ascii_case("pbx") {
        "PBX".to_string()
    } else {
        name.to_lowercase()
    }
}

/// Renders with the default material vocabulary.
pub fn render_deck(meta: &DeckMeta) -> Result<String, DeckError> {
    render_deck_with(meta, &MaterialRegistry::with_defaults())
}

/// Renders a deck, accepting any material present in `registry`.
pub fn render_deck_with(meta: &DeckMeta, registry: &MaterialRegistry) -> Result<String, DeckError> {
    let material = meta.material.trim();
    if !(material.eq_ignore_ascii_case(GENERIC_MATERIAL) || registry.contains(material)) {
        return Err(DeckError::Vocabulary {
            field: "material",
            reason: format!("`{}` is not in the vocabulary ({}, {GENERIC_MATERIAL})", meta.material, registry.names().join(", ")),
        });
    }
    match (meta.target, meta.progression) {
        (Target::DynamicTrajectory, None) => {
            return Err(DeckError::Vocabulary {
                field: "progression",
                reason: "required when the target is a dynamic trajectory".into(),
            })
        }
        (Target::DynamicTrajectory, Some(p)) if !(PROGRESSION_START..=1.0).contains(&p) => {
            return Err(DeckError::Vocabulary {
                field: "progression",
                reason: format!("{p} is outside [0.3, 1]"),
            })
        }
        (t, Some(_)) if t != Target::DynamicTrajectory => {
            return Err(DeckError::Vocabulary {
                field: "progression",
                reason: "only allowed when the target is a dynamic trajectory".into(),
            })
        }
        _ => {}
    }
    let variant = match &meta.variant {
        Some(v) => {
            if v.trim().is_empty() || v.contains(['.', ',', '\n']) {
                return Err(DeckError::Vocabulary {
                    field: "variant",
                    reason: format!("`{v}` must be a short phrase without punctuation"),
                });
            }
            format!(" ({})", v.trim())
        }
        None => String::new(),
    };
    Ok(format!(
        "A simulation using the {} method{} on {} under {}, aiming to predict the {}.",
        meta.simulation.term(),
        variant,
        display_material(material),
        meta.boundary.term(),
        meta.target.term()
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_reference_sentence() {
        let m = DeckMeta::new(SimulationKind::PhaseField, "steel", Loading::Axial, Target::FracturePattern);
        assert_eq!(
            render_deck(&m).unwrap(),
            "A simulation using the phase-field method on steel under axial loading, aiming to predict the final fracture pattern."
        );
    }

    #[test]
    fn rendering_is_deterministic() {
        let m = DeckMeta::new(SimulationKind::RuleBased, "pbx", Loading::Biaxial, Target::TimeToFailure);
        assert_eq!(render_deck(&m).unwrap().as_bytes(), render_deck(&m).unwrap().as_bytes());
    }

    #[test]
    fn each_vocabulary_term_appears_once() {
        let m = DeckMeta::new(SimulationKind::RuleBased, "pbx", Loading::Biaxial, Target::TimeToFailure);
        let text = render_deck(&m).unwrap();
        for term in ["rule-based", "PBX", "biaxial loading", "time to failure"] {
            assert_eq!(text.matches(term).count(), 1, "{term} in {text}");
        }
    }

    #[test]
    fn unknown_material_names_the_field() {
        let m = DeckMeta::new(SimulationKind::PhaseField, "unobtainium", Loading::Axial, Target::FracturePattern);
        match render_deck(&m) {
            Err(DeckError::Vocabulary { field, .. }) => assert_eq!(field, "material"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn progression_only_with_trajectory() {
        let mut m = DeckMeta::new(SimulationKind::PhaseField, "pbx", Loading::Axial, Target::DynamicTrajectory);
        assert!(render_deck(&m).is_err());
        m.progression = Some(0.5);
        assert!(render_deck(&m).is_ok());
        m.progression = Some(0.2);
        assert!(render_deck(&m).is_err());
        let mut f = DeckMeta::new(SimulationKind::PhaseField, "pbx", Loading::Axial, Target::FracturePattern);
        f.progression = Some(0.5);
        assert!(render_deck(&f).is_err());
    }

    #[test]
    fn progression_grid() {
        let p = progression_points();
        assert_eq!(p[0], 0.3);
        assert!((p[9] - 1.0).abs() < 1e-15);
        assert!((p[4] - 0.6111).abs() < 1e-4);
    }

    #[test]
    fn variant_is_rendered() {
        let mut m = DeckMeta::new(SimulationKind::RuleBased, GENERIC_MATERIAL, Loading::Axial, Target::FracturePattern);
        m.variant = Some("X-mode vertical growth".into());
        assert_eq!(
            render_deck(&m).unwrap(),
            "A simulation using the rule-based method (X-mode vertical growth) on generic material under axial loading, aiming to predict the final fracture pattern."
        );
    }
}
