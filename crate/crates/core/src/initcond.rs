//! Random initial fracture configurations.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{FractureConfig, FractureSegment, Orientation};
use crate::rng::SeededRng;

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("unknown configuration family `{0}`; valid families: training, single, high_density, low_density, random_orientation")]
    UnknownFamily(String),
    #[error("family `{0}` is not an evaluation family; valid: single, high_density, low_density, random_orientation")]
    NotEvalFamily(Family),
    #[error("invalid sampler range `{name}`: [{lo}, {hi}]")]
    BadRange { name: &'static str, lo: f64, hi: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Training,
    Single,
    HighDensity,
    LowDensity,
    RandomOrientation,
}

impl Family {
    pub const EVAL: [Family; 4] = [Family::Single, Family::HighDensity, Family::LowDensity, Family::RandomOrientation];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Training => "training",
            Family::Single => "single",
            Family::HighDensity => "high_density",
            Family::LowDensity => "low_density",
            Family::RandomOrientation => "random_orientation",
        })
    }
}

impl FromStr for Family {
    type Err = SamplerError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_lowercase().replace('-', "_").as_str() {
            "training" => Ok(Family::Training),
            "single" => Ok(Family::Single),
            "high_density" => Ok(Family::HighDensity),
            "low_density" => Ok(Family::LowDensity),
            "random_orientation" => Ok(Family::RandomOrientation),
            _ => Err(SamplerError::UnknownFamily(s.to_string())),
        }
    }
}

/// Distribution of initial fractures. Lengths are uniform, apertures
/// log-uniform, centres uniform over the domain; fractures crossing the
/// boundary are clipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigSampler {
    /// Inclusive range of fractures per direction.
    pub n_per_direction: (u32, u32),
    /// Metres.
    pub length_range: (f64, f64),
    /// Metres, sampled uniformly in log space.
    pub aperture_range: (f64, f64),
    pub side_length: f64,
    pub family: Family,
}

impl Default for ConfigSampler {
    fn default() -> Self {
        Self {
            n_per_direction: (3, 15),
            length_range: (0.01, 0.05),
            aperture_range: (0.0005, 0.005),
            side_length: 0.25,
            family: Family::Training,
        }
    }
}

impl ConfigSampler {
    pub fn for_family(family: Family) -> Self {
        let mut s = Self::default();
        s.family = family;
        if family == Family::HighDensity {
            s.n_per_direction = (30, 60);
        }
        s
    }

    pub fn validate(&self) -> Result<(), SamplerError> {
        let (a, b) = self.n_per_direction;
        if a > b {
            return Err(SamplerError::BadRange {
                name: "n_per_direction",
                lo: a as f64,
                hi: b as f64,
            });
        }
        for (name, (lo, hi)) in [("length_range", self.length_range), ("aperture_range", self.aperture_range)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(SamplerError::BadRange { name, lo, hi });
            }
        }
        if !(self.side_length > 0.0 && self.side_length.is_finite()) {
            return Err(SamplerError::BadRange {
                name: "side_length",
                lo: self.side_length,
                hi: self.side_length,
            });
        }
        Ok(())
    }

    /// Draws one configuration. Deterministic in `(self, rng state)`.
    pub fn sample(&self, rng: &mut SeededRng) -> FractureConfig {
        let counts = match self.family {
            Family::Training | Family::HighDensity | Family::RandomOrientation => {
                let (a, b) = self.n_per_direction;
                (rng.random_range(a..=b), rng.random_range(a..=b))
            }
            Family::Single => {
                if rng.random_bool(0.5) {
                    (1, 0)
                } else {
                    (0, 1)
                }
            }
            Family::LowDensity => {
                let total = rng.random_range(1..=2u32);
                let h = (0..total).filter(|_| rng.random_bool(0.5)).count() as u32;
                (h, total - h)
            }
        };
        let mut segments = Vec::with_capacity((counts.0 + counts.1) as usize);
        for (n, base) in [(counts.0, Orientation::Horizontal), (counts.1, Orientation::Vertical)] {
            for _ in 0..n {
                let orientation = if self.family == Family::RandomOrientation {
                    Orientation::Oblique(rng.random_range(0.0..std::f64::consts::PI))
                } else {
                    base
                };
                let seg = self.sample_segment(rng, orientation);
                // The centre is inside the domain, so something always survives clipping.
                segments.push(seg.clipped(self.side_length).unwrap_or(seg));
            }
        }
        FractureConfig {
            side_length: self.side_length,
            segments,
        }
    }

    fn sample_segment(&self, rng: &mut SeededRng, orientation: Orientation) -> FractureSegment {
        let (l0, l1) = self.length_range;
        let length = if l1 > l0 { rng.random_range(l0..=l1) } else { l0 };
        let (a0, a1) = self.aperture_range;
        let aperture = if a1 > a0 {
            rng.random_range(a0.ln()..=a1.ln()).exp().clamp(a0, a1)
        } else {
            a0
        };
        let s = self.side_length;
        let center = [rng.random_range(0.0..s), rng.random_range(0.0..s)];
        FractureSegment {
            orientation,
            center,
            length,
            aperture,
        }
    }
}

pub fn sample_config(sampler: &ConfigSampler, rng: &mut SeededRng) -> FractureConfig {
    sampler.sample(rng)
}

/// Draws from one of the out-of-distribution evaluation families.
pub fn sample_eval_family(family: &str, rng: &mut SeededRng) -> Result<FractureConfig, SamplerError> {
    let fam: Family = family.parse()?;
    if fam == Family::Training {
        return Err(SamplerError::NotEvalFamily(fam));
    }
    Ok(ConfigSampler::for_family(fam).sample(rng))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_config() {
        let s = ConfigSampler::default();
        let a = s.sample(&mut SeededRng::new(0, 0));
        let b = s.sample(&mut SeededRng::new(0, 0));
        assert_eq!(a, b);
    }

    #[test]
    fn single_family_has_one_segment() {
        let mut rng = SeededRng::new(5, 0);
        for _ in 0..50 {
            let c = sample_eval_family("single", &mut rng).unwrap();
            assert_eq!(c.segments.len(), 1);
        }
    }

    #[test]
    fn low_density_has_one_or_two() {
        let mut rng = SeededRng::new(6, 0);
        for _ in 0..200 {
            let n = sample_eval_family("low_density", &mut rng).unwrap().segments.len();
            assert!((1..=2).contains(&n));
        }
    }

    #[test]
    fn unknown_family_lists_valid_ones() {
        let e = sample_eval_family("dense", &mut SeededRng::new(0, 0)).unwrap_err();
        let msg = e.to_string();
        for f in ["single", "high_density", "low_density", "random_orientation"] {
            assert!(msg.contains(f), "{msg}");
        }
        assert!(sample_eval_family("training", &mut SeededRng::new(0, 0)).is_err());
    }

    #[test]
    fn invalid_ranges_rejected() {
        let mut s = ConfigSampler::default();
        s.length_range = (0.05, 0.01);
        assert!(s.validate().is_err());
        s = ConfigSampler::default();
        s.n_per_direction = (4, 3);
        assert!(s.validate().is_err());
        assert!(ConfigSampler::default().validate().is_ok());
    }
}
