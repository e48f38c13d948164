//! Pointwise material laws: degradation, tensile energy, history and J2 plasticity.

use serde::{Deserialize, Serialize};

use super::PhaseFieldError;
use crate::linalg::sym2_eigenvalues;
use crate::material::J2Params;

/// `(1 - eta)(1 - psi)^2 + eta`.
pub fn degradation(psi: f64, eta: f64) -> Result<f64, PhaseFieldError> {
    if !(0.0..=1.0).contains(&psi) {
        return Err(PhaseFieldError::DamageOutOfRange(psi));
    }
    Ok(degradation_unchecked(psi, eta))
}

pub(crate) fn degradation_unchecked(psi: f64, eta: f64) -> f64 {
    let p = psi.clamp(0.0, 1.0);
    (1.0 - eta) * (1.0 - p) * (1.0 - p) + eta
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergySplit {
    /// Positive parts of the principal strains.
    #[default]
    Spectral,
    /// Positive volumetric part plus the full deviatoric part.
    VolDev,
}

/// Tensile energy density of a symmetric 2x2 strain.
pub fn tensile_energy(eps: [[f64; 2]; 2], lambda: f64, mu: f64, split: EnergySplit) -> Result<f64, PhaseFieldError> {
    let scale = eps[0][1].abs().max(eps[1][0].abs()).max(f64::MIN_POSITIVE);
    if (eps[0][1] - eps[1][0]).abs() > 1e-12 * scale {
        return Err(PhaseFieldError::NonSymmetric);
    }
    Ok(tensile_energy_plane(eps, 0.0, lambda, mu, split))
}

/// Tensile energy of a plane strain state with out-of-plane component `ezz`.
pub(crate) fn tensile_energy_plane(eps: [[f64; 2]; 2], ezz: f64, lambda: f64, mu: f64, split: EnergySplit) -> f64 {
    let tr = eps[0][0] + eps[1][1] + ezz;
    let pos = |x: f64| x.max(0.0);
    match split {
        EnergySplit::Spectral => {
            let [e1, e2] = sym2_eigenvalues(&eps);
            0.5 * lambda * pos(tr).powi(2) + mu * (pos(e1).powi(2) + pos(e2).powi(2) + pos(ezz).powi(2))
        }
        EnergySplit::VolDev => {
            let kappa = lambda + 2.0 * mu / 3.0;
            let m = tr / 3.0;
            let dev2 = (eps[0][0] - m).powi(2) + (eps[1][1] - m).powi(2) + (ezz - m).powi(2) + 2.0 * eps[0][1].powi(2);
            0.5 * kappa * pos(tr).powi(2) + mu * dev2
        }
    }
}

/// Pointwise running maximum.
pub fn update_history(hplus: &mut [f64], psi_plus: &[f64]) {
    assert_eq!(hplus.len(), psi_plus.len(), "history and energy layouts differ");
    for (h, &p) in hplus.iter_mut().zip(psi_plus) {
        if p > *h {
            *h = p;
        }
    }
}

/// Symmetric tensor with zero out-of-plane shear, stored `[xx, yy, zz, xy]`.
pub type Sym = [f64; 4];

pub fn sym_dot(a: &Sym, b: &Sym) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * a[3] * b[3]
}

pub fn deviator(a: &Sym) -> Sym {
    let m = (a[0] + a[1] + a[2]) / 3.0;
    [a[0] - m, a[1] - m, a[2] - m, a[3]]
}

pub fn von_mises(s: &Sym) -> f64 {
    let d = deviator(s);
    (1.5 * sym_dot(&d, &d)).sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlasticState {
    /// Plastic strain, `[xx, yy, zz, xy]` tensor components.
    pub eps_p: Sym,
    /// Accumulated equivalent plastic strain.
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReturnMapping {
    pub stress: Sym,
    pub state: PlasticState,
    pub delta_gamma: f64,
    /// Algorithmic tangent on plane-strain Voigt components `[exx, eyy, 2 exy]`.
    pub tangent: [[f64; 3]; 3],
}

/// Elastic trial stress for total strain `eps` given the committed plastic strain.
pub fn trial_stress(eps: &Sym, state: &PlasticState, j2: &J2Params) -> Sym {
    let ee = [
        eps[0] - state.eps_p[0],
        eps[1] - state.eps_p[1],
        eps[2] - state.eps_p[2],
        eps[3] - state.eps_p[3],
    ];
    let tr = ee[0] + ee[1] + ee[2];
    let d = deviator(&ee);
    let p = j2.bulk * tr;
    let two_mu = 2.0 * j2.shear;
    [p + two_mu * d[0], p + two_mu * d[1], p + two_mu * d[2], two_mu * d[3]]
}

/// Von Mises return mapping with linear isotropic hardening.
pub fn radial_return(trial: &Sym, state: &PlasticState, j2: &J2Params) -> Result<ReturnMapping, PhaseFieldError> {
    let (mu, kappa, h) = (j2.shear, j2.bulk, j2.hardening);
    if !(3.0 * mu + h > 0.0) {
        return Err(PhaseFieldError::InvalidParam(format!(
            "3 mu + H must be positive, got {}",
            3.0 * mu + h
        )));
    }
    let s = deviator(trial);
    let q = (1.5 * sym_dot(&s, &s)).sqrt();
    let f = q - (j2.yield_strength + h * state.alpha);
    let mut tangent = [[0.0; 3]; 3];
    if f <= 0.0 {
        let l = kappa - 2.0 * mu / 3.0;
        tangent[0] = [l + 2.0 * mu, l, 0.0];
        tangent[1] = [l, l + 2.0 * mu, 0.0];
        tangent[2][2] = mu;
        return Ok(ReturnMapping {
            stress: *trial,
            state: *state,
            delta_gamma: 0.0,
            tangent,
        });
    }
    let dg = f / (3.0 * mu + h);
    let snorm = sym_dot(&s, &s).sqrt();
    let n = s.map(|c| c / snorm);
    let scale = 1.0 - 3.0 * mu * dg / q;
    let p = (trial[0] + trial[1] + trial[2]) / 3.0;
    let stress = [p + scale * s[0], p + scale * s[1], p + scale * s[2], scale * s[3]];
    let k = 1.5f64.sqrt() * dg;
    let mut next = *state;
    for c in 0..4 {
        next.eps_p[c] += k * n[c];
    }
    next.alpha += dg;

    let theta = scale;
    let theta_bar = 3.0 * mu / (3.0 * mu + h) - (1.0 - theta);
    let (a, b) = (2.0 * mu * theta, 2.0 * mu * theta_bar);
    // Components in the order xx, yy, xy of the fourth-order tangent.
    let nn = [n[0], n[1], n[3]];
    tangent[0][0] = kappa + 2.0 * a / 3.0;
    tangent[1][1] = kappa + 2.0 * a / 3.0;
    tangent[0][1] = kappa - a / 3.0;
    tangent[1][0] = kappa - a / 3.0;
    tangent[2][2] = 0.5 * a;
    for i in 0..3 {
        for j in 0..3 {
            tangent[i][j] -= b * nn[i] * nn[j];
        }
    }
    Ok(ReturnMapping {
        stress,
        state: next,
        delta_gamma: dg,
        tangent,
    })
}
