//! Implicit Newmark integration for systems with a lumped mass matrix.

use super::sparse::{pcg, CsrMatrix};
use super::PhaseFieldError;

/// A semi-discrete structural system `M a + f_int(u) = 0`.
pub trait StructuralSystem {
    fn n_dofs(&self) -> usize;
    fn lumped_mass(&self) -> &[f64];
    /// Linear systems take a single solve per step.
    fn is_linear(&self) -> bool;
    fn tangent_pattern(&self) -> CsrMatrix;
    /// Writes `f_int(u)` into `f` and adds the tangent into `k` (zeroed by the caller).
    fn internal_force(&mut self, u: &[f64], f: &mut [f64], k: &mut CsrMatrix);
    /// Accepts `u` as the converged state of the step.
    fn commit(&mut self, u: &[f64]);
    fn strain_energy(&self, u: &[f64]) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Newmark {
    pub beta: f64,
    pub gamma: f64,
    pub dt: f64,
}

impl Newmark {
    pub fn trapezoidal(dt: f64) -> Self {
        Self {
            beta: 0.25,
            gamma: 0.5,
            dt,
        }
    }

    pub fn validate(&self) -> Result<(), PhaseFieldError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(PhaseFieldError::InvalidParam(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.beta > 0.0) || !(self.gamma > 0.0) {
            return Err(PhaseFieldError::InvalidParam("Newmark beta and gamma must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverControls {
    pub cg_tol: f64,
    pub cg_max_iters: usize,
    pub newton_tol: f64,
    pub newton_max: usize,
}

impl Default for SolverControls {
    fn default() -> Self {
        Self {
            cg_tol: 1e-8,
            cg_max_iters: 20_000,
            newton_tol: 1e-8,
            newton_max: 20,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DynamicState {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub a: Vec<f64>,
    pub t: f64,
}

impl DynamicState {
    pub fn at_rest(n: usize) -> Self {
        Self {
            u: vec![0.0; n],
            v: vec![0.0; n],
            a: vec![0.0; n],
            t: 0.0,
        }
    }

    pub fn kinetic_energy(&self, mass: &[f64]) -> f64 {
        0.5 * mass.iter().zip(&self.v).map(|(m, v)| m * v * v).sum::<f64>()
    }
}

/// Consistent initial acceleration `a = -M^{-1} f_int(u)`.
pub fn initial_acceleration<S: StructuralSystem>(sys: &mut S, state: &mut DynamicState) {
    let n = sys.n_dofs();
    let mut f = vec![0.0; n];
    let mut k = sys.tangent_pattern();
    sys.internal_force(&state.u, &mut f, &mut k);
    let m = sys.lumped_mass();
    for i in 0..n {
        state.a[i] = if m[i] > 0.0 { -f[i] / m[i] } else { 0.0 };
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepStats {
    pub newton_iters: usize,
    pub cg_iters: usize,
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Advances `state` by one step. `prescribed` lists `(dof, displacement)` at the new time.
pub fn newmark_step<S: StructuralSystem>(
    sys: &mut S,
    state: &mut DynamicState,
    scheme: &Newmark,
    prescribed: &[(usize, f64)],
    controls: &SolverControls,
    step: usize,
) -> Result<StepStats, PhaseFieldError> {
    scheme.validate()?;
    let n = sys.n_dofs();
    let (dt, beta, gamma) = (scheme.dt, scheme.beta, scheme.gamma);
    let c = 1.0 / (beta * dt * dt);
    let u_pred: Vec<f64> = (0..n)
        .map(|i| state.u[i] + dt * state.v[i] + dt * dt * (0.5 - beta) * state.a[i])
        .collect();
    let v_pred: Vec<f64> = (0..n).map(|i| state.v[i] + dt * (1.0 - gamma) * state.a[i]).collect();

    let mut fixed = vec![false; n];
    let mut u = u_pred.clone();
    for &(d, val) in prescribed {
        fixed[d] = true;
        u[d] = val;
    }
    let mass = sys.lumped_mass().to_vec();
    let mut k = sys.tangent_pattern();
    let mut f = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut du = vec![0.0; n];
    let mut stats = StepStats::default();
    let mut r0 = 0.0;
    let max_newton = if sys.is_linear() { 1 } else { controls.newton_max.max(1) };
    let mut converged = false;
    let mut last_res = f64::INFINITY;

    for it in 0..max_newton {
        k.clear();
        sys.internal_force(&u, &mut f, &mut k);
        for i in 0..n {
            r[i] = if fixed[i] { 0.0 } else { -(mass[i] * c * (u[i] - u_pred[i]) + f[i]) };
        }
        let rn = norm(&r);
        if it == 0 {
            r0 = rn;
        }
        last_res = rn;
        if !rn.is_finite() {
            return Err(PhaseFieldError::NonFinite { field: "residual", step });
        }
        if it > 0 && rn <= controls.newton_tol * r0.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
        k.add_diagonal(&mass.iter().map(|m| m * c).collect::<Vec<_>>());
        k.constrain(&fixed);
        du.iter_mut().for_each(|v| *v = 0.0);
        let cg = pcg(&k, &r, &mut du, controls.cg_tol, controls.cg_max_iters);
        stats.cg_iters += cg.iterations;
        if !cg.converged {
            return Err(PhaseFieldError::CgNotConverged {
                stage: "momentum",
                iterations: cg.iterations,
                residual: cg.relative_residual,
            });
        }
        for i in 0..n {
            u[i] += du[i];
        }
        stats.newton_iters = it + 1;
        if sys.is_linear() || norm(&du) <= controls.newton_tol * norm(&u).max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(PhaseFieldError::NewtonNotConverged {
            step,
            iterations: stats.newton_iters,
            residual: last_res,
        });
    }

    for i in 0..n {
        let a = c * (u[i] - u_pred[i]);
        state.a[i] = a;
        state.v[i] = v_pred[i] + gamma * dt * a;
        state.u[i] = u[i];
    }
    state.t += dt;
    if state.u.iter().chain(&state.v).chain(&state.a).any(|x| !x.is_finite()) {
        return Err(PhaseFieldError::NonFinite { field: "displacement", step });
    }
    sys.commit(&state.u);
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent unit masses on linear springs to ground.
    struct Springs {
        mass: Vec<f64>,
        k: Vec<f64>,
    }

    impl StructuralSystem for Springs {
        fn n_dofs(&self) -> usize {
            self.mass.len()
        }
        fn lumped_mass(&self) -> &[f64] {
            &self.mass
        }
        fn is_linear(&self) -> bool {
            true
        }
        fn tangent_pattern(&self) -> CsrMatrix {
            CsrMatrix::diagonal_pattern(self.mass.len())
        }
        fn internal_force(&mut self, u: &[f64], f: &mut [f64], k: &mut CsrMatrix) {
            for i in 0..u.len() {
                f[i] = self.k[i] * u[i];
            }
            k.add_diagonal(&self.k);
        }
        fn commit(&mut self, _u: &[f64]) {}
        fn strain_energy(&self, u: &[f64]) -> f64 {
            0.5 * u.iter().zip(&self.k).map(|(u, k)| k * u * u).sum::<f64>()
        }
    }

    #[test]
    fn free_flight_is_exact() {
        let mut sys = Springs {
            mass: vec![2.0, 3.0],
            k: vec![0.0, 0.0],
        };
        let mut st = DynamicState::at_rest(2);
        st.v = vec![1.5, -0.25];
        let scheme = Newmark::trapezoidal(0.01);
        for s in 0..100 {
            newmark_step(&mut sys, &mut st, &scheme, &[], &SolverControls::default(), s).unwrap();
        }
        assert!((st.u[0] - 1.5).abs() < 1e-12);
        assert!((st.u[1] + 0.25).abs() < 1e-12);
    }

    #[test]
    fn oscillator_period() {
        let (m, k) = (2.0, 50.0);
        let period = 2.0 * std::f64::consts::PI * (m / k as f64).sqrt();
        let dt = period / 100.0;
        let mut sys = Springs { mass: vec![m], k: vec![k] };
        let mut st = DynamicState::at_rest(1);
        st.u[0] = 1.0;
        initial_acceleration(&mut sys, &mut st);
        let scheme = Newmark::trapezoidal(dt);
        // Record downward zero crossings by linear interpolation.
        let mut crossings = Vec::new();
        let mut prev = (0.0, st.u[0]);
        for s in 0..1050 {
            newmark_step(&mut sys, &mut st, &scheme, &[], &SolverControls::default(), s).unwrap();
            let cur = (st.t, st.u[0]);
            if prev.1 > 0.0 && cur.1 <= 0.0 {
                crossings.push(prev.0 + (cur.0 - prev.0) * prev.1 / (prev.1 - cur.1));
            }
            prev = cur;
        }
        assert!(crossings.len() >= 11);
        let measured = (crossings[10] - crossings[0]) / 10.0;
        assert!(((measured - period) / period).abs() < 5e-3, "{measured} vs {period}");
    }

    #[test]
    fn rejects_bad_dt() {
        let mut sys = Springs { mass: vec![1.0], k: vec![1.0] };
        let mut st = DynamicState::at_rest(1);
        let err = newmark_step(&mut sys, &mut st, &Newmark::trapezoidal(0.0), &[], &SolverControls::default(), 0);
        assert!(matches!(err, Err(PhaseFieldError::InvalidParam(_))));
    }
}
