use super::{AutodiffError, Graph, Tensor, Var};

/// Outcome of [`grad_check`].
#[derive(Clone, Debug)]
pub struct GradCheckReport {
    /// Per input: `max |analytic - numeric|` over its elements, divided by the
    /// larger infinity norm of the two gradients.
    pub max_rel_err: Vec<f64>,
    pub max_abs_err: Vec<f64>,
    pub tol: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.worst() <= self.tol
    }

    pub fn worst(&self) -> f64 {
        self.max_rel_err.iter().copied().fold(0.0, f64::max)
    }
}

fn eval<F>(f: &F, inputs: &[Tensor]) -> Result<f64, AutodiffError>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var, AutodiffError>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.constant(t.clone())).collect();
    let out = f(&mut g, &vars)?;
    Ok(g.value(out).item())
}

/// Compares tape gradients of the scalar `f` with central differences of step `h`.
pub fn grad_check<F>(f: F, inputs: &[Tensor], h: f64, tol: f64) -> Result<GradCheckReport, AutodiffError>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var, AutodiffError>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.input(t.clone())).collect();
    let out = f(&mut g, &vars)?;
    let grads = g.backward(out)?;

    let mut work = inputs.to_vec();
    let mut max_rel_err = Vec::with_capacity(inputs.len());
    let mut max_abs_err = Vec::with_capacity(inputs.len());
    for (k, v) in vars.iter().enumerate() {
        let analytic = grads.get_or_zeros(*v, &inputs[k].shape);
        let mut numeric = vec![0.0; inputs[k].numel()];
        for (e, slot) in numeric.iter_mut().enumerate() {
            let x0 = work[k].data[e];
            work[k].data[e] = x0 + h;
            let fp = eval(&f, &work)?;
            work[k].data[e] = x0 - h;
            let fm = eval(&f, &work)?;
            work[k].data[e] = x0;
            *slot = (fp - fm) / (2.0 * h);
        }
        let abs = analytic.data.iter().zip(&numeric).map(|(a, n)| (a - n).abs()).fold(0.0, f64::max);
        let scale = analytic.max_abs().max(numeric.iter().fold(0.0, |m: f64, v| m.max(v.abs())));
        max_abs_err.push(abs);
        max_rel_err.push(if scale > 1e-300 { abs / scale } else { 0.0 });
    }
    Ok(GradCheckReport {
        max_rel_err,
        max_abs_err,
        tol,
    })
}
