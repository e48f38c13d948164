//! Loads one horizontal seed crack into the phase-field solver and prints the
//! damage map once a band percolates.
//!
//! `cargo run --release --example single_crack -- [material] [grid]`

use fracture_core::phasefield::{PhaseFieldParams, PhaseFieldSolver};
use fracture_core::{CartesianGrid, FractureConfig, FractureSegment, MaterialRegistry};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).map(String::as_str).unwrap_or("pbx");
    let n: usize = args.get(2).map(|s| s.parse()).transpose()?.unwrap_or(32);
    let registry = MaterialRegistry::with_defaults();
    let grid = CartesianGrid::square(n, 0.25)?;
    let config = FractureConfig::new(0.25, vec![FractureSegment::horizontal([0.125, 0.125], 0.06, 0.002)])?;
    let params = PhaseFieldParams::default();
    let mut s = PhaseFieldSolver::new(&config, registry.get(name)?, &params, &grid, true)?;
    println!("{name} on {n}x{n}: dt {:.3e} s, w0 {:.3e} m", s.dt(), s.w0());
    while s.failed_at().is_none() && s.step_index() < params.max_steps {
        s.step()?;
        if s.step_index() % 100 == 0 {
            let e = s.energy().last().unwrap();
            println!("step {:5}  t {:.3e}  max damage {:.3}  kinetic {:.3e}  strain {:.3e}", s.step_index(), s.time(), e.max_psi, e.kinetic, e.strain);
        }
    }
    match s.failed_at() {
        Some(k) => println!("percolated at step {k}"),
        None => println!("no percolation within {} steps", params.max_steps),
    }
    for j in (0..=grid.ny).rev() {
        let row: String = (0..=grid.nx)
            .map(|i| match s.psi()[grid.node_index(i, j)] {
                p if p >= 0.99 => '#',
                p if p > 0.5 => '+',
                p if p > 0.1 => '.',
                _ => ' ',
            })
            .collect();
        println!("|{row}|");
    }
    Ok(())
}
