use bfbs_core::free_boundary::*;
use bfbs_core::geometry::{make_body, ShapeSpec};
use bfbs_core::grid::build_grid;
use bfbs_core::operator::OperatorSpec;
use bfbs_core::potential::{solve_potential, SolverOptions};
use std::time::Instant;

fn main() {
    let m = 256;
    let n = 128;
    for p in [2.0, 3.0] {
        let k = make_body(&ShapeSpec::Disk { r: 1.0 }, m).unwrap();
        let o = make_body(&ShapeSpec::Disk { r: 2.0 }, m).unwrap();
        let grid = build_grid(&k, &o, n).unwrap();
        let op = OperatorSpec::p_laplace(p).unwrap();
        let t = Instant::now();
        let f = solve_potential(&op, &grid, &SolverOptions::default(), None).unwrap();
        println!(
            "potential p={p} {m}x{n}: {:.2}s, {} picard, {} linear iters",
            t.elapsed().as_secs_f64(),
            f.meta.iterations,
            f.meta.linear_iterations
        );
        let t = Instant::now();
        let f2 = solve_potential(&op, &grid, &SolverOptions::default(), Some(&f.u)).unwrap();
        println!(
            "  warm: {:.2}s, {} picard, {} linear iters",
            t.elapsed().as_secs_f64(),
            f2.meta.iterations,
            f2.meta.linear_iterations
        );
    }
    for p in [2.0, 3.0] {
        let k = make_body(&ShapeSpec::Disk { r: 1.0 }, m).unwrap();
        let op = OperatorSpec::p_laplace(p).unwrap();
        let opts = FbOptions { n_layers: n, ..Default::default() };
        let problem = BernoulliProblem::new(k, op, 1.0, opts).unwrap();
        let t = Instant::now();
        let (omega, _, report) = solve_bernoulli(&problem, UpdateMode::Normal, 400).unwrap();
        println!(
            "bernoulli normal p={p}: {:.2}s, {} solves, rho mean {:.5}",
            t.elapsed().as_secs_f64(),
            report.total_solves,
            omega.rho().iter().sum::<f64>() / m as f64
        );
    }
}
