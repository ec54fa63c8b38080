use bfbs_core::free_boundary::*;
use bfbs_core::geometry::{make_body, ShapeSpec};
use bfbs_core::operator::OperatorSpec;
use std::time::Instant;

fn main() {
    for p in [2.0, 3.0] {
        let k = make_body(&ShapeSpec::Disk { r: 1.0 }, 256).unwrap();
        let op = OperatorSpec::p_laplace(p).unwrap();
        let opts = FbOptions { n_layers: 128, ..Default::default() };
        let problem = BernoulliProblem::new(k, op, 1.0, opts).unwrap();
        let t = Instant::now();
        match solve_bernoulli(&problem, UpdateMode::Trim, 400) {
            Ok((omega, field, report)) => println!(
                "trim p={p}: {:.1}s, {} solves, rho [{:.5},{:.5}], interior ratio {:.4}",
                t.elapsed().as_secs_f64(),
                report.total_solves,
                omega.min_radius(),
                omega.circumradius(),
                field.min_interior_gradient()
            ),
            Err(e) => println!("trim p={p} FAILED after {:.1}s: {e}", t.elapsed().as_secs_f64()),
        }
    }
}
