use bfbs_core::free_boundary::*;
use bfbs_core::geometry::{make_body, ShapeSpec};
use bfbs_core::operator::OperatorSpec;

fn main() {
    let m = 256;
    let k = make_body(&ShapeSpec::Disk { r: 1.0 }, m).unwrap();
    let op = OperatorSpec::p_laplace(2.0).unwrap();
    let opts = FbOptions { n_layers: 128, max_iter: 1000, ..Default::default() };
    let problem = BernoulliProblem::new(k, op, 1.0, opts).unwrap();
    match solve_bernoulli(&problem, UpdateMode::Trim, 1000) {
        Ok((omega, _, report)) => {
            println!(
                "converged: {} solves, rho [{:.5},{:.5}]",
                report.total_solves,
                omega.min_radius(),
                omega.circumradius()
            );
            for r in report.records.iter().step_by(25) {
                println!(
                    "it {:3}: sup {:+.4} inf {:+.4} step {:.2e} rho_max {:.4}",
                    r.iter, r.sup_dev, r.inf_dev, r.hausdorff_step, r.body.circumradius()
                );
            }
        }
        Err(e) => println!("failed: {e}"),
    }
}
