use bfbs_core::free_boundary::*;
use bfbs_core::geometry::{make_body, ShapeSpec};
use bfbs_core::operator::OperatorSpec;
use bfbs_core::potential::{boundary_gradient_trace, Side};
use std::time::Instant;

fn main() {
    let m = 256;
    let k = make_body(&ShapeSpec::Disk { r: 1.0 }, m).unwrap();
    let op = OperatorSpec::p_laplace(2.0).unwrap();
    let opts = FbOptions { n_layers: 128, ..Default::default() };
    let problem = BernoulliProblem::new(k, op, 1.0, opts).unwrap();
    let mut omega = initial_supersolution(&problem).unwrap();
    let mut warm: Option<Vec<f64>> = None;
    let t = Instant::now();
    for it in 0..400 {
        let field = problem.solve_on(&omega, warm.as_deref()).unwrap();
        let tr = boundary_gradient_trace(&field, Side::Outer);
        if it % 10 == 0 || it > 380 {
            println!(
                "it {it:3} ({:5.1}s): raw [{:+.4},{:+.4}] rho [{:.4},{:.4}]",
                t.elapsed().as_secs_f64(),
                tr.min() - 1.0,
                tr.max() - 1.0,
                omega.min_radius(),
                omega.circumradius()
            );
        }
        match update_trim(&problem, &omega, &tr) {
            Ok(next) => {
                if next.rho() == omega.rho() {
                    println!("no admissible cut at it {it}");
                    break;
                }
                warm = Some(field.u);
                omega = next;
            }
            Err(e) => {
                println!("err {e}");
                break;
            }
        }
    }
}
