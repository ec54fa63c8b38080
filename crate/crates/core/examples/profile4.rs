use bfbs_core::free_boundary::*;
use bfbs_core::geometry::{make_body, ShapeSpec};
use bfbs_core::operator::OperatorSpec;
use bfbs_core::potential::{boundary_gradient_trace, Side};

fn main() {
    let m = 256;
    let k = make_body(&ShapeSpec::Disk { r: 1.0 }, m).unwrap();
    let op = OperatorSpec::p_laplace(2.0).unwrap();
    let opts = FbOptions { n_layers: 128, ..Default::default() };
    let problem = BernoulliProblem::new(k, op, 1.0, opts).unwrap();
    let mut omega = initial_supersolution(&problem).unwrap();
    let mut warm: Option<Vec<f64>> = None;
    for it in 0..12 {
        let field = problem.solve_on(&omega, warm.as_deref()).unwrap();
        let tr = boundary_gradient_trace(&field, Side::Outer);
        // replicate the selection by hand
        let mut g_sorted: Vec<f64> = tr.g.clone();
        g_sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        println!(
            "it {it}: g quartiles {:.3}/{:.3}/{:.3}, healthy(>1): {}",
            g_sorted[m / 4],
            g_sorted[m / 2],
            g_sorted[3 * m / 4],
            tr.g.iter().filter(|&&g| g >= 1.0).count()
        );
        match update_trim(&problem, &omega, &tr) {
            Ok(next) => {
                let changed = next
                    .rho()
                    .iter()
                    .zip(omega.rho())
                    .filter(|(a, b)| (*a - *b).abs() > 1e-12)
                    .count();
                println!("   changed {changed} radii, min rho {:.4} -> {:.4}", omega.min_radius(), next.min_radius());
                if changed == 0 { break; }
                warm = Some(field.u);
                omega = next;
            }
            Err(e) => { println!("err {e}"); break; }
        }
    }
}
