//! Subcommand drivers and artifact writers.

use std::path::Path;

use serde_json::json;

use bfbs_core::config::RunConfig;
use bfbs_core::export;
use bfbs_core::free_boundary::{solve_bernoulli, IterationReport};
use bfbs_core::geometry::StarBody;
use bfbs_core::oracle;
use bfbs_core::potential::{level_set, PotentialField};
use bfbs_core::verify::{all_passed, run_suite};

pub fn run_solve(cfg: &RunConfig, out: &Path) -> u8 {
    let problem = match cfg.problem() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("config error: {e}");
            return 2;
        }
    };
    match solve_bernoulli(&problem, cfg.mode, cfg.max_iter) {
        Ok((omega, field, report)) => {
            if let Err(e) = write_solve_artifacts(cfg, out, &omega, &field, &report) {
                eprintln!("cannot write artifacts: {e}");
                return 1;
            }
            println!(
                "converged: {} iterations, {} solves, outer radius mean {:.6}",
                report.records.len(),
                report.total_solves,
                omega.rho().iter().sum::<f64>() / omega.m() as f64
            );
            0
        }
        Err(e) => {
            // report.json is still written, with the failure recorded.
            let report = json!({
                "error": e.to_string(),
                "config_seed": cfg.seed,
            });
            let _ = std::fs::write(
                out.join("report.json"),
                serde_json::to_string_pretty(&report).expect("json"),
            );
            eprintln!("solve failed: {e}");
            1
        }
    }
}

fn write_solve_artifacts(
    cfg: &RunConfig,
    out: &Path,
    omega: &StarBody,
    field: &PotentialField,
    report: &IterationReport,
) -> std::io::Result<()> {
    std::fs::write(out.join("boundary.csv"), export::boundary_csv(omega))?;
    std::fs::write(out.join("field.csv"), export::field_csv(field))?;
    std::fs::write(out.join("iterations.jsonl"), export::iteration_jsonl(report))?;

    let levels = [0.25, 0.5, 0.75];
    let mut curves: Vec<(&str, StarBody)> = vec![("inner", field.grid.inner.clone())];
    for &t in &levels {
        if let Ok(body) = level_set(field, t) {
            curves.push(("level", body));
        }
    }
    curves.push(("outer", omega.clone()));
    std::fs::write(out.join("figure.svg"), render_svg(&curves))?;

    let last = report.records.last();
    let meta = json!({
        "solve": export::solve_meta_json(&field.meta),
        "iterations": report.records.len(),
        "total_solves": report.total_solves,
        "status": report.status,
        "sup_dev": last.map(|r| r.sup_dev),
        "inf_dev": last.map(|r| r.inf_dev),
        "interior_gradient_ratio": report.interior_gradient_ratio,
        "boundary_smoothness": curvature_diagnostic(omega),
        "seed": cfg.seed,
        "error": serde_json::Value::Null,
    });
    std::fs::write(out.join("report.json"), serde_json::to_string_pretty(&meta).expect("json"))?;
    Ok(())
}

/// Discrete curvature statistics along the outer boundary: a qualitative
/// smoothness diagnostic, reported but never asserted.
fn curvature_diagnostic(body: &StarBody) -> serde_json::Value {
    let pts = body.boundary_points();
    let m = pts.len();
    let mut kappa = Vec::with_capacity(m);
    for j in 0..m {
        let a = pts[(j + m - 1) % m];
        let b = pts[j];
        let c = pts[(j + 1) % m];
        let e0 = b - a;
        let e1 = c - b;
        let chord = c - a;
        let denom = e0.norm() * e1.norm() * chord.norm();
        if denom > 0.0 {
            kappa.push(2.0 * e0.cross(e1) / denom);
        }
    }
    let n = kappa.len() as f64;
    let mean = kappa.iter().sum::<f64>() / n;
    let var = kappa.iter().map(|k| (k - mean) * (k - mean)).sum::<f64>() / n;
    let min = kappa.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = kappa.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    json!({
        "curvature_mean": mean,
        "curvature_std": var.sqrt(),
        "curvature_min": min,
        "curvature_max": max,
    })
}

/// Direct SVG path generation; no plotting dependency.
fn render_svg(curves: &[(&str, StarBody)]) -> String {
    let mut lo = bfbs_core::Vec2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = bfbs_core::Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (_, body) in curves {
        for p in body.boundary_points() {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
    }
    let pad = 0.05 * (hi - lo).norm().max(1e-9);
    let (x0, y0) = (lo.x - pad, lo.y - pad);
    let (w, h) = (hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad);
    let size = 640.0;
    let scale = size / w.max(h);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\" \
         viewBox=\"0 0 {:.3} {:.3}\">\n",
        size,
        size * h / w,
        w * scale,
        h * scale
    );
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for (kind, body) in curves {
        let (stroke, width) = match *kind {
            "inner" => ("#1f4e9c", 2.0),
            "outer" => ("#b02418", 2.0),
            _ => ("#7a7a7a", 1.0),
        };
        let mut d = String::from("M ");
        for (k, p) in body.boundary_points().iter().enumerate() {
            if k > 0 {
                d.push_str("L ");
            }
            // Flip y so the figure is oriented the usual way.
            d.push_str(&format!(
                "{:.3} {:.3} ",
                (p.x - x0) * scale,
                (h - (p.y - y0)) * scale
            ));
        }
        d.push('Z');
        svg.push_str(&format!(
            "<path d=\"{d}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>\n"
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn run_verify(cfg: &RunConfig, out: &Path) -> u8 {
    match run_suite(cfg) {
        Ok(reports) => {
            let text = export::check_reports_json(&reports);
            println!("{text}");
            let _ = std::fs::write(out.join("verify.json"), &text);
            for rep in &reports {
                eprintln!(
                    "{:<32} {}   worst {:+.3e}",
                    rep.name,
                    if rep.passed { "PASS" } else { "FAIL" },
                    rep.worst_case
                );
            }
            if all_passed(&reports) {
                0
            } else {
                1
            }
        }
        Err(e) => {
            eprintln!("suite failed to run: {e}");
            1
        }
    }
}

pub fn run_oracle(p: f64, n: u32, a: f64, c: f64) -> u8 {
    match oracle::bernoulli_radius(p, n, a, c) {
        Ok(r) => {
            let g = oracle::RadialCase::new(p, n, a, r)
                .expect("bracketed radius is valid")
                .outer_gradient();
            println!("{}", json!({ "R": r, "residual": (g - c).abs() / c }));
            0
        }
        Err(e) => {
            eprintln!("oracle error: {e}");
            1
        }
    }
}

pub fn run_sweep(cfg: &RunConfig, out: &Path) -> u8 {
    let mut csv = String::from("p,c,R_numeric,R_oracle,hausdorff_to_oracle\n");
    let mut failures = 0usize;
    for &p in &cfg.sweep_p {
        for &c in &cfg.sweep_c {
            let mut cell = cfg.clone();
            cell.p = p;
            cell.c = c;
            cell.alpha = bfbs_core::operator::sharp_alpha_p_laplace(p) + 1e-9;
            let problem = match cell.problem() {
                Ok(pr) => pr,
                Err(e) => {
                    eprintln!("sweep cell (p={p}, c={c}): {e}");
                    failures += 1;
                    continue;
                }
            };
            match solve_bernoulli(&problem, cell.mode, cell.max_iter) {
                Ok((omega, _, _)) => {
                    let r_num = omega.rho().iter().sum::<f64>() / omega.m() as f64;
                    let radial = is_radial(&problem.inner);
                    let (r_oracle, dist) = if radial {
                        let a = problem.inner.rho()[0];
                        match oracle::bernoulli_radius(p, 2, a, c) {
                            Ok(r) => {
                                let disk = StarBody::disk(
                                    problem.inner.center(),
                                    r,
                                    omega.m(),
                                )
                                .expect("oracle disk");
                                (
                                    export::sig12(r),
                                    export::sig12(bfbs_core::geometry::hausdorff_distance(
                                        &omega, &disk,
                                    )),
                                )
                            }
                            Err(_) => (String::new(), String::new()),
                        }
                    } else {
                        (String::new(), String::new())
                    };
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        export::sig12(p),
                        export::sig12(c),
                        export::sig12(r_num),
                        r_oracle,
                        dist
                    ));
                }
                Err(e) => {
                    eprintln!("sweep cell (p={p}, c={c}) failed: {e}");
                    failures += 1;
                }
            }
        }
    }
    if std::fs::write(out.join("sweep.csv"), csv).is_err() {
        return 1;
    }
    if failures == 0 {
        0
    } else {
        1
    }
}

fn is_radial(body: &StarBody) -> bool {
    let r0 = body.rho()[0];
    body.rho().iter().all(|r| (r - r0).abs() <= 1e-9 * r0)
}
