//! Text artifact serializers: CSV boundaries and fields, JSON reports,
//! JSON-lines iteration logs. All numeric output uses 12 significant
//! digits so repeated runs with one seed are byte-identical.

use serde_json::json;

use crate::free_boundary::IterationReport;
use crate::geometry::StarBody;
use crate::potential::{PotentialField, SolveMeta};
use crate::report::CheckReport;

/// 12 significant digits, scientific.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Boundary export: `j,theta,rho,x,y`, one row per angle sample.
pub fn boundary_csv(body: &StarBody) -> String {
    let mut out = String::from("j,theta,rho,x,y\n");
    for j in 0..body.m() {
        let p = body.point(j);
        out.push_str(&format!(
            "{j},{},{},{},{}\n",
            sig12(body.theta(j)),
            sig12(body.rho()[j]),
            sig12(p.x),
            sig12(p.y)
        ));
    }
    out
}

/// Field export: `i,j,s,theta,x,y,u,gx,gy`, layer-major.
pub fn field_csv(field: &PotentialField) -> String {
    let grid = &field.grid;
    let mut out = String::from("i,j,s,theta,x,y,u,gx,gy\n");
    for i in 0..=grid.n() {
        for j in 0..grid.m() {
            let p = grid.node(i, j);
            let g = field.gradient(i, j);
            out.push_str(&format!(
                "{i},{j},{},{},{},{},{},{},{}\n",
                sig12(grid.s(i)),
                sig12(grid.theta(j)),
                sig12(p.x),
                sig12(p.y),
                sig12(field.value(i, j)),
                sig12(g.x),
                sig12(g.y)
            ));
        }
    }
    out
}

/// Solve metadata as a single JSON object.
pub fn solve_meta_json(meta: &SolveMeta) -> serde_json::Value {
    json!({
        "iterations": meta.iterations,
        "residual": meta.residual,
        "delta_final": meta.delta_final,
        "wall_ms": meta.wall_ms,
    })
}

/// One JSON record per iteration.
pub fn iteration_jsonl(report: &IterationReport) -> String {
    let mut out = String::new();
    for rec in &report.records {
        let v = json!({
            "iter": rec.iter,
            "sup_dev": rec.sup_dev,
            "inf_dev": rec.inf_dev,
            "hausdorff_step": rec.hausdorff_step,
            "class": rec.class,
            "solver_iters": rec.solver_iters,
            "wall_ms": rec.wall_ms,
        });
        out.push_str(&v.to_string());
        out.push('\n');
    }
    out
}

/// Suite output: a JSON array of check reports.
pub fn check_reports_json(reports: &[CheckReport]) -> String {
    serde_json::to_string_pretty(reports).expect("reports serialize")
}
