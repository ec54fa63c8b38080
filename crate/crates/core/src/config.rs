//! Flat `key = value` run configuration.
//!
//! Unknown keys are hard errors, every value is validated at parse time,
//! and all defaults live here. `#` starts a comment; blank lines are
//! ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::free_boundary::{BernoulliProblem, FbOptions, UpdateMode};
use crate::geometry::{make_body, ShapeSpec};
use crate::math::{Mat2, Vec2};
use crate::operator::{sharp_alpha_p_laplace, OperatorFamily, OperatorSpec, P_MAX, P_MIN};
use crate::potential::SolverOptions;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub family: OperatorFamily,
    pub p: f64,
    pub q: Mat2,
    pub alpha: f64,
    pub lambda: f64,
    pub shape: ShapeSpec,
    pub c: f64,
    pub angles: usize,
    pub layers: usize,
    pub mode: UpdateMode,
    pub max_iter: usize,
    pub band: f64,
    pub tau: f64,
    pub solver_tol: f64,
    pub max_picard: usize,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub verify_corrupt: bool,
    /// Sweep axes for the `sweep` subcommand.
    pub sweep_p: Vec<f64>,
    pub sweep_c: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            family: OperatorFamily::PLaplace,
            p: 2.0,
            q: Mat2::IDENTITY,
            alpha: sharp_alpha_p_laplace(2.0) + 1e-9,
            lambda: 1e3,
            shape: ShapeSpec::Disk { r: 1.0 },
            c: 1.0,
            angles: 256,
            layers: 128,
            mode: UpdateMode::Normal,
            max_iter: 400,
            band: 0.01,
            tau: 0.3,
            solver_tol: 1e-8,
            max_picard: 200,
            output_dir: PathBuf::from("out"),
            seed: 42,
            verify_corrupt: false,
            sweep_p: vec![1.5, 2.0, 3.0],
            sweep_c: vec![0.5, 1.0, 2.0],
        }
    }
}

impl RunConfig {
    pub fn operator(&self) -> Result<OperatorSpec> {
        OperatorSpec::new(self.family, self.p, self.q, self.alpha, self.lambda)
    }

    pub fn fb_options(&self) -> FbOptions {
        FbOptions {
            n_layers: self.layers,
            band: self.band,
            tau: self.tau,
            max_iter: self.max_iter,
            solver: SolverOptions {
                tol: self.solver_tol,
                max_picard: self.max_picard,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    pub fn problem(&self) -> Result<BernoulliProblem> {
        let inner = make_body(&self.shape, self.angles)?;
        BernoulliProblem::new(inner, self.operator()?, self.c, self.fb_options())
    }
}

pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    let mut alpha_set = false;
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let stripped = match raw.find('#') {
            Some(k) => &raw[..k],
            None => raw,
        }
        .trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            return Err(Error::Config { line, msg: format!("malformed line: {raw:?}") });
        };
        let key = key.trim();
        let value = value.trim();
        if let Some(prev) = seen.insert(key.to_string(), line) {
            return Err(Error::Config {
                line,
                msg: format!("duplicate key {key:?} (first set at line {prev})"),
            });
        }
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Config { line, msg: format!("expected a number, got {v:?}") })
        };
        let int = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::Config { line, msg: format!("expected an integer, got {v:?}") })
        };
        let nums = |v: &str| -> Result<Vec<f64>> {
            v.split_whitespace().map(num).collect()
        };
        match key {
            "operator.family" => {
                cfg.family = match value {
                    "p_laplace" => OperatorFamily::PLaplace,
                    "quadratic_form" => OperatorFamily::QuadraticForm,
                    other => {
                        return Err(Error::Config {
                            line,
                            msg: format!("unknown operator family {other:?}"),
                        })
                    }
                };
            }
            "operator.p" => {
                let p = num(value)?;
                if !(P_MIN..=P_MAX).contains(&p) {
                    return Err(Error::Config {
                        line,
                        msg: format!("p = {p} out of supported range [{P_MIN}, {P_MAX}]"),
                    });
                }
                cfg.p = p;
            }
            "operator.q" => {
                let v = nums(value)?;
                if v.len() != 4 {
                    return Err(Error::Config {
                        line,
                        msg: format!("operator.q needs 4 row-major entries, got {}", v.len()),
                    });
                }
                cfg.q = Mat2::new(v[0], v[1], v[2], v[3]);
            }
            "operator.alpha" => {
                cfg.alpha = num(value)?;
                alpha_set = true;
            }
            "operator.lambda" => cfg.lambda = num(value)?,
            "domain.shape" => cfg.shape = parse_shape(value, line)?,
            "bernoulli.c" => {
                cfg.c = num(value)?;
                if !(cfg.c > 0.0) {
                    return Err(Error::Config { line, msg: "bernoulli.c must be positive".into() });
                }
            }
            "grid.angles" => {
                let m = int(value)?;
                if m < 64 || !m.is_power_of_two() {
                    return Err(Error::Config {
                        line,
                        msg: format!("grid.angles must be a power of two >= 64, got {m}"),
                    });
                }
                cfg.angles = m;
            }
            "grid.layers" => {
                let n = int(value)?;
                if n < 32 {
                    return Err(Error::Config {
                        line,
                        msg: format!("grid.layers must be >= 32, got {n}"),
                    });
                }
                cfg.layers = n;
            }
            "fb.mode" => {
                cfg.mode = match value {
                    "normal" => UpdateMode::Normal,
                    "trim" => UpdateMode::Trim,
                    other => {
                        return Err(Error::Config {
                            line,
                            msg: format!("fb.mode must be normal or trim, got {other:?}"),
                        })
                    }
                };
            }
            "fb.max_iter" => cfg.max_iter = int(value)?,
            "fb.band" => {
                cfg.band = num(value)?;
                if !(cfg.band > 0.0 && cfg.band < 0.5) {
                    return Err(Error::Config {
                        line,
                        msg: format!("fb.band must lie in (0, 0.5), got {}", cfg.band),
                    });
                }
            }
            "fb.tau" => {
                cfg.tau = num(value)?;
                if !(cfg.tau > 0.0 && cfg.tau <= 1.0) {
                    return Err(Error::Config {
                        line,
                        msg: format!("fb.tau must lie in (0, 1], got {}", cfg.tau),
                    });
                }
            }
            "solver.tol" => {
                cfg.solver_tol = num(value)?;
                if !(cfg.solver_tol > 0.0) {
                    return Err(Error::Config { line, msg: "solver.tol must be positive".into() });
                }
            }
            "solver.max_picard" => cfg.max_picard = int(value)?,
            "output.dir" => cfg.output_dir = PathBuf::from(value),
            "seed" => {
                cfg.seed = value.parse::<u64>().map_err(|_| Error::Config {
                    line,
                    msg: format!("expected an unsigned integer seed, got {value:?}"),
                })?;
            }
            "verify.corrupt" => {
                cfg.verify_corrupt = match value {
                    "true" => true,
                    "false" => false,
                    other => {
                        return Err(Error::Config {
                            line,
                            msg: format!("verify.corrupt must be true or false, got {other:?}"),
                        })
                    }
                };
            }
            "sweep.p" => {
                cfg.sweep_p = nums(value)?;
                if cfg.sweep_p.iter().any(|p| !(P_MIN..=P_MAX).contains(p)) {
                    return Err(Error::Config {
                        line,
                        msg: "sweep.p entries must lie in the supported p range".into(),
                    });
                }
            }
            "sweep.c" => {
                cfg.sweep_c = nums(value)?;
                if cfg.sweep_c.iter().any(|c| !(*c > 0.0)) {
                    return Err(Error::Config {
                        line,
                        msg: "sweep.c entries must be positive".into(),
                    });
                }
            }
            other => {
                return Err(Error::Config { line, msg: format!("unknown key {other:?}") });
            }
        }
    }

    if !alpha_set {
        cfg.alpha = match cfg.family {
            OperatorFamily::PLaplace => sharp_alpha_p_laplace(cfg.p) + 1e-9,
            OperatorFamily::QuadraticForm => {
                OperatorSpec::quadratic_form(cfg.p, cfg.q)
                    .map_err(|e| Error::Config { line: 0, msg: e.to_string() })?
                    .alpha
            }
        };
    }

    // Validate the operator and shape eagerly so `solve` fails before any
    // artifact is written.
    cfg.operator().map_err(|e| Error::Config { line: 0, msg: e.to_string() })?;
    make_body(&cfg.shape, cfg.angles).map_err(|e| Error::Config { line: 0, msg: e.to_string() })?;
    Ok(cfg)
}

fn parse_shape(value: &str, line: usize) -> Result<ShapeSpec> {
    let toks: Vec<&str> = value.split_whitespace().collect();
    let num = |v: &str| -> Result<f64> {
        v.parse::<f64>()
            .map_err(|_| Error::Config { line, msg: format!("expected a number, got {v:?}") })
    };
    match toks.split_first() {
        Some((&"disk", rest)) if rest.len() == 1 => Ok(ShapeSpec::Disk { r: num(rest[0])? }),
        Some((&"ellipse", rest)) if rest.len() == 3 => Ok(ShapeSpec::Ellipse {
            a: num(rest[0])?,
            b: num(rest[1])?,
            phi: num(rest[2])?,
        }),
        Some((&"rounded_polygon", rest)) if rest.len() >= 7 && rest.len() % 2 == 1 => {
            let coords: Vec<f64> = rest.iter().map(|t| num(t)).collect::<Result<_>>()?;
            let corner_radius = *coords.last().unwrap();
            let vertices = coords[..coords.len() - 1]
                .chunks(2)
                .map(|xy| Vec2::new(xy[0], xy[1]))
                .collect();
            Ok(ShapeSpec::RoundedPolygon { vertices, corner_radius })
        }
        _ => Err(Error::Config {
            line,
            msg: format!(
                "domain.shape must be `disk r`, `ellipse a b phi`, or \
                 `rounded_polygon x1 y1 ... xn yn corner_radius`; got {value:?}"
            ),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config_str(
            "operator.p = 2\nbernoulli.c = 1\ndomain.shape = disk 1\n",
        )
        .unwrap();
        assert_eq!(cfg.angles, 256);
        assert_eq!(cfg.layers, 128);
        assert_eq!(cfg.mode, UpdateMode::Normal);
        assert_eq!(cfg.seed, 42);
    }

    #[test]
    fn p_out_of_range_names_line() {
        let err = parse_config_str("bernoulli.c = 1\noperator.p = 0.9\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
        assert!(msg.contains("supported range"), "{msg}");
    }

    #[test]
    fn sharp_corner_rejected_with_reason() {
        let err = parse_config_str(
            "domain.shape = rounded_polygon -1 -1 1 -1 1 1 -1 1 0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("interior ball"), "{err}");
    }

    #[test]
    fn unknown_key_rejected() {
        let err = parse_config_str("operator.px = 2\n").unwrap_err();
        assert!(err.to_string().contains("unknown key"), "{err}");
    }

    #[test]
    fn malformed_line_rejected() {
        let err = parse_config_str("operator.p 2\n").unwrap_err();
        assert!(err.to_string().contains("malformed"), "{err}");
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = parse_config_str(
            "# run setup\n\noperator.p = 3 # cubic\nfb.mode = trim\n",
        )
        .unwrap();
        assert_eq!(cfg.p, 3.0);
        assert_eq!(cfg.mode, UpdateMode::Trim);
    }

    #[test]
    fn duplicate_key_rejected() {
        let err = parse_config_str("operator.p = 2\noperator.p = 3\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn bad_grid_sizes_rejected() {
        assert!(parse_config_str("grid.angles = 100\n").is_err());
        assert!(parse_config_str("grid.angles = 32\n").is_err());
        assert!(parse_config_str("grid.layers = 16\n").is_err());
    }

    #[test]
    fn quadratic_form_alpha_defaulted() {
        let cfg = parse_config_str(
            "operator.family = quadratic_form\noperator.p = 2.5\noperator.q = 2 0 0 1\n",
        )
        .unwrap();
        assert!(cfg.alpha > 1.0);
        assert!(cfg.operator().is_ok());
    }
}
