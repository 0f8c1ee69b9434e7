//! System-definition files: `key: value` headers followed by `forward:` and
//! `inverse:` component lists.
//!
//! ```text
//! name: disk twist
//! mode: polar
//! space: disk
//! radius: 1
//! forward: r, mod2pi(theta + r)
//! inverse: r, mod2pi(theta - r)
//! ```
//!
//! `const: a = <expr>` binds a named constant usable in later lines.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::expr::{parse_expr_with, split_components, Env, Expr, Origin};
use super::SysdefError;
use crate::dynamics::System;
use crate::metric_core::{Point, Region, Space};

/// Load-time round-trip tolerance.
pub const ROUND_TRIP_TOL: f64 = 1e-6;
pub const ROUND_TRIP_POINTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Cartesian,
    Polar,
}

/// A parsed forward/inverse expression pair.
#[derive(Clone, Debug, PartialEq)]
pub struct MapExpr {
    pub mode: Mode,
    pub forward: [Expr; 2],
    pub inverse: [Expr; 2],
}

fn apply(mode: Mode, exprs: &[Expr; 2], z: [f64; 2]) -> [f64; 2] {
    let env = Env::from_cartesian(z[0], z[1]);
    let (a, b) = (exprs[0].eval(&env), exprs[1].eval(&env));
    match mode {
        Mode::Cartesian => [a, b],
        Mode::Polar => [a * b.cos(), a * b.sin()],
    }
}

impl MapExpr {
    pub fn forward(&self, z: [f64; 2]) -> [f64; 2] {
        apply(self.mode, &self.forward, z)
    }

    pub fn inverse(&self, z: [f64; 2]) -> [f64; 2] {
        apply(self.mode, &self.inverse, z)
    }

    /// Worst `|g(f(z)) - z|` or `|f(g(z)) - z|` over the points, with the
    /// point attaining it.
    pub fn round_trip_error(&self, points: &[[f64; 2]]) -> ([f64; 2], f64) {
        let mut worst = ([0.0, 0.0], 0.0);
        for z in points {
            let a = self.inverse(self.forward(*z));
            let b = self.forward(self.inverse(*z));
            let e = (a[0] - z[0]).hypot(a[1] - z[1]).max((b[0] - z[0]).hypot(b[1] - z[1]));
            if !(e <= worst.1) {
                worst = (*z, e);
            }
        }
        worst
    }
}

#[derive(Clone, Debug)]
pub struct SystemDefinition {
    pub name: String,
    pub map: MapExpr,
    pub space: Space,
    pub system: System,
}

fn parse_pair(
    value: &str,
    line: usize,
    column: usize,
    constants: &BTreeMap<String, f64>,
) -> Result<[Expr; 2], SysdefError> {
    let parts = split_components(value);
    if parts.len() != 2 {
        return Err(SysdefError::Format {
            line,
            message: format!("expected 2 comma-separated components, found {}", parts.len()),
        });
    }
    let origin = |off: usize| Origin {
        line,
        column: column + off,
    };
    Ok([
        parse_expr_with(parts[0].1, origin(parts[0].0), constants)?,
        parse_expr_with(parts[1].1, origin(parts[1].0), constants)?,
    ])
}

/// Parse a definition file and enforce the round-trip invariant.
pub fn parse_system(text: &str) -> Result<SystemDefinition, SysdefError> {
    let mut name = None;
    let mut mode = None;
    let mut space_name = "plane".to_string();
    let mut radius = 1.0;
    let mut forward = None;
    let mut inverse = None;
    let mut constants = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once(':') else {
            return Err(SysdefError::Format {
                line,
                message: "expected 'key: value'".into(),
            });
        };
        let column = key.chars().count() + 2;
        let key = key.trim();
        let trimmed = value.trim();
        match key {
            "name" => name = Some(trimmed.to_string()),
            "mode" => {
                mode = Some(match trimmed {
                    "cartesian" => Mode::Cartesian,
                    "polar" => Mode::Polar,
                    other => {
                        return Err(SysdefError::Format {
                            line,
                            message: format!("mode must be cartesian or polar, not '{other}'"),
                        })
                    }
                })
            }
            "space" => {
                if !matches!(trimmed, "plane" | "disk") {
                    return Err(SysdefError::Format {
                        line,
                        message: format!("space must be plane or disk, not '{trimmed}'"),
                    });
                }
                space_name = trimmed.to_string();
            }
            "radius" => {
                radius = match trimmed.parse::<f64>() {
                    Ok(r) if r > 0.0 => r,
                    _ => {
                        return Err(SysdefError::Format {
                            line,
                            message: format!("radius must be a positive number, not '{trimmed}'"),
                        })
                    }
                }
            }
            "const" => {
                let Some((ident, expr)) = value.split_once('=') else {
                    return Err(SysdefError::Format {
                        line,
                        message: "expected 'const: NAME = expression'".into(),
                    });
                };
                let ident = ident.trim();
                let reserved = [
                    "x", "y", "r", "theta", "pi", "phi", "sin", "cos", "exp", "sqrt", "abs", "mod2pi",
                ];
                let valid = ident.chars().next().is_some_and(|c| c.is_ascii_alphabetic())
                    && ident.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
                if !valid || reserved.contains(&ident) {
                    return Err(SysdefError::Format {
                        line,
                        message: format!("'{ident}' cannot name a constant"),
                    });
                }
                let offset = column + value.find('=').unwrap_or(0) + 1;
                let e = parse_expr_with(expr, Origin { line, column: offset }, &constants)?;
                let v = e.eval(&Env::from_cartesian(0.0, 0.0));
                constants.insert(ident.to_string(), v);
            }
            "forward" => forward = Some(parse_pair(value, line, column, &constants)?),
            "inverse" => inverse = Some(parse_pair(value, line, column, &constants)?),
            other => {
                return Err(SysdefError::Format {
                    line,
                    message: format!("unknown key '{other}'"),
                })
            }
        }
    }
    let missing = |what: &str| SysdefError::Format {
        line: text.lines().count().max(1),
        message: format!("missing '{what}:' line"),
    };
    let map = MapExpr {
        mode: mode.ok_or_else(|| missing("mode"))?,
        forward: forward.ok_or_else(|| missing("forward"))?,
        inverse: inverse.ok_or_else(|| missing("inverse"))?,
    };
    let (space, region) = if space_name == "disk" {
        (Space::disk(radius), Region::Default)
    } else {
        (Space::plane(), Region::Ball { radius: 2.0 })
    };
    let probes: Vec<[f64; 2]> = space
        .sample(ROUND_TRIP_POINTS, 0, &region)
        .iter()
        .filter_map(Point::as_planar)
        .collect();
    let (point, error) = map.round_trip_error(&probes);
    if !(error <= ROUND_TRIP_TOL) {
        return Err(SysdefError::RoundTrip { point, error });
    }
    let name = name.unwrap_or_else(|| "user system".into());
    let shared = Arc::new(map.clone());
    let (f, g) = (shared.clone(), shared);
    let lift = |p: &Point, m: &dyn Fn([f64; 2]) -> [f64; 2]| match p.as_planar() {
        Some(z) => Point::Planar(m(z)),
        None => *p,
    };
    let system = System::new(
        name.clone(),
        space.clone(),
        move |p| lift(p, &|z| f.forward(z)),
        move |p| lift(p, &|z| g.inverse(z)),
    );
    Ok(SystemDefinition {
        name,
        map,
        space,
        system,
    })
}
