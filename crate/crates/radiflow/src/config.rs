//! Run configuration: UTF-8 text, one `section.key = value` per line.
//!
//! Blank lines and lines starting with `#` are ignored. Sections are
//! `params`, `grid`, `solver`, `experiment` and `output`; every key has a
//! default, so a file holding only `params.*` lines is complete.
//!
//! | key | default | meaning |
//! |---|---|---|
//! | `params.eps` | 0.1 | relaxation parameter, in (0, 1] |
//! | `params.ell` | 1 | absorption |
//! | `params.ell_s` | 1 | scattering, >= 0 |
//! | `params.mu`, `params.lam` | 1, 0 | viscosities, `mu > 0`, `lam + 2 mu > 0` |
//! | `params.dim` | 2 | space dimension n |
//! | `params.c1` .. `params.c4` | 0 | slopes of `k_i(b) = c_i b + q_i b^2` |
//! | `params.q1` .. `params.q4` | 0 | curvatures of the same |
//! | `grid.n` | 32 | points per axis, power of two >= 8 |
//! | `grid.length` | 2 pi | box side |
//! | `solver.dt` | 0.01 | time step |
//! | `solver.scheme` | imex2 | `imex1` or `imex2` |
//! | `solver.nonlinear` | true | keep the nonlinear terms |
//! | `solver.eta` | 0.1 | smallness guard |
//! | `solver.t_end` | 1 | final time |
//! | `solver.record_every` | 10 | steps between snapshots |
//! | `experiment.kind` | noneq | `noneq`, `degen`, `poisson`, `modpressure` |
//! | `experiment.kappa`, `experiment.m` | 2, 1 | limit constants |
//! | `experiment.eps_ladder` | 0.1,0.05,0.025 | comma separated, decreasing |
//! | `experiment.amplitude` | 0.01 | L2 size of each random initial field |
//! | `experiment.k_max` | 4 | highest wavenumber in the initial data |
//! | `experiment.filter_k` | 4 | low-pass cutoff for convergence errors |
//! | `experiment.rho_min`, `experiment.rho_max`, `experiment.rho_count` | 0.01, 100, 41 | `modes` frequency ladder |
//! | `experiment.draws` | 100 | random draws for `toy` |
//! | `experiment.seed` | 0 | RNG seed |
//! | `output.dir` | out | output directory |

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use radiflow_core::params::{CouplingFunctions, PhysicalParams, RegimeKind};
use radiflow_core::spectral_solver::{Scheme, SolverConfig};

use crate::error::{AppError, AppResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    NonEq,
    Degen,
    Poisson,
    ModPressure,
}

impl ExperimentKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "noneq" => Some(Self::NonEq),
            "degen" => Some(Self::Degen),
            "poisson" => Some(Self::Poisson),
            "modpressure" => Some(Self::ModPressure),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::NonEq => "noneq",
            Self::Degen => "degen",
            Self::Poisson => "poisson",
            Self::ModPressure => "modpressure",
        }
    }

    /// Regime whose eps-family converges to this limit.
    pub fn regime(&self) -> RegimeKind {
        match self {
            Self::NonEq => RegimeKind::NonEquilibrium,
            Self::Degen => RegimeKind::DegenerateNonEquilibrium,
            Self::Poisson => RegimeKind::Poisson,
            Self::ModPressure => RegimeKind::Equilibrium,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamsSection {
    pub eps: f64,
    pub ell: f64,
    pub ell_s: f64,
    pub mu: f64,
    pub lam: f64,
    pub dim: usize,
    pub c: [f64; 4],
    pub q: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverSection {
    pub dt: f64,
    pub scheme: Scheme,
    pub nonlinear: bool,
    pub eta: f64,
    pub t_end: f64,
    pub record_every: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    pub kappa: f64,
    pub m: f64,
    pub eps_ladder: Vec<f64>,
    pub amplitude: f64,
    pub k_max: usize,
    pub filter_k: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub rho_count: usize,
    pub draws: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub dir: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ParamsSection,
    pub grid: GridSection,
    pub solver: SolverSection,
    pub experiment: ExperimentSection,
    pub output: OutputSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: ParamsSection {
                eps: 0.1,
                ell: 1.0,
                ell_s: 1.0,
                mu: 1.0,
                lam: 0.0,
                dim: 2,
                c: [0.0; 4],
                q: [0.0; 4],
            },
            grid: GridSection { n: 32, length: 2.0 * PI },
            solver: SolverSection {
                dt: 0.01,
                scheme: Scheme::Imex2,
                nonlinear: true,
                eta: 0.1,
                t_end: 1.0,
                record_every: 10,
            },
            experiment: ExperimentSection {
                kind: ExperimentKind::NonEq,
                kappa: 2.0,
                m: 1.0,
                eps_ladder: vec![0.1, 0.05, 0.025],
                amplitude: 0.01,
                k_max: 4,
                filter_k: 4.0,
                rho_min: 0.01,
                rho_max: 100.0,
                rho_count: 41,
                draws: 100,
                seed: 0,
            },
            output: OutputSection { dir: "out".into() },
        }
    }
}

fn schema(key: &str, line: usize, message: impl Into<String>) -> AppError {
    AppError::Schema { key: key.into(), line, message: message.into() }
}

fn parse_f64(key: &str, line: usize, v: &str) -> AppResult<f64> {
    let x: f64 = v.parse().map_err(|_| schema(key, line, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(schema(key, line, "must be finite"));
    }
    Ok(x)
}

fn parse_usize(key: &str, line: usize, v: &str) -> AppResult<usize> {
    v.parse().map_err(|_| schema(key, line, format!("`{v}` is not a nonnegative integer")))
}

fn parse_bool(key: &str, line: usize, v: &str) -> AppResult<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(schema(key, line, format!("`{v}` is not true/false"))),
    }
}

pub fn parse_ladder(v: &str) -> Option<Vec<f64>> {
    v.split(',').map(|s| s.trim().parse::<f64>().ok()).collect()
}

fn slot(key: &str, prefix: &str) -> Option<usize> {
    let i: usize = key.strip_prefix(prefix)?.parse().ok()?;
    (1..=4).contains(&i).then_some(i - 1)
}

impl RunConfig {
    pub fn load(path: &Path) -> AppResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        Self::parse(&text)
    }

    /// Parses and validates; unknown or repeated keys are rejected.
    pub fn parse(text: &str) -> AppResult<Self> {
        let mut cfg = RunConfig::default();
        let mut lines: BTreeMap<String, usize> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let s = raw.trim();
            if s.is_empty() || s.starts_with('#') {
                continue;
            }
            let (key, value) = s
                .split_once('=')
                .ok_or_else(|| schema(s, line, "expected `key = value`"))?;
            let key = key.trim();
            let value = value.trim();
            if lines.insert(key.to_string(), line).is_some() {
                return Err(schema(key, line, "duplicate key"));
            }
            cfg.set(key, value, line)?;
        }
        cfg.validate(&lines)?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, line: usize) -> AppResult<()> {
        let f = |v| parse_f64(key, line, v);
        let (section, name) = key.split_once('.').ok_or_else(|| schema(key, line, "unknown key"))?;
        match (section, name) {
            ("params", "eps") => self.params.eps = f(v)?,
            ("params", "ell") => self.params.ell = f(v)?,
            ("params", "ell_s") => self.params.ell_s = f(v)?,
            ("params", "mu") => self.params.mu = f(v)?,
            ("params", "lam") => self.params.lam = f(v)?,
            ("params", "dim") => self.params.dim = parse_usize(key, line, v)?,
            ("params", k) if slot(k, "c").is_some() => self.params.c[slot(k, "c").unwrap()] = f(v)?,
            ("params", k) if slot(k, "q").is_some() => self.params.q[slot(k, "q").unwrap()] = f(v)?,
            ("grid", "n") => self.grid.n = parse_usize(key, line, v)?,
            ("grid", "length") => self.grid.length = f(v)?,
            ("solver", "dt") => self.solver.dt = f(v)?,
            ("solver", "scheme") => {
                self.solver.scheme = match v {
                    "imex1" => Scheme::Imex1,
                    "imex2" => Scheme::Imex2,
                    _ => return Err(schema(key, line, format!("unknown scheme `{v}`"))),
                }
            }
            ("solver", "nonlinear") => self.solver.nonlinear = parse_bool(key, line, v)?,
            ("solver", "eta") => self.solver.eta = f(v)?,
            ("solver", "t_end") => self.solver.t_end = f(v)?,
            ("solver", "record_every") => self.solver.record_every = parse_usize(key, line, v)?,
            ("experiment", "kind") => {
                self.experiment.kind =
                    ExperimentKind::parse(v).ok_or_else(|| schema(key, line, format!("unknown kind `{v}`")))?
            }
            ("experiment", "kappa") => self.experiment.kappa = f(v)?,
            ("experiment", "m") => self.experiment.m = f(v)?,
            ("experiment", "eps_ladder") => {
                self.experiment.eps_ladder =
                    parse_ladder(v).ok_or_else(|| schema(key, line, "expected comma separated numbers"))?
            }
            ("experiment", "amplitude") => self.experiment.amplitude = f(v)?,
            ("experiment", "k_max") => self.experiment.k_max = parse_usize(key, line, v)?,
            ("experiment", "filter_k") => self.experiment.filter_k = f(v)?,
            ("experiment", "rho_min") => self.experiment.rho_min = f(v)?,
            ("experiment", "rho_max") => self.experiment.rho_max = f(v)?,
            ("experiment", "rho_count") => self.experiment.rho_count = parse_usize(key, line, v)?,
            ("experiment", "draws") => self.experiment.draws = parse_usize(key, line, v)?,
            ("experiment", "seed") => {
                self.experiment.seed = v.parse().map_err(|_| schema(key, line, "expected an integer seed"))?
            }
            ("output", "dir") => {
                if v.is_empty() {
                    return Err(schema(key, line, "empty path"));
                }
                self.output.dir = v.to_string()
            }
            _ => return Err(schema(key, line, "unknown key")),
        }
        Ok(())
    }

    /// Range checks. `lines` maps keys to the line that set them (0 when the
    /// value is a default or came from the command line).
    pub fn validate(&self, lines: &BTreeMap<String, usize>) -> AppResult<()> {
        let at = |k: &str| lines.get(k).copied().unwrap_or(0);
        let check = |ok: bool, k: &str, msg: &str| if ok { Ok(()) } else { Err(schema(k, at(k), msg)) };
        let p = &self.params;
        check(p.eps > 0.0 && p.eps <= 1.0, "params.eps", "must lie in (0, 1]")?;
        check(p.ell > 0.0, "params.ell", "must be positive")?;
        check(p.ell_s >= 0.0, "params.ell_s", "must be nonnegative")?;
        check(p.mu > 0.0, "params.mu", "must be positive")?;
        check(p.lam + 2.0 * p.mu > 0.0, "params.lam", "need lam + 2 mu > 0")?;
        check((2..=3).contains(&p.dim), "params.dim", "must be 2 or 3")?;
        let g = &self.grid;
        check(g.n >= 8 && g.n.is_power_of_two(), "grid.n", "must be a power of two >= 8")?;
        check(p.dim == 2 || g.n <= 48, "grid.n", "three-dimensional grids are capped at 48 points per axis")?;
        check(g.length > 0.0, "grid.length", "must be positive")?;
        let s = &self.solver;
        check(s.dt > 0.0, "solver.dt", "must be positive")?;
        check(s.eta > 0.0, "solver.eta", "must be positive")?;
        check(s.t_end > 0.0, "solver.t_end", "must be positive")?;
        let steps = s.t_end / s.dt;
        check((steps - steps.round()).abs() < 1e-9 * steps.max(1.0), "solver.t_end", "must be a multiple of solver.dt")?;
        check(s.record_every >= 1, "solver.record_every", "must be at least 1")?;
        let e = &self.experiment;
        check(e.kappa > 0.0, "experiment.kappa", "must be positive")?;
        check(e.m > 0.0, "experiment.m", "must be positive")?;
        check(!e.eps_ladder.is_empty(), "experiment.eps_ladder", "must not be empty")?;
        check(
            e.eps_ladder.iter().all(|x| *x > 0.0 && *x <= 1.0)
                && e.eps_ladder.windows(2).all(|w| w[1] < w[0]),
            "experiment.eps_ladder",
            "entries must lie in (0, 1] and strictly decrease",
        )?;
        check(e.amplitude >= 0.0, "experiment.amplitude", "must be nonnegative")?;
        check(e.k_max >= 1 && e.k_max <= g.n / 3, "experiment.k_max", "must lie in [1, grid.n / 3]")?;
        check(e.filter_k > 0.0, "experiment.filter_k", "must be positive")?;
        check(e.rho_min > 0.0 && e.rho_max >= e.rho_min, "experiment.rho_min", "need 0 < rho_min <= rho_max")?;
        check(e.rho_count >= 1, "experiment.rho_count", "must be at least 1")?;
        Ok(())
    }

    /// Writes every key, so `parse(serialize(c)) == c`.
    pub fn serialize(&self) -> String {
        let mut o = String::new();
        let p = &self.params;
        let _ = writeln!(o, "params.eps = {:?}", p.eps);
        let _ = writeln!(o, "params.ell = {:?}", p.ell);
        let _ = writeln!(o, "params.ell_s = {:?}", p.ell_s);
        let _ = writeln!(o, "params.mu = {:?}", p.mu);
        let _ = writeln!(o, "params.lam = {:?}", p.lam);
        let _ = writeln!(o, "params.dim = {}", p.dim);
        for i in 0..4 {
            let _ = writeln!(o, "params.c{} = {:?}", i + 1, p.c[i]);
        }
        for i in 0..4 {
            let _ = writeln!(o, "params.q{} = {:?}", i + 1, p.q[i]);
        }
        let _ = writeln!(o, "grid.n = {}", self.grid.n);
        let _ = writeln!(o, "grid.length = {:?}", self.grid.length);
        let s = &self.solver;
        let _ = writeln!(o, "solver.dt = {:?}", s.dt);
        let scheme = match s.scheme {
            Scheme::Imex1 => "imex1",
            Scheme::Imex2 => "imex2",
        };
        let _ = writeln!(o, "solver.scheme = {scheme}");
        let _ = writeln!(o, "solver.nonlinear = {}", s.nonlinear);
        let _ = writeln!(o, "solver.eta = {:?}", s.eta);
        let _ = writeln!(o, "solver.t_end = {:?}", s.t_end);
        let _ = writeln!(o, "solver.record_every = {}", s.record_every);
        let e = &self.experiment;
        let _ = writeln!(o, "experiment.kind = {}", e.kind.name());
        let _ = writeln!(o, "experiment.kappa = {:?}", e.kappa);
        let _ = writeln!(o, "experiment.m = {:?}", e.m);
        let ladder: Vec<String> = e.eps_ladder.iter().map(|x| format!("{x:?}")).collect();
        let _ = writeln!(o, "experiment.eps_ladder = {}", ladder.join(","));
        let _ = writeln!(o, "experiment.amplitude = {:?}", e.amplitude);
        let _ = writeln!(o, "experiment.k_max = {}", e.k_max);
        let _ = writeln!(o, "experiment.filter_k = {:?}", e.filter_k);
        let _ = writeln!(o, "experiment.rho_min = {:?}", e.rho_min);
        let _ = writeln!(o, "experiment.rho_max = {:?}", e.rho_max);
        let _ = writeln!(o, "experiment.rho_count = {}", e.rho_count);
        let _ = writeln!(o, "experiment.draws = {}", e.draws);
        let _ = writeln!(o, "experiment.seed = {}", e.seed);
        let _ = writeln!(o, "output.dir = {}", self.output.dir);
        o
    }

    pub fn physical_params(&self) -> AppResult<PhysicalParams> {
        let p = &self.params;
        Ok(PhysicalParams::new(p.eps, p.ell, p.ell_s, p.mu, p.lam, p.dim)?)
    }

    pub fn coupling(&self) -> CouplingFunctions {
        CouplingFunctions { linear: self.params.c, quadratic: self.params.q }
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            dt: self.solver.dt,
            scheme: self.solver.scheme,
            nonlinear_on: self.solver.nonlinear,
            smallness_eta: self.solver.eta,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse("params.eps = 0.2\nparams.ell = 3\n").unwrap();
        assert_eq!(c.params.eps, 0.2);
        assert_eq!(c.grid, RunConfig::default().grid);
    }

    #[test]
    fn negative_eps_is_a_schema_error() {
        let err = RunConfig::parse("# header\nparams.eps = -1\n").unwrap_err();
        match err {
            AppError::Schema { key, line, .. } => {
                assert_eq!(key, "params.eps");
                assert_eq!(line, 2);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let err = RunConfig::parse("params.eps = 0.1\n\nsolver.foo = 1\n").unwrap_err();
        assert!(matches!(err, AppError::Schema { ref key, line: 3, .. } if key == "solver.foo"));
    }

    #[test]
    fn round_trip_default() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.serialize()).unwrap(), c);
    }
}
