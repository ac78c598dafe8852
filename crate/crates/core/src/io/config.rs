//! Strict JSON run configuration.
//!
//! Every key is optional; missing values take the defaults of the chosen
//! problem kind and unknown keys are rejected. Example:
//!
//! ```json
//! { "problem": "manufactured", "theta": "exp", "rows": [[4, 10], [5, 40]] }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constitutive::MaterialParams;
use crate::error::{Error, Result};
use crate::experiments::{coupled_steps, ConvergenceConfig, PracticalConfig, COUPLING_CONSTANT};
use crate::manufactured::Theta;
use crate::solver::ViscousForm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    Manufactured,
    Practical,
}

/// Optional overrides of the material parameters.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    pub alpha: Option<f64>,
    pub nu: Option<f64>,
    pub rho: Option<f64>,
    pub rho_s: Option<f64>,
    pub e1: Option<f64>,
    pub e2: Option<f64>,
    /// Sets both `lambda1` and `lambda2`; the specific keys win.
    pub lambda: Option<f64>,
    pub lambda1: Option<f64>,
    pub lambda2: Option<f64>,
    pub delta: Option<f64>,
}

impl ParamOverrides {
    fn apply(&self, mut p: MaterialParams) -> MaterialParams {
        let set = |dst: &mut f64, src: Option<f64>| {
            if let Some(v) = src {
                *dst = v;
            }
        };
        set(&mut p.alpha, self.alpha);
        set(&mut p.nu, self.nu);
        set(&mut p.rho, self.rho);
        set(&mut p.rho_s, self.rho_s);
        set(&mut p.e1, self.e1);
        set(&mut p.e2, self.e2);
        set(&mut p.lambda1, self.lambda);
        set(&mut p.lambda2, self.lambda);
        set(&mut p.lambda1, self.lambda1);
        set(&mut p.lambda2, self.lambda2);
        set(&mut p.delta, self.delta);
        p
    }
}

/// The document as written, before defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub problem: Option<ProblemKind>,
    pub theta: Option<Theta>,
    pub m: Option<u32>,
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    #[serde(alias = "N")]
    pub n_steps: Option<usize>,
    pub dt: Option<f64>,
    /// `(m, N)` rows of a convergence study.
    pub rows: Option<Vec<(u32, usize)>>,
    /// Levels of a study with `dt = 12.8 h^2`.
    pub coupled_levels: Option<Vec<u32>>,
    /// `lambda1 = lambda2` values swept by the practical pipeline.
    pub lambdas: Option<Vec<f64>>,
    pub params: Option<ParamOverrides>,
    pub viscous_form: Option<ViscousForm>,
    pub output_dir: Option<PathBuf>,
    pub vtu_every: Option<usize>,
    pub deterministic: Option<bool>,
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemKind,
    pub theta: Theta,
    /// Refinement level of the unit square (manufactured problem).
    pub m: u32,
    pub nx: usize,
    pub ny: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub rows: Vec<(u32, usize)>,
    pub lambdas: Vec<f64>,
    pub params: MaterialParams,
    pub viscous_form: ViscousForm,
    pub output_dir: PathBuf,
    /// Snapshot stride; 0 disables field output.
    pub vtu_every: usize,
    /// Runs are sequential with ordered reductions either way; kept so the
    /// flag is explicit in checked-in configs.
    pub deterministic: bool,
}

fn config_error(path: &str, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn resolve(raw: RawConfig) -> Result<Self> {
        let problem = raw.problem.unwrap_or(ProblemKind::Manufactured);
        let overrides = raw.params.unwrap_or_default();
        let cfg = match problem {
            ProblemKind::Manufactured => {
                for (key, present) in [("nx", raw.nx.is_some()), ("ny", raw.ny.is_some()), ("dt", raw.dt.is_some())] {
                    if present {
                        return Err(config_error(key, "not used by the manufactured problem (mesh is 2^m x 2^m, dt = 1/N)"));
                    }
                }
                if raw.lambdas.is_some() {
                    return Err(config_error("lambdas", "only used by the practical problem"));
                }
                let m = raw.m.unwrap_or(4);
                if !(1..=10).contains(&m) {
                    return Err(config_error("m", format!("refinement level {m} outside 1..=10")));
                }
                let n_steps = raw.n_steps.unwrap_or(10);
                let mut rows = raw.rows.unwrap_or_default();
                if let Some(levels) = raw.coupled_levels {
                    rows.extend(levels.iter().map(|&l| (l, coupled_steps(l, COUPLING_CONSTANT))));
                }
                if let Some(i) = rows.iter().position(|&(m, n)| m == 0 || m > 10 || n == 0) {
                    return Err(config_error(&format!("rows[{i}]"), "need 1 <= m <= 10 and N >= 1"));
                }
                let params = overrides.apply(MaterialParams::manufactured());
                RunConfig {
                    problem,
                    theta: raw.theta.unwrap_or(Theta::Exp),
                    m,
                    nx: 1 << m,
                    ny: 1 << m,
                    n_steps,
                    dt: 1.0 / n_steps as f64,
                    rows,
                    lambdas: Vec::new(),
                    params,
                    viscous_form: raw.viscous_form.unwrap_or(ViscousForm::GradGrad),
                    output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("output")),
                    vtu_every: raw.vtu_every.unwrap_or(0),
                    deterministic: raw.deterministic.unwrap_or(true),
                }
            }
            ProblemKind::Practical => {
                for (key, present) in [
                    ("theta", raw.theta.is_some()),
                    ("m", raw.m.is_some()),
                    ("rows", raw.rows.is_some()),
                    ("coupled_levels", raw.coupled_levels.is_some()),
                ] {
                    if present {
                        return Err(config_error(key, "only used by the manufactured problem"));
                    }
                }
                let defaults = PracticalConfig::new(0.0);
                let params = overrides.apply(defaults.params);
                let lambdas = raw.lambdas.unwrap_or_else(|| vec![params.lambda1]);
                if params.lambda1 != params.lambda2 && lambdas.len() > 1 {
                    return Err(config_error("lambdas", "a lambda sweep sets lambda1 = lambda2"));
                }
                let nx = raw.nx.unwrap_or(defaults.nx);
                let ny = raw.ny.unwrap_or(defaults.ny);
                if nx == 0 || ny == 0 {
                    return Err(config_error("nx", "cell counts must be positive"));
                }
                let dt = raw.dt.unwrap_or(defaults.dt);
                if !(dt > 0.0) {
                    return Err(config_error("dt", "time step must be positive"));
                }
                RunConfig {
                    problem,
                    theta: Theta::Exp,
                    m: 0,
                    nx,
                    ny,
                    n_steps: raw.n_steps.unwrap_or(defaults.n_steps),
                    dt,
                    rows: Vec::new(),
                    lambdas,
                    params,
                    viscous_form: raw.viscous_form.unwrap_or(defaults.viscous_form),
                    output_dir: raw.output_dir.unwrap_or_else(|| PathBuf::from("output")),
                    vtu_every: raw.vtu_every.unwrap_or(0),
                    deterministic: raw.deterministic.unwrap_or(true),
                }
            }
        };
        if cfg.n_steps == 0 {
            return Err(config_error("n_steps", "must be positive"));
        }
        cfg.params.validate().map_err(|e| config_error("params", e.to_string()))?;
        Ok(cfg)
    }

    pub fn convergence(&self) -> ConvergenceConfig {
        ConvergenceConfig {
            theta: self.theta,
            rows: self.rows.clone(),
            params: self.params,
        }
    }

    /// Practical configuration for one value of the lambda sweep.
    pub fn practical(&self, lambda: Option<f64>) -> PracticalConfig {
        let mut params = self.params;
        if let Some(l) = lambda {
            params.lambda1 = l;
            params.lambda2 = l;
        }
        PracticalConfig {
            nx: self.nx,
            ny: self.ny,
            dt: self.dt,
            n_steps: self.n_steps,
            params,
            viscous_form: self.viscous_form,
            ..PracticalConfig::new(params.lambda1)
        }
    }
}

/// Parses and validates a JSON configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig = serde_json::from_str(text).map_err(|e| config_error(&key_of(&e), e.to_string()))?;
    RunConfig::resolve(raw)
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text).map_err(|e| match e {
        Error::Config { path: key, message } => Error::Config {
            path: format!("{}:{key}", path.display()),
            message,
        },
        other => other,
    })
}

/// Best-effort key name out of a serde message such as
/// "unknown field `nz`, expected ...".
fn key_of(e: &serde_json::Error) -> String {
    let msg = e.to_string();
    msg.split('`').nth(1).map(str::to_string).unwrap_or_else(|| "<document>".into())
}
