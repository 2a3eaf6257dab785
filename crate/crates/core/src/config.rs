//! Run configuration.
//!
//! A TOML document with the sections `model`, `solver`, `measurement`,
//! `spectrum`, `converge`, `output` and `sweep`. All frequencies and rates are
//! angular frequencies in the same unit; times are in its inverse. See
//! `configs/` for commented examples.
//!
//! Operators are named either by a built-in (`sigma`, `sigma_dag`, `sigma_x`,
//! `sigma_y`, `sigma_z`, `identity`, `excited`, `ground`; dimension 2) or by a
//! matrix file path relative to the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bath::{parse_tabulated, BathSpectrum, SpectrumFamily};
use crate::correlation::{MeasurementSpec, STATIONARITY_TOL};
use crate::error::{Error, Result};
use crate::mollow::{big_gamma_t, build_tls_model, TlsParams};
use crate::operator::{
    c64, identity, projector, sigma_minus, ComplexMatrix, DensityMatrix, GkslGenerator,
    MemoryKernel,
};
use crate::propagator::{steps_for, PropagatorConfig};

/// Schema or parse failure with the offending field path.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemaError {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for SchemaError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for SchemaError {}

fn schema(path: &str, message: impl Into<String>) -> SchemaError {
    SchemaError {
        path: path.to_string(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    pub solver: SolverConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measurement: Option<MeasurementConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<SpectrumConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub converge: Option<ConvergeConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelConfig {
    Tls(TlsConfig),
    Generic(GenericConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsConfig {
    #[serde(default)]
    pub omega0: f64,
    pub rabi: f64,
    /// Defaults to `omega0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drive: Option<f64>,
    pub gamma_m: f64,
    #[serde(default)]
    pub gamma_m_bar: f64,
    pub bath: BathConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathConfig {
    pub family: FamilyName,
    #[serde(default)]
    pub coupling: f64,
    /// Defaults to the transition frequency.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_white: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyName {
    Flat,
    Lorentzian,
    OhmicExpCutoff,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenericConfig {
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hamiltonian: Option<String>,
    #[serde(default)]
    pub lindblads: Vec<ChannelConfig>,
    #[serde(default)]
    pub kernel: KernelConfig,
    pub initial_state: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub operator: String,
    /// The Lindblad operator is `sqrt(rate) * operator`.
    #[serde(default = "one")]
    pub rate: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelConfig {
    #[default]
    None,
    Exponential {
        amplitude: f64,
        rate: f64,
        jump_ops: Vec<String>,
    },
    Bath {
        bath: BathConfig,
        jump_ops: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub dt: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub memory_window: Option<f64>,
    /// Set the window at the kernel decay lag of the bath.
    #[serde(default)]
    pub auto_window: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasurementKindName {
    /// Emission quadrature pair of the two-level model.
    Emission,
    Weak,
    Instantaneous,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementConfig {
    pub kind: MeasurementKindName,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub operators: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub channels: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
    /// Defaults to `20 / Gamma_T` for the two-level model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_star: Option<f64>,
    pub tau_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stationarity_tol: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub omega_min: f64,
    pub omega_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    pub dt_list: Vec<f64>,
    pub t_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_dir() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Dotted key path, e.g. `model.rabi`.
    pub parameter: String,
    pub values: Vec<f64>,
}

impl RunConfig {
    /// Parse without validation.
    pub fn parse(text: &str) -> std::result::Result<Self, SchemaError> {
        let de = toml::Deserializer::parse(text).map_err(|e| schema("", e.to_string()))?;
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            schema(&path, e.into_inner().message().to_string())
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Defaults made explicit.
    pub fn normalized(&self) -> std::result::Result<Self, SchemaError> {
        let mut c = self.clone();
        if let ModelConfig::Tls(t) = &mut c.model {
            t.drive.get_or_insert(t.omega0);
            t.bath.reference.get_or_insert(t.omega0);
            t.initial_state.get_or_insert_with(|| "ground".into());
        }
        if let ModelConfig::Generic(g) = &mut c.model {
            if let KernelConfig::Bath { bath, .. } = &mut g.kernel {
                bath.reference.get_or_insert(0.0);
            }
        }
        if let Some(m) = &mut c.measurement {
            m.stationarity_tol.get_or_insert(STATIONARITY_TOL);
            if m.weights.is_empty() && m.kind != MeasurementKindName::Emission {
                let n = match m.kind {
                    MeasurementKindName::Continuous => m.channels.len(),
                    MeasurementKindName::Instantaneous => m.operators.len(),
                    _ => 0,
                };
                m.weights = vec![1.0; n];
            }
            if m.t_star.is_none() {
                if let ModelConfig::Tls(_) = &c.model {
                    let params = tls_params(&c.model, Path::new("."))
                        .map_err(|e| schema("model", e.to_string()))?
                        .expect("tls");
                    let gt = big_gamma_t(&params).map_err(|e| schema("model", e.to_string()))?;
                    if gt > 0.0 {
                        let raw = 20.0 / gt;
                        // round up onto the solver grid
                        let dt = c.solver.dt;
                        m.t_star = Some(if dt > 0.0 {
                            (raw / dt).ceil() * dt
                        } else {
                            raw
                        });
                    }
                }
            }
        }
        if c.solver.t_final.is_none() {
            if let Some(m) = &c.measurement {
                c.solver.t_final = m.t_star.map(|t| t + m.tau_max);
            }
        }
        Ok(c)
    }

    /// Schema checks that do not need computation; `base` resolves file paths.
    pub fn validate(&self, base: &Path) -> std::result::Result<(), SchemaError> {
        let s = &self.solver;
        if !(s.dt > 0.0) || !s.dt.is_finite() {
            return Err(schema("solver.dt", "must be a positive number"));
        }
        if let Some(w) = s.memory_window {
            if !(w >= 0.0) {
                return Err(schema("solver.memory_window", "must be >= 0"));
            }
            if s.auto_window {
                return Err(schema("solver.auto_window", "conflicts with memory_window"));
            }
        }
        match &self.model {
            ModelConfig::Tls(t) => {
                check_bath(&t.bath, "model.bath", base)?;
                if t.gamma_m < 0.0 || t.gamma_m_bar < 0.0 {
                    return Err(schema("model", "gamma_m and gamma_m_bar must be >= 0"));
                }
                if let Some(st) = &t.initial_state {
                    check_operator(st, 2, "model.initial_state", base)?;
                }
            }
            ModelConfig::Generic(g) => {
                if g.dim == 0 || g.dim > 16 {
                    return Err(schema("model.dim", "must lie in 1..=16"));
                }
                if let Some(h) = &g.hamiltonian {
                    check_operator(h, g.dim, "model.hamiltonian", base)?;
                }
                for (i, l) in g.lindblads.iter().enumerate() {
                    let p = format!("model.lindblads[{i}]");
                    check_operator(&l.operator, g.dim, &format!("{p}.operator"), base)?;
                    if !(l.rate >= 0.0) {
                        return Err(schema(&format!("{p}.rate"), "must be >= 0"));
                    }
                }
                check_operator(&g.initial_state, g.dim, "model.initial_state", base)?;
                match &g.kernel {
                    KernelConfig::None => {}
                    KernelConfig::Exponential { jump_ops, rate, .. } => {
                        if !(*rate > 0.0) {
                            return Err(schema("model.kernel.rate", "must be > 0"));
                        }
                        for (i, a) in jump_ops.iter().enumerate() {
                            check_operator(a, g.dim, &format!("model.kernel.jump_ops[{i}]"), base)?;
                        }
                    }
                    KernelConfig::Bath { bath, jump_ops } => {
                        check_bath(bath, "model.kernel.bath", base)?;
                        for (i, a) in jump_ops.iter().enumerate() {
                            check_operator(a, g.dim, &format!("model.kernel.jump_ops[{i}]"), base)?;
                        }
                    }
                }
            }
        }
        if let Some(m) = &self.measurement {
            steps_for(m.tau_max, s.dt).map_err(|e| schema("measurement.tau_max", e.to_string()))?;
            if let Some(t) = m.t_star {
                steps_for(t, s.dt).map_err(|e| schema("measurement.t_star", e.to_string()))?;
            } else if matches!(self.model, ModelConfig::Generic(_)) {
                return Err(schema("measurement.t_star", "required for generic models"));
            }
            let dim = self.dim();
            match m.kind {
                MeasurementKindName::Emission => {
                    if dim != 2 {
                        return Err(schema(
                            "measurement.kind",
                            "emission needs a two-level model",
                        ));
                    }
                }
                MeasurementKindName::Weak => {
                    if m.operators.len() != 1 {
                        return Err(schema(
                            "measurement.operators",
                            "weak needs exactly one operator",
                        ));
                    }
                }
                MeasurementKindName::Instantaneous => {
                    if m.operators.is_empty() {
                        return Err(schema(
                            "measurement.operators",
                            "at least one effect required",
                        ));
                    }
                }
                MeasurementKindName::Continuous => {
                    if m.channels.is_empty() {
                        return Err(schema(
                            "measurement.channels",
                            "at least one channel required",
                        ));
                    }
                }
            }
            for (i, o) in m.operators.iter().enumerate() {
                check_operator(o, dim, &format!("measurement.operators[{i}]"), base)?;
            }
        }
        if let Some(sp) = &self.spectrum {
            if sp.points < 2 || !(sp.omega_max > sp.omega_min) {
                return Err(schema(
                    "spectrum",
                    "need points >= 2 and omega_max > omega_min",
                ));
            }
        }
        if let Some(cv) = &self.converge {
            if cv.dt_list.len() < 2 || cv.dt_list.windows(2).any(|w| w[1] >= w[0]) {
                return Err(schema(
                    "converge.dt_list",
                    "need >= 2 strictly descending steps",
                ));
            }
            for (i, &dt) in cv.dt_list.iter().enumerate() {
                steps_for(cv.t_final, dt)
                    .map_err(|e| schema(&format!("converge.dt_list[{i}]"), e.to_string()))?;
            }
        }
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(schema("sweep.values", "must not be empty"));
            }
        }
        if let Some(t) = s.t_final {
            steps_for(t, s.dt).map_err(|e| schema("solver.t_final", e.to_string()))?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match &self.model {
            ModelConfig::Tls(_) => 2,
            ModelConfig::Generic(g) => g.dim,
        }
    }

    /// One config per sweep value with the parameter substituted.
    pub fn expand_sweep(&self) -> std::result::Result<Vec<(String, RunConfig)>, SchemaError> {
        let Some(sw) = &self.sweep else {
            return Ok(vec![(String::new(), self.clone())]);
        };
        let mut base = self.clone();
        base.sweep = None;
        let value = toml::Value::try_from(&base).map_err(|e| schema("", e.to_string()))?;
        let mut out = Vec::with_capacity(sw.values.len());
        for (i, &v) in sw.values.iter().enumerate() {
            let mut doc = value.clone();
            set_path(&mut doc, &sw.parameter, toml::Value::Float(v))
                .map_err(|m| schema("sweep.parameter", m))?;
            let text = toml::to_string(&doc).map_err(|e| schema("", e.to_string()))?;
            let cfg = RunConfig::parse(&text)?;
            out.push((format!("sweep_{i:03}"), cfg));
        }
        Ok(out)
    }
}

fn set_path(doc: &mut toml::Value, path: &str, v: toml::Value) -> std::result::Result<(), String> {
    let mut cur = doc;
    let parts: Vec<&str> = path.split('.').collect();
    for (k, part) in parts.iter().enumerate() {
        let table = cur
            .as_table_mut()
            .ok_or_else(|| format!("`{path}` does not name a table entry"))?;
        if k + 1 == parts.len() {
            match table.get(*part) {
                Some(toml::Value::Float(_)) | Some(toml::Value::Integer(_)) | None => {
                    table.insert(part.to_string(), v);
                    return Ok(());
                }
                Some(_) => return Err(format!("`{path}` is not numeric")),
            }
        }
        cur = table
            .get_mut(*part)
            .ok_or_else(|| format!("`{path}`: no key `{part}`"))?;
    }
    Err(format!("`{path}` is empty"))
}

fn check_bath(b: &BathConfig, path: &str, base: &Path) -> std::result::Result<(), SchemaError> {
    let need = |v: Option<f64>, key: &str| -> std::result::Result<(), SchemaError> {
        if v.is_none() {
            return Err(schema(&format!("{path}.{key}"), "required for this family"));
        }
        Ok(())
    };
    match b.family {
        FamilyName::Flat => need(b.c_white, "c_white")?,
        FamilyName::Lorentzian => {
            need(b.amplitude, "amplitude")?;
            need(b.width, "width")?;
        }
        FamilyName::OhmicExpCutoff => {
            need(b.amplitude, "amplitude")?;
            need(b.cutoff, "cutoff")?;
        }
        FamilyName::Tabulated => match &b.file {
            None => {
                return Err(schema(
                    &format!("{path}.file"),
                    "required for tabulated spectra",
                ))
            }
            Some(f) if !base.join(f).is_file() => {
                return Err(schema(
                    &format!("{path}.file"),
                    format!("{} not found", f.display()),
                ))
            }
            _ => {}
        },
    }
    Ok(())
}

const BUILTINS: [&str; 8] = [
    "sigma",
    "sigma_dag",
    "sigma_x",
    "sigma_y",
    "sigma_z",
    "identity",
    "excited",
    "ground",
];

fn check_operator(
    name: &str,
    dim: usize,
    path: &str,
    base: &Path,
) -> std::result::Result<(), SchemaError> {
    if BUILTINS.contains(&name) {
        if dim != 2 && name != "identity" {
            return Err(schema(path, format!("built-in `{name}` needs dim 2")));
        }
        return Ok(());
    }
    if !base.join(name).is_file() {
        return Err(schema(
            path,
            format!("`{name}` is neither a built-in nor a file"),
        ));
    }
    Ok(())
}

/// Built-in operator or matrix file.
pub fn resolve_operator(name: &str, dim: usize, base: &Path) -> Result<ComplexMatrix> {
    let sm = sigma_minus();
    let m = match name {
        "sigma" => sm,
        "sigma_dag" => sm.adjoint(),
        "sigma_x" => &sm + sm.adjoint(),
        "sigma_y" => (sm.adjoint() - &sm) * c64(0.0, -1.0),
        "sigma_z" => projector(2, 1) - projector(2, 0),
        "identity" => identity(dim),
        "excited" => projector(2, 1),
        "ground" => projector(2, 0),
        file => crate::io::read_matrix(&base.join(file))?,
    };
    if m.nrows() != dim || m.ncols() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: m.nrows(),
        });
    }
    Ok(m)
}

pub fn build_bath(b: &BathConfig, default_reference: f64, base: &Path) -> Result<BathSpectrum> {
    let reference = b.reference.unwrap_or(default_reference);
    let family = match b.family {
        FamilyName::Flat => SpectrumFamily::Flat {
            c_white: b.c_white.unwrap_or(0.0),
        },
        FamilyName::Lorentzian => SpectrumFamily::Lorentzian {
            amplitude: b.amplitude.unwrap_or(0.0),
            center: b.center.unwrap_or(reference),
            width: b.width.unwrap_or(1.0),
        },
        FamilyName::OhmicExpCutoff => SpectrumFamily::OhmicExpCutoff {
            amplitude: b.amplitude.unwrap_or(0.0),
            cutoff: b.cutoff.unwrap_or(1.0),
        },
        FamilyName::Tabulated => {
            let file = b
                .file
                .as_ref()
                .ok_or_else(|| Error::Precondition("tabulated bath needs a file".into()))?;
            parse_tabulated(&std::fs::read_to_string(base.join(file))?)?
        }
    };
    BathSpectrum::new(family, b.coupling, reference)
}

/// Two-level parameters, if the model is the two-level system.
pub fn tls_params(model: &ModelConfig, base: &Path) -> Result<Option<TlsParams>> {
    let ModelConfig::Tls(t) = model else {
        return Ok(None);
    };
    Ok(Some(TlsParams {
        omega0: t.omega0,
        rabi: t.rabi,
        drive: t.drive.unwrap_or(t.omega0),
        gamma_m: t.gamma_m,
        gamma_m_bar: t.gamma_m_bar,
        bath: build_bath(&t.bath, t.omega0, base)?,
    }))
}

/// A fully built model.
#[derive(Debug, Clone)]
pub struct Problem {
    pub gen: GkslGenerator,
    pub kernel: MemoryKernel,
    pub rho0: DensityMatrix,
    pub tls: Option<TlsParams>,
    pub bath: Option<BathSpectrum>,
    pub solver: PropagatorConfig,
    pub measurement: Option<MeasurementPlan>,
}

#[derive(Debug, Clone)]
pub struct MeasurementPlan {
    pub spec: MeasurementSpec,
    pub t_star: f64,
    pub tau_max: f64,
    /// Use the emission quadrature pair instead of `spec`.
    pub emission: bool,
    pub stationarity_tol: f64,
}

/// Build generator, kernel and solver settings from a normalized config.
pub fn build_problem(cfg: &RunConfig, base: &Path) -> Result<Problem> {
    let (gen, kernel, rho0, tls, bath) = match &cfg.model {
        ModelConfig::Tls(t) => {
            let params = tls_params(&cfg.model, base)?.expect("tls");
            let (gen, kernel) = build_tls_model(&params)?;
            let init = t.initial_state.as_deref().unwrap_or("ground");
            let rho0 = DensityMatrix::new(resolve_operator(init, 2, base)?)?;
            let bath = params.bath.clone();
            (gen, kernel, rho0, Some(params), Some(bath))
        }
        ModelConfig::Generic(g) => {
            let h = match &g.hamiltonian {
                Some(h) => resolve_operator(h, g.dim, base)?,
                None => ComplexMatrix::zeros(g.dim, g.dim),
            };
            let ls = g
                .lindblads
                .iter()
                .map(|c| Ok(resolve_operator(&c.operator, g.dim, base)?.scale(c.rate.sqrt())))
                .collect::<Result<Vec<_>>>()?;
            let gen = GkslGenerator::new(h, ls)?;
            let ops = |names: &[String]| {
                names
                    .iter()
                    .map(|n| resolve_operator(n, g.dim, base))
                    .collect::<Result<Vec<_>>>()
            };
            let (kernel, bath) = match &g.kernel {
                KernelConfig::None => (MemoryKernel::zero(g.dim), None),
                KernelConfig::Exponential {
                    amplitude,
                    rate,
                    jump_ops,
                } => (
                    MemoryKernel::exponential(*amplitude, *rate, ops(jump_ops)?)?,
                    None,
                ),
                KernelConfig::Bath { bath, jump_ops } => {
                    let b = build_bath(bath, 0.0, base)?;
                    (b.memory_kernel(ops(jump_ops)?)?, Some(b))
                }
            };
            let rho0 = DensityMatrix::new(resolve_operator(&g.initial_state, g.dim, base)?)?;
            (gen, kernel, rho0, None, bath)
        }
    };
    let mut solver = PropagatorConfig::new(cfg.solver.dt, cfg.solver.t_final.unwrap_or(0.0));
    solver.memory_window = cfg.solver.memory_window;
    if cfg.solver.auto_window && !kernel.is_zero() {
        if let Some(b) = &bath {
            solver.memory_window = Some(b.decay_lag()?);
        }
    }
    let measurement = match &cfg.measurement {
        None => None,
        Some(m) => {
            let dim = gen.dim();
            let ops = m
                .operators
                .iter()
                .map(|n| resolve_operator(n, dim, base))
                .collect::<Result<Vec<_>>>()?;
            let spec = match m.kind {
                MeasurementKindName::Emission => MeasurementSpec::weak(sigma_minus().adjoint()),
                MeasurementKindName::Weak => MeasurementSpec::weak(ops[0].clone()),
                MeasurementKindName::Instantaneous => {
                    MeasurementSpec::effects(ops, m.weights.clone())
                }
                MeasurementKindName::Continuous => {
                    MeasurementSpec::continuous(m.channels.clone(), m.weights.clone())
                }
            };
            let t_star = m
                .t_star
                .ok_or_else(|| Error::Precondition("measurement.t_star missing".into()))?;
            Some(MeasurementPlan {
                spec,
                t_star,
                tau_max: m.tau_max,
                emission: m.kind == MeasurementKindName::Emission,
                stationarity_tol: m.stationarity_tol.unwrap_or(STATIONARITY_TOL),
            })
        }
    };
    Ok(Problem {
        gen,
        kernel,
        rho0,
        tls,
        bath,
        solver,
        measurement,
    })
}
