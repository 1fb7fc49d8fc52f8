//! Run-configuration schema and validation.
//!
//! A configuration is a single JSON document; numbers are SI (seconds,
//! rad/s). Exactly one experiment per run.

use serde::{Deserialize, Serialize};

use spinaht::sequence::{parse_mansfield, SuperWhhMode};

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Spin network, either explicit couplings or a geometry to derive them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSpec>,
    /// Pulse sequence, by notation or named builder.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sequence: Option<SequenceSpec>,
    pub experiment: ExperimentSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputSpec>,
    /// Base seed for random initial states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<DtSpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub offsets: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<GeometrySpec>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySpec {
    pub positions: Vec<[f64; 3]>,
    pub gamma: f64,
    pub field_axis: [f64; 3],
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SequenceSpec {
    Mansfield {
        mansfield: String,
        tau: f64,
    },
    MansfieldFile {
        mansfield_file: String,
        tau: f64,
    },
    Builder(BuilderSpec),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "builder", rename_all = "kebab-case")]
pub enum BuilderSpec {
    Whh4 { tau: f64 },
    Mrev16 { tau: f64 },
    W { target: usize, axis: String, big_t: f64, #[serde(default)] train: TrainSpecCfg },
    WPair { k: usize, l: usize, alpha: String, beta: String, big_t: f64 },
    SuperWhh { k: usize, l: usize, big_t: f64, mode: ModeCfg },
}

#[derive(Clone, Copy, Debug, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrainSpecCfg {
    #[default]
    Idealized,
    Spacing(f64),
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeCfg {
    Plain,
    Symmetrized,
}

impl From<ModeCfg> for SuperWhhMode {
    fn from(m: ModeCfg) -> SuperWhhMode {
        match m {
            ModeCfg::Plain => SuperWhhMode::Plain,
            ModeCfg::Symmetrized => SuperWhhMode::Symmetrized,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum ExperimentSpec {
    FidelityScan {
        #[serde(default = "default_grid_tau_d")]
        tau_d: GridSpec,
        #[serde(default = "default_grid_tau_dw")]
        tau_dw: GridSpec,
        #[serde(default = "default_seeds")]
        seeds: u32,
        #[serde(default = "default_phi")]
        phi: f64,
        #[serde(default = "default_drive_ratio")]
        drive_ratio: f64,
        #[serde(default = "default_delta_omega")]
        delta_omega: f64,
    },
    RecouplingCheck {
        n: usize,
        k: usize,
        l: usize,
        big_t: f64,
        mode: ModeCfg,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dynamics: Option<RecouplingDynamicsCfg>,
    },
    Selectivity {
        omega_rf: f64,
        /// Detuning-to-drive ratios to probe.
        ratios: Vec<f64>,
        /// Pulse duration in units of the resonant pi time (default 1).
        #[serde(default = "default_one")]
        duration_in_pi: f64,
    },
    SymmetryCheck {
        /// Which operator to average: "dipolar", "zeeman" or "full".
        operator: String,
    },
    Average {
        jobs: Vec<AverageJob>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecouplingDynamicsCfg {
    pub coupling: f64,
    pub t_total: f64,
    /// Re-run with big_t halved and report error ratios.
    #[serde(default)]
    pub halving: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AverageJob {
    pub label: String,
    pub sequence: SequenceSpec,
    /// "dipolar", "zeeman", or a single-site letter like "Z@0".
    pub operator: String,
    /// Also compute the first-order term.
    #[serde(default)]
    pub magnus1: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DtSpec {
    Auto { safety: f64 },
    Fixed { dt: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_one() -> f64 {
    1.0
}
fn default_seeds() -> u32 {
    3
}
fn default_phi() -> f64 {
    0.7
}
fn default_drive_ratio() -> f64 {
    100.0
}
fn default_delta_omega() -> f64 {
    1e5
}
fn default_format() -> String {
    "csv".to_string()
}
fn default_grid_tau_d() -> GridSpec {
    GridSpec { min: 1e-4, max: 1e-1, count: 16 }
}
fn default_grid_tau_dw() -> GridSpec {
    GridSpec { min: 1e-3, max: 1e-1, count: 16 }
}

/// A validation finding: the config field path and a message.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub path: String,
    pub message: String,
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn check_sequence(path: &str, seq: &SequenceSpec, out: &mut Vec<Diagnostic>) {
    match seq {
        SequenceSpec::Mansfield { mansfield, tau } => {
            if let Err(e) = parse_mansfield(mansfield) {
                out.push(Diagnostic { path: format!("{path}.mansfield"), message: e.to_string() });
            }
            if *tau <= 0.0 {
                out.push(Diagnostic { path: format!("{path}.tau"), message: "tau must be positive".into() });
            }
        }
        SequenceSpec::MansfieldFile { mansfield_file, tau } => {
            match std::fs::read_to_string(mansfield_file) {
                Ok(text) => {
                    if let Err(e) = parse_mansfield(&text) {
                        out.push(Diagnostic {
                            path: format!("{path}.mansfield_file"),
                            message: format!("{mansfield_file}: {e}"),
                        });
                    }
                }
                Err(e) => out.push(Diagnostic {
                    path: format!("{path}.mansfield_file"),
                    message: format!("{mansfield_file}: {e}"),
                }),
            }
            if *tau <= 0.0 {
                out.push(Diagnostic { path: format!("{path}.tau"), message: "tau must be positive".into() });
            }
        }
        SequenceSpec::Builder(b) => check_builder(path, b, out),
    }
}

fn axis_ok(s: &str) -> bool {
    matches!(s, "-" | "X" | "Y" | "Z" | "x" | "y" | "z")
}

fn check_builder(path: &str, b: &BuilderSpec, out: &mut Vec<Diagnostic>) {
    match b {
        BuilderSpec::Whh4 { tau } | BuilderSpec::Mrev16 { tau } => {
            if *tau <= 0.0 {
                out.push(Diagnostic { path: format!("{path}.tau"), message: "tau must be positive".into() });
            }
        }
        BuilderSpec::W { axis, big_t, train, .. } => {
            if !axis_ok(axis) {
                out.push(Diagnostic {
                    path: format!("{path}.axis"),
                    message: format!("unknown axis {axis:?} (use -, X, Y or Z)"),
                });
            }
            if *big_t <= 0.0 {
                out.push(Diagnostic { path: format!("{path}.big_t"), message: "big_t must be positive".into() });
            }
            if let crate::config::TrainSpecCfg::Spacing(s) = train {
                if *s <= 0.0 {
                    out.push(Diagnostic {
                        path: format!("{path}.train"),
                        message: "train spacing must be positive".into(),
                    });
                }
            }
        }
        BuilderSpec::WPair { alpha, beta, big_t, k, l } => {
            for (f, v) in [("alpha", alpha), ("beta", beta)] {
                if !axis_ok(v) {
                    out.push(Diagnostic {
                        path: format!("{path}.{f}"),
                        message: format!("unknown axis {v:?} (use -, X, Y or Z)"),
                    });
                }
            }
            if k == l {
                out.push(Diagnostic { path: format!("{path}.l"), message: "k and l must differ".into() });
            }
            if *big_t <= 0.0 {
                out.push(Diagnostic { path: format!("{path}.big_t"), message: "big_t must be positive".into() });
            }
        }
        BuilderSpec::SuperWhh { k, l, big_t, .. } => {
            if k == l {
                out.push(Diagnostic { path: format!("{path}.l"), message: "k and l must differ".into() });
            }
            if *big_t <= 0.0 {
                out.push(Diagnostic { path: format!("{path}.big_t"), message: "big_t must be positive".into() });
            }
        }
    }
}

fn builder_sites(b: &BuilderSpec) -> Vec<usize> {
    match b {
        BuilderSpec::W { target, .. } => vec![*target],
        BuilderSpec::WPair { k, l, .. } | BuilderSpec::SuperWhh { k, l, .. } => vec![*k, *l],
        _ => vec![],
    }
}

/// Check a parsed configuration; an empty list means runnable.
pub fn validate(config: &RunConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let n_sys = config.system.as_ref().map(|s| s.offsets.len());
    if let Some(sys) = &config.system {
        if sys.offsets.is_empty() {
            out.push(Diagnostic { path: "system.offsets".into(), message: "at least one spin".into() });
        }
        if sys.offsets.iter().any(|w| !w.is_finite()) {
            out.push(Diagnostic { path: "system.offsets".into(), message: "offsets must be finite".into() });
        }
        match (&sys.couplings, &sys.geometry) {
            (Some(d), _) => {
                let n = sys.offsets.len();
                let square = d.len() == n && d.iter().all(|row| row.len() == n);
                if !square {
                    out.push(Diagnostic {
                        path: "system.couplings".into(),
                        message: format!("must be {n}x{n}"),
                    });
                } else {
                    for k in 0..n {
                        if d[k][k] != 0.0 {
                            out.push(Diagnostic {
                                path: format!("system.couplings[{k}][{k}]"),
                                message: "diagonal must be zero".into(),
                            });
                        }
                        for l in 0..n {
                            if d[k][l] != d[l][k] {
                                out.push(Diagnostic {
                                    path: format!("system.couplings[{k}][{l}]"),
                                    message: "matrix must be symmetric".into(),
                                });
                            }
                        }
                    }
                }
            }
            (None, Some(g)) => {
                if g.positions.len() != sys.offsets.len() {
                    out.push(Diagnostic {
                        path: "system.geometry.positions".into(),
                        message: "one position per spin".into(),
                    });
                }
            }
            (None, None) => out.push(Diagnostic {
                path: "system".into(),
                message: "needs either couplings or geometry".into(),
            }),
        }
    }

    if let Some(seq) = &config.sequence {
        check_sequence("sequence", seq, &mut out);
        if let (Some(n), SequenceSpec::Builder(b)) = (n_sys, seq) {
            for site in builder_sites(b) {
                if site >= n {
                    out.push(Diagnostic {
                        path: "sequence".into(),
                        message: format!("spin index {site} out of range for {n} spins"),
                    });
                }
            }
        }
    }

    match &config.experiment {
        ExperimentSpec::FidelityScan { tau_d, tau_dw, seeds, drive_ratio, delta_omega, .. } => {
            for (name, g) in [("tau_d", tau_d), ("tau_dw", tau_dw)] {
                if g.count == 0 || g.min <= 0.0 || g.max < g.min {
                    out.push(Diagnostic {
                        path: format!("experiment.{name}"),
                        message: "grid needs count >= 1 and 0 < min <= max".into(),
                    });
                }
            }
            if *seeds == 0 {
                out.push(Diagnostic { path: "experiment.seeds".into(), message: "seeds must be >= 1".into() });
            }
            if *drive_ratio <= 0.0 || *delta_omega <= 0.0 {
                out.push(Diagnostic {
                    path: "experiment".into(),
                    message: "drive_ratio and delta_omega must be positive".into(),
                });
            }
        }
        ExperimentSpec::RecouplingCheck { n, k, l, big_t, dynamics, .. } => {
            if *n < 2 {
                out.push(Diagnostic { path: "experiment.n".into(), message: "need n >= 2".into() });
            }
            for (f, v) in [("k", k), ("l", l)] {
                if v >= n {
                    out.push(Diagnostic {
                        path: format!("experiment.{f}"),
                        message: format!("spin index {v} out of range for {n} spins"),
                    });
                }
            }
            if k == l {
                out.push(Diagnostic { path: "experiment.l".into(), message: "k and l must differ".into() });
            }
            if *big_t <= 0.0 {
                out.push(Diagnostic { path: "experiment.big_t".into(), message: "big_t must be positive".into() });
            }
            if let Some(d) = dynamics {
                if d.t_total <= 0.0 {
                    out.push(Diagnostic {
                        path: "experiment.dynamics.t_total".into(),
                        message: "t_total must be positive".into(),
                    });
                }
            }
        }
        ExperimentSpec::Selectivity { omega_rf, ratios, duration_in_pi } => {
            if *omega_rf <= 0.0 {
                out.push(Diagnostic { path: "experiment.omega_rf".into(), message: "must be positive".into() });
            }
            if ratios.is_empty() {
                out.push(Diagnostic { path: "experiment.ratios".into(), message: "need at least one ratio".into() });
            }
            if *duration_in_pi <= 0.0 {
                out.push(Diagnostic {
                    path: "experiment.duration_in_pi".into(),
                    message: "must be positive".into(),
                });
            }
        }
        ExperimentSpec::SymmetryCheck { operator } => {
            if !matches!(operator.as_str(), "dipolar" | "zeeman" | "full") {
                out.push(Diagnostic {
                    path: "experiment.operator".into(),
                    message: format!("unknown operator {operator:?} (dipolar, zeeman or full)"),
                });
            }
            if config.sequence.is_none() {
                out.push(Diagnostic { path: "sequence".into(), message: "symmetry-check needs a sequence".into() });
            }
            if config.system.is_none() {
                out.push(Diagnostic { path: "system".into(), message: "symmetry-check needs a system".into() });
            }
        }
        ExperimentSpec::Average { jobs } => {
            if jobs.is_empty() {
                out.push(Diagnostic { path: "experiment.jobs".into(), message: "need at least one job".into() });
            }
            for (i, job) in jobs.iter().enumerate() {
                check_sequence(&format!("experiment.jobs[{i}].sequence"), &job.sequence, &mut out);
                let op = job.operator.as_str();
                if matches!(op, "dipolar" | "zeeman") && config.system.is_none() {
                    out.push(Diagnostic {
                        path: format!("experiment.jobs[{i}].operator"),
                        message: format!("{op} averaging needs a system"),
                    });
                }
                let single_ok = op
                    .split_once('@')
                    .map(|(l, s)| {
                        matches!(l, "X" | "Y" | "Z" | "x" | "y" | "z")
                            && s.parse::<usize>().is_ok()
                    })
                    .unwrap_or(false);
                if !(matches!(op, "dipolar" | "zeeman") || single_ok) {
                    out.push(Diagnostic {
                        path: format!("experiment.jobs[{i}].operator"),
                        message: format!("unknown operator {op:?} (dipolar, zeeman or LETTER@site)"),
                    });
                }
            }
        }
    }

    if let Some(out_spec) = &config.output {
        if !matches!(out_spec.format.as_str(), "csv" | "json") {
            out.push(Diagnostic {
                path: "output.format".into(),
                message: format!("unknown format {:?} (csv or json)", out_spec.format),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fidelity_scan_defaults_validate_clean() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"experiment": {"type": "fidelity-scan"}}"#).unwrap();
        assert!(validate(&cfg).is_empty());
    }

    #[test]
    fn bad_mansfield_has_column() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{
                "sequence": {"mansfield": "[Z,Q,X]", "tau": 1e-6},
                "experiment": {"type": "fidelity-scan"}
            }"#,
        )
        .unwrap();
        let diags = validate(&cfg);
        assert_eq!(diags.len(), 1);
        assert_eq!(diags[0].path, "sequence.mansfield");
        assert!(diags[0].message.contains("col 4"), "{}", diags[0].message);
    }

    #[test]
    fn out_of_range_target() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{
                "experiment": {"type": "recoupling-check", "n": 3, "k": 0, "l": 3,
                                "big_t": 1e-3, "mode": "symmetrized"}
            }"#,
        )
        .unwrap();
        let diags = validate(&cfg);
        assert!(diags.iter().any(|d| d.path == "experiment.l" && d.message.contains("out of range")));
    }
}
