//! Execute a validated configuration and write its artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use spinaht::aht::{average0, magnus1, offset_vectors};
use spinaht::algebra::{Letter, OperatorSum};
use spinaht::experiments::{
    fidelity_scan, recoupling_check, recoupling_dynamics, selectivity_error,
    symmetry_order_check, DtSetting, ExperimentError, FigTwoParams, RecouplingDynamicsRequest,
    log_grid,
};
use spinaht::model::{build_dipolar, build_zeeman, Geometry, ModelError, SpinSystem};
use spinaht::sequence::{
    build_mrev16, build_super_whh, build_w_pair, build_w_subcycle, build_whh4, expand_cycle,
    parse_mansfield, PulseSequence, SequenceError, TrainSpec, WAxis,
};

use crate::config::{
    AverageJob, BuilderSpec, Diagnostic, DtSpec, ExperimentSpec, RunConfig, SequenceSpec,
    SystemSpec, TrainSpecCfg,
};
use crate::output::{scan_to_csv, write_atomic, OperatorDump};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("configuration is not runnable:\n{}", format_diags(.0))]
    Validation(Vec<Diagnostic>),
    #[error(transparent)]
    Experiment(#[from] ExperimentError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Aht(#[from] spinaht::aht::AhtError),
    #[error(transparent)]
    Algebra(#[from] spinaht::algebra::AlgebraError),
    #[error("recoupling deviation {dev:e} on pair ({a},{b}); expected exactly zero")]
    RecouplingDeviation { a: usize, b: usize, dev: f64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

fn format_diags(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| format!("  {d}")).collect::<Vec<_>>().join("\n")
}

/// Files written by a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    pub wall_ms: u128,
}

fn build_system(spec: &SystemSpec) -> Result<SpinSystem<f64>, RunError> {
    if let Some(d) = &spec.couplings {
        return Ok(SpinSystem::new(spec.offsets.clone(), d.clone())?);
    }
    let g = spec.geometry.as_ref().expect("validated");
    let geometry = Geometry {
        positions: g.positions.clone(),
        gamma: g.gamma,
        field_axis: g.field_axis,
    };
    Ok(geometry.to_system(spec.offsets.clone())?)
}

fn waxis(s: &str) -> WAxis {
    match s {
        "-" => WAxis::NoPulse,
        "X" | "x" => WAxis::X,
        "Y" | "y" => WAxis::Y,
        _ => WAxis::Z,
    }
}

fn build_sequence(spec: &SequenceSpec, n: usize) -> Result<PulseSequence<f64>, RunError> {
    Ok(match spec {
        SequenceSpec::Mansfield { mansfield, tau } => {
            expand_cycle(&parse_mansfield(mansfield).map_err(SequenceError::from)?, *tau)?
        }
        SequenceSpec::MansfieldFile { mansfield_file, tau } => {
            let text = std::fs::read_to_string(mansfield_file)?;
            expand_cycle(&parse_mansfield(text.trim()).map_err(SequenceError::from)?, *tau)?
        }
        SequenceSpec::Builder(b) => match b {
            BuilderSpec::Whh4 { tau } => build_whh4(*tau)?,
            BuilderSpec::Mrev16 { tau } => build_mrev16(*tau)?,
            BuilderSpec::W { target, axis, big_t, train } => {
                let train = match train {
                    TrainSpecCfg::Idealized => TrainSpec::Idealized,
                    TrainSpecCfg::Spacing(s) => TrainSpec::Spacing(*s),
                };
                build_w_subcycle(n, *target, waxis(axis), *big_t, train)?
            }
            BuilderSpec::WPair { k, l, alpha, beta, big_t } => {
                build_w_pair(n, *k, *l, waxis(alpha), waxis(beta), *big_t, TrainSpec::Idealized)?
            }
            BuilderSpec::SuperWhh { k, l, big_t, mode } => {
                build_super_whh(n, *k, *l, *big_t, (*mode).into(), TrainSpec::Idealized)?.sequence
            }
        },
    })
}

fn sequence_n_template(spec: &SequenceSpec) -> usize {
    // builders that address specific spins need the site count; everything
    // else works on any register size, so use the smallest that fits
    match spec {
        SequenceSpec::Builder(b) => match b {
            BuilderSpec::W { target, .. } => *target + 1,
            BuilderSpec::WPair { k, l, .. } | BuilderSpec::SuperWhh { k, l, .. } => {
                (*k).max(*l) + 1
            }
            _ => 1,
        },
        _ => 1,
    }
}

/// Register size a job needs: enough spins for the operator and for every
/// spin the sequence addresses.
fn job_register(job: &AverageJob, system: Option<&SpinSystem<f64>>) -> usize {
    let n_seq = sequence_n_template(&job.sequence);
    let n_op = match job.operator.as_str() {
        "dipolar" | "zeeman" => system.map_or(2, SpinSystem::n),
        other => other
            .split_once('@')
            .and_then(|(_, s)| s.parse::<usize>().ok())
            .map_or(1, |site| site + 1),
    };
    n_seq.max(n_op)
}

fn job_operator(
    op: &str,
    n: usize,
    system: Option<&SpinSystem<f64>>,
) -> Result<OperatorSum<f64>, RunError> {
    Ok(match op {
        "dipolar" => build_dipolar(system.expect("validated: dipolar needs a system")),
        "zeeman" => build_zeeman(system.expect("validated: zeeman needs a system")),
        other => {
            let (letter, site) = other.split_once('@').expect("validated");
            let site: usize = site.parse().expect("validated");
            let letter = match letter {
                "X" | "x" => Letter::X,
                "Y" | "y" => Letter::Y,
                _ => Letter::Z,
            };
            OperatorSum::single(n, site, letter, spinaht::C::<f64>::new(1.0, 0.0))?
        }
    })
}

fn run_average_jobs(jobs: &[AverageJob], system: Option<&SpinSystem<f64>>) -> Result<serde_json::Value, RunError> {
    let mut out = Vec::new();
    for job in jobs {
        let n = job_register(job, system);
        let seq = build_sequence(&job.sequence, n)?;
        let op = job_operator(&job.operator, n, system)?;
        let avg = average0(&seq, &op)?;
        let vectors = offset_vectors(&seq).ok().map(|v| {
            json!({
                "zeta": v.zeta.to_vec(),
                "xi": v.xi.to_vec(),
                "eta": v.eta.to_vec(),
            })
        });
        let m1 = if job.magnus1 {
            Some(OperatorDump::from_op(&magnus1(&seq, &op)?))
        } else {
            None
        };
        out.push(json!({
            "label": job.label,
            "operator": job.operator,
            "cycle_time": seq.cycle_time(),
            "average": OperatorDump::from_op(&avg),
            "magnus1": m1,
            "offset_vectors": vectors,
        }));
    }
    Ok(serde_json::Value::Array(out))
}

/// Execute a runnable config. `out_dir` and `seed` override the config when
/// given. Returns the list of written artifacts.
pub fn run(
    config: &RunConfig,
    out_dir: Option<&Path>,
    seed_override: Option<u64>,
) -> Result<RunSummary, RunError> {
    let diags = crate::config::validate(config);
    if !diags.is_empty() {
        return Err(RunError::Validation(diags));
    }
    let start = Instant::now();

    let dir: PathBuf = match out_dir {
        Some(d) => d.to_path_buf(),
        None => config
            .output
            .as_ref()
            .and_then(|o| o.dir.clone())
            .map(PathBuf::from)
            .or_else(|| std::env::var(crate::OUTDIR_ENV).ok().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(".")),
    };
    let seed = seed_override.or(config.seed).unwrap_or(7);
    let system = config.system.as_ref().map(build_system).transpose()?;

    let mut outputs: Vec<PathBuf> = Vec::new();
    let result_echo: serde_json::Value;

    match &config.experiment {
        ExperimentSpec::FidelityScan { tau_d, tau_dw, seeds, phi, drive_ratio, delta_omega } => {
            let params = FigTwoParams::<f64> {
                tau_d: log_grid(tau_d.min, tau_d.max, tau_d.count),
                tau_dw: log_grid(tau_dw.min, tau_dw.max, tau_dw.count),
                seeds: *seeds,
                base_seed: seed,
                phi: *phi,
                drive_ratio: *drive_ratio,
                delta_omega: *delta_omega,
                dt: match config.dt {
                    Some(DtSpec::Fixed { dt }) => DtSetting::Fixed(dt),
                    Some(DtSpec::Auto { safety }) => DtSetting::Auto { safety },
                    None => DtSetting::Auto { safety: 20.0 },
                },
                cycles_override: None,
            };
            let scan = fidelity_scan(&params)?;
            let path = dir.join("scan.csv");
            write_atomic(&path, &scan_to_csv(&scan))?;
            outputs.push(path);
            result_echo = json!({
                "kind": "fidelity-scan",
                "grid": [scan.x.len(), scan.y.len()],
                "corner_fidelity": scan.values[0][0],
                "metadata": {
                    "sequence": scan.metadata.sequence,
                    "seeds": scan.metadata.seeds,
                    "base_seed": scan.metadata.base_seed,
                    "params": scan.metadata.params,
                },
            });
        }
        ExperimentSpec::RecouplingCheck { n, k, l, big_t, mode, dynamics } => {
            let report = recoupling_check(*n, *k, *l, *big_t, (*mode).into(), None)?;
            for (a, b, dev) in &report.deviation_norms {
                if *dev != 0.0 {
                    return Err(RunError::RecouplingDeviation { a: *a, b: *b, dev: *dev });
                }
            }
            let mut dyn_json = serde_json::Value::Null;
            if let Some(d) = dynamics {
                let req = RecouplingDynamicsRequest {
                    coupling: d.coupling,
                    t_total_target: d.t_total,
                    seed,
                };
                let base = recoupling_dynamics(*n, *k, *l, *big_t, (*mode).into(), &req)?;
                let halved = if d.halving {
                    let h = recoupling_dynamics(*n, *k, *l, *big_t / 2.0, (*mode).into(), &req)?;
                    let ratio = base.spectator_phase_error / h.spectator_phase_error;
                    json!({"result": h, "phase_error_ratio": ratio})
                } else {
                    serde_json::Value::Null
                };
                dyn_json = json!({"base": base, "halved": halved});
            }
            result_echo = json!({
                "kind": "recoupling-check",
                "coupling_ratio": report.coupling_ratio,
                "coupling_ratio_expected": 8.0 / 9.0,
                "deviation_norms": report.deviation_norms,
                "pair_effective": report
                    .pair_effective
                    .iter()
                    .map(|(a, b, op)| json!({"pair": [a, b], "operator": OperatorDump::from_op(op)}))
                    .collect::<Vec<_>>(),
                "dynamics": dyn_json,
            });
            let path = dir.join("recoupling.json");
            write_atomic(&path, &serde_json::to_string_pretty(&result_echo)?)?;
            outputs.push(path);
        }
        ExperimentSpec::Selectivity { omega_rf, ratios, duration_in_pi } => {
            let t_pi = std::f64::consts::PI / omega_rf * duration_in_pi;
            let mut rows = Vec::new();
            for r in ratios {
                let s = selectivity_error(r * omega_rf, *omega_rf, t_pi)?;
                rows.push(json!({
                    "ratio": r,
                    "predicted": s.predicted,
                    "simulated": s.simulated,
                }));
            }
            result_echo = json!({"kind": "selectivity", "omega_rf": omega_rf, "rows": rows});
            let path = dir.join("selectivity.json");
            write_atomic(&path, &serde_json::to_string_pretty(&result_echo)?)?;
            outputs.push(path);
        }
        ExperimentSpec::SymmetryCheck { operator } => {
            let sys = system.as_ref().expect("validated");
            let seq = build_sequence(config.sequence.as_ref().expect("validated"), sys.n())?;
            let h = match operator.as_str() {
                "dipolar" => build_dipolar(sys),
                "zeeman" => build_zeeman(sys),
                _ => build_dipolar(sys).add(&build_zeeman(sys))?,
            };
            let rep = symmetry_order_check(&seq, &h)?;
            result_echo = json!({
                "kind": "symmetry-check",
                "avg0_norm": rep.avg0_norm,
                "magnus1_norm": rep.magnus1_norm,
                "avg0_vanishes": rep.avg0_vanishes,
                "magnus1_vanishes": rep.magnus1_vanishes,
            });
            let path = dir.join("symmetry.json");
            write_atomic(&path, &serde_json::to_string_pretty(&result_echo)?)?;
            outputs.push(path);
        }
        ExperimentSpec::Average { jobs } => {
            result_echo = json!({
                "kind": "average",
                "jobs": run_average_jobs(jobs, system.as_ref())?,
            });
            let path = dir.join("averages.json");
            write_atomic(&path, &serde_json::to_string_pretty(&result_echo)?)?;
            outputs.push(path);
        }
    }

    let wall_ms = start.elapsed().as_millis();
    let manifest = json!({
        "tool": {"name": "spinaht", "version": env!("CARGO_PKG_VERSION")},
        "seed": seed,
        "wall_ms": wall_ms,
        "outputs": outputs.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
        "config": serde_json::to_value(config)?,
        "result": result_echo,
    });
    let manifest_path = dir.join("run_manifest.json");
    write_atomic(&manifest_path, &serde_json::to_string_pretty(&manifest)?)?;
    outputs.push(manifest_path);

    Ok(RunSummary { outputs, wall_ms })
}
