//! The experiment subcommands. Each command resolves the configuration,
//! validates the LQ and reference-shift assumptions, runs the numerics
//! and writes CSV outputs plus a machine-readable metadata block and a
//! resolved config file that reproduces the run bit for bit.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use pradp_core::baseline::{baseline_dataset, baseline_lspi, baseline_rollout};
use pradp_core::lq::{
    check_lq_assumptions, closed_loop_eigenvalues, ground_truth_h, optimal_gain, solve_dare,
    CostSpec, ExtendedSystem, PlantModel, RiccatiSolution, DEFAULT_DARE_MAX_ITER,
    DEFAULT_DARE_TOL,
};
use pradp_core::nalgebra::{DMatrix, DVector};
use pradp_core::qtracker::{lspi, Dataset, LspiResult};
use pradp_core::reference::{check_shift_stability, BasisFamily, KnotSeries};
use pradp_core::sim::{
    collect_training_data, make_test_reference, metrics, rollout_tracking, ExcitationSpec,
    ExoSystem, Trajectory, RNG_NAME,
};

use crate::config::ExperimentConfig;
use crate::csvio;
use crate::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Configuration lowered into core types.
pub struct Resolved {
    pub plant: PlantModel,
    pub cost: CostSpec,
    pub family: BasisFamily,
    pub exo: ExoSystem,
}

pub fn resolve(cfg: &ExperimentConfig) -> CliResult<Resolved> {
    Ok(Resolved {
        plant: cfg.to_plant()?,
        cost: cfg.to_cost()?,
        family: cfg.to_family()?,
        exo: cfg.to_exo()?,
    })
}

/// Both standing assumptions must hold before any training or oracle
/// run; violations are validation failures.
pub fn validate_assumptions(resolved: &Resolved, gamma: f64) -> CliResult<String> {
    let lq = check_lq_assumptions(&resolved.plant, &resolved.cost);
    let shift = check_shift_stability(&resolved.family, gamma)?;
    let mut report = String::new();
    let _ = writeln!(report, "q_psd = {}", lq.q_psd);
    let _ = writeln!(report, "r_pd = {}", lq.r_pd);
    let _ = writeln!(
        report,
        "controllable = {} (rank {})",
        lq.controllable, lq.controllability_rank
    );
    let _ = writeln!(
        report,
        "detectable = {} (observability rank {})",
        lq.detectable, lq.observability_rank
    );
    let moduli: Vec<String> = shift
        .eigenvalues
        .iter()
        .map(|&l| csvio::fmt_f64(pradp_core::complex_modulus(l)))
        .collect();
    let _ = writeln!(report, "shift_stable = {}", shift.pass);
    let _ = writeln!(report, "shift_eigenvalue_moduli = {}", moduli.join(","));
    if !lq.pass() || !shift.pass {
        return Err(CliError::Validation(format!(
            "assumption checks failed:\n{report}"
        )));
    }
    Ok(report)
}

fn ensure_out_dir(out: &Path) -> CliResult<()> {
    std::fs::create_dir_all(out)?;
    Ok(())
}

fn write_resolved_config(cfg: &ExperimentConfig, out: &Path, command: &str) -> CliResult<()> {
    let mut text = String::new();
    let _ = writeln!(text, "# pradp {VERSION}");
    let _ = writeln!(text, "# command = {command}");
    let _ = writeln!(text, "# rng = {RNG_NAME}");
    text.push_str(&cfg.to_ini());
    std::fs::write(out.join("config_resolved.ini"), text)?;
    Ok(())
}

fn write_meta(out: &Path, name: &str, command: &str, entries: &[(&str, String)]) -> CliResult<()> {
    let mut text = String::new();
    let _ = writeln!(text, "# pradp {VERSION}");
    let _ = writeln!(text, "command = {command}");
    let _ = writeln!(text, "rng = {RNG_NAME}");
    for (key, value) in entries {
        let _ = writeln!(text, "{key} = {value}");
    }
    std::fs::write(out.join(name), text)?;
    Ok(())
}

/// Exo-system samples every `spacing` steps, covering at least
/// `last_step`.
fn exo_samples(
    exo: &ExoSystem,
    last_step: usize,
    spacing: usize,
) -> CliResult<Vec<(usize, DVector<f64>)>> {
    if spacing == 0 {
        return Err(CliError::Validation("knot spacing must be positive".into()));
    }
    let knots = last_step.div_ceil(spacing).max(3);
    let refs = exo.rollout(knots * spacing + 1);
    Ok((0..=knots)
        .map(|j| (j * spacing, refs[j * spacing].clone()))
        .collect())
}

fn fit_knots(
    samples: &[(usize, DVector<f64>)],
    spacing: usize,
    family: BasisFamily,
) -> CliResult<KnotSeries> {
    Ok(KnotSeries::fit_cubic_spline(samples, spacing, family)?)
}

pub struct DiscretizeOutput {
    pub plant: PlantModel,
}

/// Write the discretized plant matrices.
pub fn cmd_discretize(cfg: &ExperimentConfig, out: &Path) -> CliResult<DiscretizeOutput> {
    ensure_out_dir(out)?;
    let plant = cfg.to_plant()?;
    let mut dump = csvio::MatrixDump::new();
    dump.push("a", &plant.a);
    dump.push("b", &plant.b);
    dump.write(&out.join("plant.csv"))?;
    write_meta(
        out,
        "discretize_meta.txt",
        "discretize",
        &[
            ("n", plant.n().to_string()),
            ("m", plant.m().to_string()),
            ("sample_time", csvio::fmt_f64(cfg.sample_time)),
        ],
    )?;
    write_resolved_config(cfg, out, "discretize")?;
    Ok(DiscretizeOutput { plant })
}

pub struct OracleOutput {
    pub system: ExtendedSystem,
    pub solution: RiccatiSolution,
    pub gain: DMatrix<f64>,
    pub closed_loop_moduli: Vec<f64>,
}

/// Model-based ground truth: extended system, Riccati solution, optimal
/// gain and the closed-loop spectrum.
pub fn cmd_oracle(cfg: &ExperimentConfig, out: &Path) -> CliResult<OracleOutput> {
    ensure_out_dir(out)?;
    let resolved = resolve(cfg)?;
    let assumptions = validate_assumptions(&resolved, cfg.gamma)?;

    let system = ExtendedSystem::build(&resolved.plant, &resolved.cost, &resolved.family)?;
    let solution = solve_dare(&system, &resolved.cost, DEFAULT_DARE_TOL, DEFAULT_DARE_MAX_ITER)?;
    let gain = optimal_gain(&solution, &system, &resolved.cost)?;
    let eigenvalues = closed_loop_eigenvalues(&system, &resolved.cost, &gain);

    let mut dump = csvio::MatrixDump::new();
    dump.push("a_tilde", &system.a_tilde);
    dump.push("b_tilde", &system.b_tilde);
    dump.push("q_tilde", &system.q_tilde);
    dump.push("error_map", &system.error_map);
    dump.push("s_tilde", &solution.s_tilde);
    dump.push("gain", &gain);
    dump.push_complex("closed_loop_eig", &eigenvalues);
    dump.write(&out.join("oracle.csv"))?;

    let closed_loop_moduli: Vec<f64> = eigenvalues
        .iter()
        .map(|&l| pradp_core::complex_modulus(l))
        .collect();
    let max_modulus = closed_loop_moduli.iter().copied().fold(0.0, f64::max);
    write_meta(
        out,
        "oracle_meta.txt",
        "oracle",
        &[
            ("dare_residual", csvio::fmt_f64(solution.residual)),
            ("dare_iterations", solution.iterations.to_string()),
            ("extended_dim", system.dim().to_string()),
            ("closed_loop_spectral_radius", csvio::fmt_f64(max_modulus)),
            ("assumptions", format!("\n{assumptions}")),
        ],
    )?;
    write_resolved_config(cfg, out, "oracle")?;
    Ok(OracleOutput {
        system,
        solution,
        gain,
        closed_loop_moduli,
    })
}

fn training_setup(
    cfg: &ExperimentConfig,
    resolved: &Resolved,
) -> CliResult<(Vec<(usize, DVector<f64>)>, KnotSeries, Dataset)> {
    let samples = exo_samples(&resolved.exo, cfg.train_samples, cfg.knot_spacing)?;
    let knots = fit_knots(&samples, cfg.knot_spacing, resolved.family)?;
    let dataset = match &cfg.train_dataset_csv {
        Some(path) => csvio::read_dataset(path, resolved.family)?,
        None => {
            let spec = ExcitationSpec::new(cfg.noise_std, cfg.seed, cfg.train_samples)?;
            collect_training_data(&resolved.plant, &knots, &spec)?
        }
    };
    Ok((samples, knots, dataset))
}

pub struct TrainOutput {
    pub result: LspiResult,
    pub oracle_gain: DMatrix<f64>,
    pub gain_gap: f64,
    pub dataset_len: usize,
}

/// Collect excitation data (or load it), run policy iteration and
/// report the distance to the Riccati oracle gain.
pub fn cmd_train(cfg: &ExperimentConfig, out: &Path) -> CliResult<TrainOutput> {
    ensure_out_dir(out)?;
    let resolved = resolve(cfg)?;
    validate_assumptions(&resolved, cfg.gamma)?;

    let (samples, _knots, dataset) = training_setup(cfg, &resolved)?;
    csvio::write_reference_samples(&out.join("train_reference.csv"), &samples)?;
    csvio::write_dataset(&out.join("dataset.csv"), &dataset)?;

    let result = lspi(&dataset, &resolved.cost, cfg.e_w, cfg.max_iter, None)?;

    let system = ExtendedSystem::build(&resolved.plant, &resolved.cost, &resolved.family)?;
    let solution = solve_dare(&system, &resolved.cost, DEFAULT_DARE_TOL, DEFAULT_DARE_MAX_ITER)?;
    let oracle = optimal_gain(&solution, &system, &resolved.cost)?;
    let gain_gap = (&result.gain - &oracle).norm();

    csvio::write_weights(&out.join("weights.csv"), &result.weights)?;
    csvio::write_matrix_dense(&out.join("h_matrix.csv"), result.h.matrix())?;
    csvio::write_gain(&out.join("gain.csv"), &result.gain)?;
    csvio::write_trace(&out.join("trace.csv"), &result.trace)?;
    write_meta(
        out,
        "train_meta.txt",
        "train",
        &[
            ("seed", cfg.seed.to_string()),
            ("samples", dataset.len().to_string()),
            ("noise_std", csvio::fmt_f64(cfg.noise_std)),
            ("iterations", result.iterations.to_string()),
            ("regularizations", result.regularizations.to_string()),
            ("rank", result.diagnostics.rank.to_string()),
            (
                "effective_rank",
                result.diagnostics.effective_rank.to_string(),
            ),
            ("sigma_max", csvio::fmt_f64(result.diagnostics.sigma_max)),
            ("sigma_min", csvio::fmt_f64(result.diagnostics.sigma_min)),
            ("gain_gap", csvio::fmt_f64(gain_gap)),
        ],
    )?;
    write_resolved_config(cfg, out, "train")?;
    Ok(TrainOutput {
        result,
        oracle_gain: oracle,
        gain_gap,
        dataset_len: dataset.len(),
    })
}

/// The evaluation reference: sparse samples plus the dense per-step
/// series the baseline is driven and judged with.
struct EvaluationReference {
    samples: Vec<(usize, DVector<f64>)>,
    dense: Vec<DVector<f64>>,
    knots: KnotSeries,
    k_total: usize,
}

fn evaluation_reference(cfg: &ExperimentConfig, resolved: &Resolved) -> CliResult<EvaluationReference> {
    match &cfg.test_samples_csv {
        Some(path) => {
            let samples = csvio::read_reference_samples(path)?;
            let knots = fit_knots(&samples, cfg.knot_spacing, resolved.family)?;
            let k_total = knots.horizon;
            // The spline through the samples is the only per-step
            // definition available, so it serves as the dense series.
            let dense = (0..=k_total)
                .map(|k| Ok(knots.params_at(k)?.point(0)))
                .collect::<CliResult<Vec<_>>>()?;
            Ok(EvaluationReference {
                samples,
                dense,
                knots,
                k_total,
            })
        }
        None => {
            let reference = make_test_reference(
                &resolved.exo,
                cfg.k_sine,
                cfg.k_total,
                cfg.knot_spacing,
                cfg.sample_time,
            )?;
            let knots = fit_knots(&reference.samples, cfg.knot_spacing, resolved.family)?;
            Ok(EvaluationReference {
                samples: reference.samples,
                dense: reference.dense,
                knots,
                k_total: cfg.k_total,
            })
        }
    }
}

pub struct CompareOutput {
    pub pradp_gain_gap: f64,
    pub max_cost_pradp_offmodel: f64,
    pub max_cost_baseline_offmodel: f64,
    pub cost_ratio_offmodel: f64,
    pub onmodel_discounted_pradp: f64,
    pub onmodel_discounted_baseline: f64,
    pub onmodel_relative_gap: f64,
    pub pradp_trajectory: Trajectory,
    pub baseline_trajectory: Trajectory,
}

/// Train both controllers on the shared excitation run, evaluate them on
/// the deviation reference, and additionally compare their costs on a
/// fully on-model run where both are graded against the same spline.
pub fn cmd_compare(cfg: &ExperimentConfig, out: &Path) -> CliResult<CompareOutput> {
    ensure_out_dir(out)?;
    let resolved = resolve(cfg)?;
    validate_assumptions(&resolved, cfg.gamma)?;
    if cfg.k_sine >= cfg.k_total {
        return Err(CliError::Validation(
            "test.k_sine must be below test.k_total".into(),
        ));
    }

    // Shared excitation data; the baseline sees the raw exo reference.
    let (_, _, dataset) = training_setup(cfg, &resolved)?;
    let tracker = lspi(&dataset, &resolved.cost, cfg.e_w, cfg.max_iter, None)?;
    let exo_refs = resolved.exo.rollout(cfg.train_samples);
    let baseline_data = baseline_dataset(&dataset.transitions, &exo_refs)?;
    let baseline = baseline_lspi(
        &baseline_data,
        &resolved.exo,
        &resolved.cost,
        cfg.e_w,
        cfg.max_iter,
    )?;

    let system = ExtendedSystem::build(&resolved.plant, &resolved.cost, &resolved.family)?;
    let solution = solve_dare(&system, &resolved.cost, DEFAULT_DARE_TOL, DEFAULT_DARE_MAX_ITER)?;
    let oracle = optimal_gain(&solution, &system, &resolved.cost)?;
    let pradp_gain_gap = (&tracker.gain - oracle).norm();

    // Deviation run: the tracker follows its spline, the baseline is
    // driven by and judged against the actual reference curve.
    let eval = evaluation_reference(cfg, &resolved)?;
    csvio::write_reference_samples(&out.join("test_reference.csv"), &eval.samples)?;
    let pradp_traj = rollout_tracking(
        &resolved.plant,
        &tracker.gain,
        &eval.knots,
        eval.k_total,
        &cfg.x0,
        &resolved.cost,
    )?;
    let base_traj = baseline_rollout(
        &resolved.plant,
        &baseline.gain,
        &eval.dense,
        eval.k_total,
        &cfg.x0,
        &resolved.cost,
    )?;
    csvio::write_trajectory(&out.join("pradp_traj.csv"), &pradp_traj)?;
    csvio::write_trajectory(&out.join("baseline_traj.csv"), &base_traj)?;

    let max_cost_pradp_offmodel = pradp_traj.max_cost_from(cfg.k_sine + 1);
    let max_cost_baseline_offmodel = base_traj.max_cost_from(cfg.k_sine + 1);
    let cost_ratio_offmodel = max_cost_baseline_offmodel / max_cost_pradp_offmodel;

    // On-model equivalence run: one shared spline of the exo reference;
    // the baseline receives and is judged against its point values.
    let om_samples = exo_samples(&resolved.exo, eval.k_total, cfg.knot_spacing)?;
    let om_knots = fit_knots(&om_samples, cfg.knot_spacing, resolved.family)?;
    let om_dense = (0..eval.k_total)
        .map(|k| Ok(om_knots.params_at(k)?.point(0)))
        .collect::<CliResult<Vec<_>>>()?;
    let pradp_om = rollout_tracking(
        &resolved.plant,
        &tracker.gain,
        &om_knots,
        eval.k_total,
        &cfg.x0,
        &resolved.cost,
    )?;
    let base_om = baseline_rollout(
        &resolved.plant,
        &baseline.gain,
        &om_dense,
        eval.k_total,
        &cfg.x0,
        &resolved.cost,
    )?;
    csvio::write_trajectory(&out.join("onmodel_pradp_traj.csv"), &pradp_om)?;
    csvio::write_trajectory(&out.join("onmodel_baseline_traj.csv"), &base_om)?;

    let onmodel_discounted_pradp = pradp_om.discounted_cost_prefix(cfg.gamma, cfg.k_sine);
    let onmodel_discounted_baseline = base_om.discounted_cost_prefix(cfg.gamma, cfg.k_sine);
    let onmodel_relative_gap = (onmodel_discounted_pradp - onmodel_discounted_baseline).abs()
        / onmodel_discounted_pradp.max(onmodel_discounted_baseline).max(f64::MIN_POSITIVE);

    let entries = [
        ("pradp_gain_gap", csvio::fmt_f64(pradp_gain_gap)),
        (
            "max_cost_pradp_offmodel",
            csvio::fmt_f64(max_cost_pradp_offmodel),
        ),
        (
            "max_cost_baseline_offmodel",
            csvio::fmt_f64(max_cost_baseline_offmodel),
        ),
        ("cost_ratio_offmodel", csvio::fmt_f64(cost_ratio_offmodel)),
        (
            "max_cost_pradp_overall",
            csvio::fmt_f64(pradp_traj.max_cost()),
        ),
        (
            "max_cost_baseline_overall",
            csvio::fmt_f64(base_traj.max_cost()),
        ),
        (
            "onmodel_discounted_pradp",
            csvio::fmt_f64(onmodel_discounted_pradp),
        ),
        (
            "onmodel_discounted_baseline",
            csvio::fmt_f64(onmodel_discounted_baseline),
        ),
        (
            "onmodel_relative_gap",
            csvio::fmt_f64(onmodel_relative_gap),
        ),
        ("pradp_iterations", tracker.iterations.to_string()),
        ("baseline_iterations", baseline.iterations.to_string()),
    ];
    write_meta(out, "compare_summary.txt", "compare", &entries)?;
    write_resolved_config(cfg, out, "compare")?;

    Ok(CompareOutput {
        pradp_gain_gap,
        max_cost_pradp_offmodel,
        max_cost_baseline_offmodel,
        cost_ratio_offmodel,
        onmodel_discounted_pradp,
        onmodel_discounted_baseline,
        onmodel_relative_gap,
        pradp_trajectory: pradp_traj,
        baseline_trajectory: base_traj,
    })
}

pub struct RolloutOutput {
    pub trajectory: Trajectory,
    pub max_cost: f64,
    pub discounted_cost: f64,
    pub rms_tracking_error: f64,
}

/// Roll a gain (from a CSV, or the Riccati oracle's when none is given)
/// over the evaluation reference.
pub fn cmd_rollout(
    cfg: &ExperimentConfig,
    out: &Path,
    gain_csv: Option<&PathBuf>,
) -> CliResult<RolloutOutput> {
    ensure_out_dir(out)?;
    let resolved = resolve(cfg)?;
    validate_assumptions(&resolved, cfg.gamma)?;

    let gain = match gain_csv {
        Some(path) => csvio::read_gain(path)?,
        None => {
            let system = ExtendedSystem::build(&resolved.plant, &resolved.cost, &resolved.family)?;
            let solution =
                solve_dare(&system, &resolved.cost, DEFAULT_DARE_TOL, DEFAULT_DARE_MAX_ITER)?;
            optimal_gain(&solution, &system, &resolved.cost)?
        }
    };

    let eval = evaluation_reference(cfg, &resolved)?;
    csvio::write_reference_samples(&out.join("test_reference.csv"), &eval.samples)?;
    let trajectory = rollout_tracking(
        &resolved.plant,
        &gain,
        &eval.knots,
        eval.k_total,
        &cfg.x0,
        &resolved.cost,
    )?;
    csvio::write_trajectory(&out.join("rollout.csv"), &trajectory)?;

    let summary = metrics(&trajectory, cfg.gamma);
    write_meta(
        out,
        "rollout_meta.txt",
        "rollout",
        &[
            ("steps", trajectory.len().to_string()),
            ("max_cost", csvio::fmt_f64(summary.max_cost)),
            ("discounted_cost", csvio::fmt_f64(summary.discounted_cost)),
            (
                "rms_tracking_error",
                csvio::fmt_f64(summary.rms_tracking_error),
            ),
        ],
    )?;
    write_resolved_config(cfg, out, "rollout")?;
    Ok(RolloutOutput {
        max_cost: summary.max_cost,
        discounted_cost: summary.discounted_cost,
        rms_tracking_error: summary.rms_tracking_error,
        trajectory,
    })
}

/// `ground_truth_h` re-export point for tests and tooling that work at
/// the command level.
pub fn oracle_h(
    system: &ExtendedSystem,
    solution: &RiccatiSolution,
    cost: &CostSpec,
) -> CliResult<pradp_core::qtracker::HMatrix> {
    Ok(ground_truth_h(solution, system, cost)?)
}
