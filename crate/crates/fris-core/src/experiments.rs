//! Experiment runner: scheme comparisons, sweeps and CSV/JSON outputs.
//!
//! Each command writes one or more CSV files plus a `manifest.json` recording
//! the command, the config digest and the produced files. Outputs are
//! byte-deterministic for a fixed config and seed list except for the
//! wall-time columns. Sweep cells run on the worker pool ([`crate::parallel`]);
//! writing is serialized at the end.

use crate::beamforming::UserChannels;
use crate::channel::{assemble, sample_realization, ChannelRealization};
use crate::config::{sha256_hex, ScenarioConfig};
use crate::error::{Error, Result};
use crate::parallel::maybe_par_map;
use crate::pattern::{self, PatternBank};
use crate::power::{
    line_grid, optimal_reflection_phase, pattern_upper_bound, position_bound_feasibility,
    random_link,
};
use crate::solver::{
    alternating_optimize, passive_beamforming_baseline, zf_codesign, FixedPattern, SurfaceState,
};
use crate::sph::{fit_pattern, gpp38901_pattern, quadrature_grid, HarmonicCoefficients};
use nalgebra::Vector3;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// The four compared schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Pattern-reconfigurable surface with MMSE beamforming (the co-design).
    FrisMmse,
    /// Pattern-reconfigurable surface with zero-forcing beamforming.
    FrisZf,
    /// Conventional surface, 38.901 element pattern, passive beamforming.
    Ris38901,
    /// Conventional surface, isotropic elements, passive beamforming.
    RisIsotropic,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::FrisMmse,
        Scheme::FrisZf,
        Scheme::Ris38901,
        Scheme::RisIsotropic,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Scheme::FrisMmse => "fris_mmse",
            Scheme::FrisZf => "fris_zf",
            Scheme::Ris38901 => "ris_38901",
            Scheme::RisIsotropic => "ris_isotropic",
        }
    }

    fn is_baseline(&self) -> bool {
        matches!(self, Scheme::Ris38901 | Scheme::RisIsotropic)
    }
}

/// Result of one (scheme, scenario, seed) cell.
#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub rate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub rate_trace: Vec<f64>,
}

/// Run one scheme on the scenario drawn from `seed`.
pub fn run_scheme(scheme: Scheme, config: &ScenarioConfig, seed: u64) -> Result<SchemeOutcome> {
    let mut scheme_config = config.clone();
    if scheme.is_baseline() {
        if let Some(n_t) = config.baseline_nt_override {
            scheme_config.n_t = n_t;
        }
    }
    let realization = sample_realization(&scheme_config, seed);
    match scheme {
        Scheme::FrisMmse => {
            let assembled = assemble(&realization, scheme_config.trunc_len)?;
            let result = alternating_optimize(&assembled, &scheme_config, seed)?;
            Ok(SchemeOutcome {
                rate: result.final_rate(),
                iterations: result.iterations,
                converged: result.converged,
                rate_trace: result.rate_trace,
            })
        }
        Scheme::FrisZf => {
            let assembled = assemble(&realization, scheme_config.trunc_len)?;
            let result = zf_codesign(&assembled, &scheme_config, seed)?;
            let rate = *result.rate_trace.last().expect("trace is never empty");
            Ok(SchemeOutcome {
                rate,
                iterations: result.iterations,
                converged: result.converged,
                rate_trace: result.rate_trace,
            })
        }
        Scheme::Ris38901 | Scheme::RisIsotropic => {
            let pattern = if scheme == Scheme::Ris38901 {
                FixedPattern::Gpp38901
            } else {
                FixedPattern::Isotropic
            };
            let result = passive_beamforming_baseline(&realization, pattern, &scheme_config, seed)?;
            Ok(SchemeOutcome {
                rate: result.final_rate(),
                iterations: result.iterations,
                converged: result.converged,
                rate_trace: result.rate_trace,
            })
        }
    }
}

/// Swept scenario parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    /// Surface element count `M = M_y × M_z`.
    Elements,
    /// BS antenna count `N_t`.
    Antennas,
    /// Basis truncation length `I`.
    TruncLen,
}

impl SweepAxis {
    pub fn label(&self) -> &'static str {
        match self {
            SweepAxis::Elements => "M",
            SweepAxis::Antennas => "Nt",
            SweepAxis::TruncLen => "I",
        }
    }

    pub fn values(&self, config: &ScenarioConfig) -> Vec<usize> {
        match self {
            SweepAxis::Elements => config.sweep.m_values.clone(),
            SweepAxis::Antennas => config.sweep.nt_values.clone(),
            SweepAxis::TruncLen => config.sweep.i_values.clone(),
        }
    }
}

/// Split an element count into the most square `m_y × m_z` factorization
/// (largest divisor not exceeding the square root goes to `m_y`).
pub fn near_square_factors(m: usize) -> (usize, usize) {
    let mut best = 1;
    let mut d = 1;
    while d * d <= m {
        if m % d == 0 {
            best = d;
        }
        d += 1;
    }
    (best, m / best)
}

fn apply_axis(config: &ScenarioConfig, axis: SweepAxis, value: usize) -> ScenarioConfig {
    let mut cell = config.clone();
    match axis {
        SweepAxis::Elements => {
            let (m_y, m_z) = near_square_factors(value);
            cell.m_y = m_y;
            cell.m_z = m_z;
        }
        SweepAxis::Antennas => {
            cell.n_t = value;
            // An explicit baseline antenna override would make the baseline
            // curves flat in an antenna sweep, so it is ignored here.
            cell.baseline_nt_override = None;
        }
        SweepAxis::TruncLen => cell.trunc_len = value,
    }
    cell
}

fn create_dir(out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir.to_path_buf(), e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::csv(path.to_path_buf(), e))
}

fn write_record<I, S>(writer: &mut csv::Writer<std::fs::File>, path: &Path, record: I) -> Result<()>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[u8]>,
{
    writer
        .write_record(record)
        .map_err(|e| Error::csv(path.to_path_buf(), e))
}

fn finish_csv(mut writer: csv::Writer<std::fs::File>, path: &Path) -> Result<()> {
    writer.flush().map_err(|e| Error::io(path.to_path_buf(), e))
}

/// Write `manifest.json` describing a finished run.
fn write_manifest(
    out_dir: &Path,
    command: &str,
    config: &ScenarioConfig,
    parameters: serde_json::Value,
    outputs: &[PathBuf],
) -> Result<PathBuf> {
    let manifest = serde_json::json!({
        "command": command,
        "config_sha256": config
            .source_digest
            .clone()
            .unwrap_or_else(|| "in-memory".to_string()),
        "parameters": parameters,
        "outputs": outputs
            .iter()
            .map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned())
            .collect::<Vec<_>>(),
    });
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
    std::fs::write(&path, text).map_err(|e| Error::io(path.clone(), e))?;
    Ok(path)
}

/// Fit the 38.901 pattern at each configured truncation length; writes
/// `nmse.csv`, one synthesized-pattern grid per length, and the manifest.
pub fn cmd_fit_pattern(config: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let fit_config = &config.pattern_fit;
    let grid = quadrature_grid(fit_config.n_theta, fit_config.n_phi);
    let samples: Vec<Complex64> = grid
        .iter()
        .map(|node| Complex64::new(gpp38901_pattern(node.theta, node.phi), 0.0))
        .collect();

    let mut outputs = Vec::new();
    let nmse_path = out_dir.join("nmse.csv");
    let mut nmse_csv = csv_writer(&nmse_path)?;
    write_record(&mut nmse_csv, &nmse_path, ["trunc_len", "nmse"])?;

    for &trunc_len in &fit_config.trunc_lens {
        let fit = fit_pattern(&samples, &grid, trunc_len)?;
        write_record(
            &mut nmse_csv,
            &nmse_path,
            [trunc_len.to_string(), format!("{:e}", fit.nmse)],
        )?;
        let grid_path = out_dir.join(format!("pattern_i{trunc_len}.csv"));
        write_pattern_grid(
            &fit.coefficients,
            fit_config.n_theta,
            fit_config.n_phi,
            &grid_path,
        )?;
        outputs.push(grid_path);
    }
    finish_csv(nmse_csv, &nmse_path)?;
    outputs.insert(0, nmse_path);

    let manifest = write_manifest(
        out_dir,
        "fit-pattern",
        config,
        serde_json::json!({
            "trunc_lens": fit_config.trunc_lens,
            "grid": [fit_config.n_theta, fit_config.n_phi],
        }),
        &outputs,
    )?;
    outputs.push(manifest);
    Ok(outputs)
}

/// Sample the directional gain of a coefficient vector over a quadrature
/// grid and write `(theta_deg, phi_deg, re, im, abs, phase)` rows.
pub fn write_pattern_grid(
    coefficients: &HarmonicCoefficients,
    n_theta: usize,
    n_phi: usize,
    path: &Path,
) -> Result<()> {
    let grid = quadrature_grid(n_theta, n_phi);
    let mut writer = csv_writer(path)?;
    write_record(
        &mut writer,
        path,
        ["theta_deg", "phi_deg", "re", "im", "abs", "phase"],
    )?;
    for node in &grid {
        let gain = crate::sph::pattern_gain(coefficients, node.theta, node.phi)?;
        write_record(
            &mut writer,
            path,
            [
                format!("{}", node.theta.to_degrees()),
                format!("{}", node.phi.to_degrees()),
                format!("{}", gain.re),
                format!("{}", gain.im),
                format!("{}", gain.norm()),
                format!("{}", gain.arg()),
            ],
        )?;
    }
    finish_csv(writer, path)
}

/// Per-instance comparison of passive beamforming, a position grid search
/// and the pattern-phase bound; writes `instances.csv` and `summary.csv`.
pub fn cmd_power_analysis(config: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let pa = &config.power_analysis;
    if pa.num_instances == 0 {
        return Err(Error::Config("need at least one instance".into()));
    }

    struct InstanceRow {
        seed: u64,
        l: usize,
        z: usize,
        passive: f64,
        position_best: f64,
        bound: f64,
    }

    let seeds: Vec<u64> = (0..pa.num_instances as u64).collect();
    let path_bounds = pa.path_bounds;
    let noise = pa.noise_power;
    let grid_step = pa.grid_step_wavelengths;
    let grid_points = pa.grid_points;
    let rows: Vec<Result<InstanceRow>> = maybe_par_map(seeds, move |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9).wrapping_add(1));
        let l = rng.random_range(path_bounds.0..=path_bounds.1);
        let z = rng.random_range(path_bounds.0..=path_bounds.1);
        let link = random_link(1, l, z, noise, seed);
        let passive = optimal_reflection_phase(&link)?;
        let grid = line_grid(
            Vector3::new(1.0, 0.0, 0.0),
            grid_step,
            grid_points,
            link.wavelength,
        );
        let search = position_bound_feasibility(&link, &grid)?;
        let bound = pattern_upper_bound(&link)?;
        Ok(InstanceRow {
            seed,
            l,
            z,
            passive: passive.power,
            position_best: search.best_grid_power,
            bound: bound.power,
        })
    });

    let instances_path = out_dir.join("instances.csv");
    let mut writer = csv_writer(&instances_path)?;
    write_record(
        &mut writer,
        &instances_path,
        [
            "seed",
            "bs_paths",
            "ue_paths",
            "passive_power",
            "position_grid_best",
            "pattern_bound",
        ],
    )?;
    let mut passive_ratio_sum = 0.0;
    let mut position_ratio_sum = 0.0;
    let mut strict_position_gap = 0usize;
    let mut count = 0usize;
    for row in rows {
        let row = row?;
        write_record(
            &mut writer,
            &instances_path,
            [
                row.seed.to_string(),
                row.l.to_string(),
                row.z.to_string(),
                format!("{}", row.passive),
                format!("{}", row.position_best),
                format!("{}", row.bound),
            ],
        )?;
        passive_ratio_sum += row.passive / row.bound;
        position_ratio_sum += row.position_best / row.bound;
        if row.position_best < row.bound * (1.0 - 1e-9) {
            strict_position_gap += 1;
        }
        count += 1;
    }
    finish_csv(writer, &instances_path)?;

    let summary_path = out_dir.join("summary.csv");
    let mut summary = csv_writer(&summary_path)?;
    write_record(
        &mut summary,
        &summary_path,
        [
            "mean_passive_over_bound",
            "mean_position_over_bound",
            "strict_position_gap_fraction",
        ],
    )?;
    write_record(
        &mut summary,
        &summary_path,
        [
            format!("{}", passive_ratio_sum / count as f64),
            format!("{}", position_ratio_sum / count as f64),
            format!("{}", strict_position_gap as f64 / count as f64),
        ],
    )?;
    finish_csv(summary, &summary_path)?;

    let mut outputs = vec![instances_path, summary_path];
    let manifest = write_manifest(
        out_dir,
        "power-analysis",
        config,
        serde_json::json!({
            "num_instances": pa.num_instances,
            "path_bounds": [pa.path_bounds.0, pa.path_bounds.1],
            "grid_points": pa.grid_points,
        }),
        &outputs,
    )?;
    outputs.push(manifest);
    Ok(outputs)
}

struct CellResult {
    scheme: Scheme,
    value: usize,
    seed: u64,
    outcome: Result<SchemeOutcome>,
    runtime_s: f64,
}

/// Run all four schemes over the configured axis grid and seed list; writes
/// `sweep.csv`, per-scheme `medians.csv` and the manifest. Failed cells are
/// recorded with their error and the sweep continues.
pub fn cmd_sweep(config: &ScenarioConfig, axis: SweepAxis, out_dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let values = axis.values(config);
    if values.is_empty() {
        return Err(Error::Config(format!(
            "empty sweep grid for axis {}",
            axis.label()
        )));
    }

    let mut cells = Vec::new();
    for &value in &values {
        for scheme in Scheme::ALL {
            for &seed in &config.seeds {
                cells.push((scheme, value, seed));
            }
        }
    }
    let base = config.clone();
    let results: Vec<CellResult> = maybe_par_map(cells, move |(scheme, value, seed)| {
        let cell_config = apply_axis(&base, axis, value);
        let start = Instant::now();
        let outcome = run_scheme(scheme, &cell_config, seed);
        CellResult {
            scheme,
            value,
            seed,
            outcome,
            runtime_s: start.elapsed().as_secs_f64(),
        }
    });

    let sweep_path = out_dir.join("sweep.csv");
    let mut writer = csv_writer(&sweep_path)?;
    write_record(
        &mut writer,
        &sweep_path,
        [
            "scheme",
            "axis",
            "value",
            "seed",
            "rate",
            "iterations",
            "converged",
            "runtime_s",
            "status",
        ],
    )?;
    for cell in &results {
        let (rate, iterations, converged, status) = match &cell.outcome {
            Ok(outcome) => (
                format!("{}", outcome.rate),
                outcome.iterations.to_string(),
                outcome.converged.to_string(),
                "ok".to_string(),
            ),
            Err(e) => (
                String::new(),
                String::new(),
                String::new(),
                format!("error: {e}"),
            ),
        };
        write_record(
            &mut writer,
            &sweep_path,
            [
                cell.scheme.label().to_string(),
                axis.label().to_string(),
                cell.value.to_string(),
                cell.seed.to_string(),
                rate,
                iterations,
                converged,
                format!("{:.6}", cell.runtime_s),
                status,
            ],
        )?;
    }
    finish_csv(writer, &sweep_path)?;

    // Per-(scheme, value) medians over successful seeds.
    let medians_path = out_dir.join("medians.csv");
    let mut medians = csv_writer(&medians_path)?;
    write_record(
        &mut medians,
        &medians_path,
        ["scheme", "axis", "value", "median_rate", "num_ok"],
    )?;
    for &value in &values {
        for scheme in Scheme::ALL {
            let mut rates: Vec<f64> = results
                .iter()
                .filter(|c| c.scheme == scheme && c.value == value)
                .filter_map(|c| c.outcome.as_ref().ok().map(|o| o.rate))
                .collect();
            rates.sort_by(f64::total_cmp);
            let median = median_of_sorted(&rates);
            write_record(
                &mut medians,
                &medians_path,
                [
                    scheme.label().to_string(),
                    axis.label().to_string(),
                    value.to_string(),
                    median.map_or_else(String::new, |m| format!("{m}")),
                    rates.len().to_string(),
                ],
            )?;
        }
    }
    finish_csv(medians, &medians_path)?;

    let mut outputs = vec![sweep_path, medians_path];
    let manifest = write_manifest(
        out_dir,
        "sweep",
        config,
        serde_json::json!({
            "axis": axis.label(),
            "values": values,
            "seeds": config.seeds,
        }),
        &outputs,
    )?;
    outputs.push(manifest);
    Ok(outputs)
}

fn median_of_sorted(sorted: &[f64]) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let mid = sorted.len() / 2;
    Some(if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    })
}

/// Median over a slice, for report code and tests.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    median_of_sorted(&sorted)
}

/// Solve the configured scenario for every seed and scheme; writes
/// `results.csv`, the co-design outer-rate traces, one inner
/// conjugate-gradient trace, and a path-table dump of the first seed.
pub fn cmd_solve(config: &ScenarioConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    let cells: Vec<(Scheme, u64)> = Scheme::ALL
        .iter()
        .flat_map(|&scheme| config.seeds.iter().map(move |&seed| (scheme, seed)))
        .collect();
    let base = config.clone();
    let results: Vec<(Scheme, u64, Result<SchemeOutcome>, f64)> =
        maybe_par_map(cells, move |(scheme, seed)| {
            let start = Instant::now();
            let outcome = run_scheme(scheme, &base, seed);
            (scheme, seed, outcome, start.elapsed().as_secs_f64())
        });

    let results_path = out_dir.join("results.csv");
    let mut writer = csv_writer(&results_path)?;
    write_record(
        &mut writer,
        &results_path,
        [
            "seed",
            "scheme",
            "m",
            "n_t",
            "trunc_len",
            "num_ues",
            "rate",
            "iterations",
            "wall_time_s",
            "status",
        ],
    )?;
    for (scheme, seed, outcome, runtime) in &results {
        let n_t = if scheme.is_baseline() {
            config.baseline_nt_override.unwrap_or(config.n_t)
        } else {
            config.n_t
        };
        let (rate, iterations, status) = match outcome {
            Ok(o) => (
                format!("{}", o.rate),
                o.iterations.to_string(),
                "ok".to_string(),
            ),
            Err(e) => (String::new(), String::new(), format!("error: {e}")),
        };
        write_record(
            &mut writer,
            &results_path,
            [
                seed.to_string(),
                scheme.label().to_string(),
                config.num_elements().to_string(),
                n_t.to_string(),
                config.trunc_len.to_string(),
                config.num_ues.to_string(),
                rate,
                iterations,
                format!("{runtime:.6}"),
                status,
            ],
        )?;
    }
    finish_csv(writer, &results_path)?;

    // Outer-rate traces of the co-design, one column pair per seed row.
    let trace_path = out_dir.join("rate_traces.csv");
    let mut trace_csv = csv_writer(&trace_path)?;
    write_record(&mut trace_csv, &trace_path, ["seed", "iteration", "rate"])?;
    for (scheme, seed, outcome, _) in &results {
        if *scheme != Scheme::FrisMmse {
            continue;
        }
        if let Ok(o) = outcome {
            for (i, rate) in o.rate_trace.iter().enumerate() {
                write_record(
                    &mut trace_csv,
                    &trace_path,
                    [seed.to_string(), i.to_string(), format!("{rate}")],
                )?;
            }
        }
    }
    finish_csv(trace_csv, &trace_path)?;

    // A representative inner conjugate-gradient trace at the first seed.
    let first_seed = config.seeds[0];
    let realization = sample_realization(config, first_seed);
    let assembled = assemble(&realization, config.trunc_len)?;
    let bank = PatternBank::perturbed_isotropic(
        config.num_elements(),
        config.trunc_len,
        config.tolerances.init_perturbation,
        first_seed,
    );
    let eff = crate::channel::effective_channels(&bank, &assembled)?;
    let users = UserChannels::from_effective(&eff);
    let per_ue = (config.power_budget_w / config.num_ues as f64).sqrt();
    let beams: Vec<_> = users
        .composite
        .iter()
        .map(|c| {
            let norm = c.norm();
            if norm <= f64::MIN_POSITIVE {
                nalgebra::DVector::zeros(c.len())
            } else {
                c * Complex64::new(per_ue / norm, 0.0)
            }
        })
        .collect();
    let (_, rcg_trace) = pattern::rcg_optimize(
        bank,
        &assembled,
        &beams,
        &config.ue_weights,
        &config.noise_vector(),
        config.tolerances.rcg,
        config.tolerances.rcg_max_iters,
    )?;
    let rcg_path = out_dir.join("rcg_trace.csv");
    let mut rcg_csv = csv_writer(&rcg_path)?;
    write_record(
        &mut rcg_csv,
        &rcg_path,
        ["iteration", "objective", "step", "grad_norm"],
    )?;
    for point in &rcg_trace {
        write_record(
            &mut rcg_csv,
            &rcg_path,
            [
                point.iteration.to_string(),
                format!("{}", point.objective),
                format!("{}", point.step),
                format!("{}", point.grad_norm),
            ],
        )?;
    }
    finish_csv(rcg_csv, &rcg_path)?;

    let paths_path = out_dir.join("paths.csv");
    dump_paths_csv(&realization, &paths_path)?;

    let mut outputs = vec![results_path, trace_path, rcg_path, paths_path];
    let manifest = write_manifest(
        out_dir,
        "solve",
        config,
        serde_json::json!({ "seeds": config.seeds }),
        &outputs,
    )?;
    outputs.push(manifest);
    Ok(outputs)
}

/// Debug dump of a realization's path tables.
pub fn dump_paths_csv(realization: &ChannelRealization, path: &Path) -> Result<()> {
    let mut writer = csv_writer(path)?;
    write_record(
        &mut writer,
        path,
        [
            "link",
            "ue",
            "is_los",
            "distance_m",
            "gain_re",
            "gain_im",
            "ris_theta_rad",
            "ris_phi_rad",
            "bs_theta_rad",
            "bs_phi_rad",
        ],
    )?;
    for p in &realization.bs_ris_paths {
        let bs = p.bs_angle.expect("BS-side paths carry a BS angle");
        write_record(
            &mut writer,
            path,
            [
                "bs_ris".to_string(),
                String::new(),
                p.is_los.to_string(),
                format!("{}", p.distance),
                format!("{}", p.gain.re),
                format!("{}", p.gain.im),
                format!("{}", p.ris_angle.theta),
                format!("{}", p.ris_angle.phi),
                format!("{}", bs.theta),
                format!("{}", bs.phi),
            ],
        )?;
    }
    for (ue, paths) in realization.ris_ue_paths.iter().enumerate() {
        for p in paths {
            write_record(
                &mut writer,
                path,
                [
                    "ris_ue".to_string(),
                    ue.to_string(),
                    p.is_los.to_string(),
                    format!("{}", p.distance),
                    format!("{}", p.gain.re),
                    format!("{}", p.gain.im),
                    format!("{}", p.ris_angle.theta),
                    format!("{}", p.ris_angle.phi),
                    String::new(),
                    String::new(),
                ],
            )?;
        }
    }
    finish_csv(writer, path)
}

/// Solve the scenario at `seed` with the co-design and export the optimized
/// pattern of `element_id` on an `n_theta × n_phi` grid.
pub fn cmd_export_pattern(
    config: &ScenarioConfig,
    seed: u64,
    element_id: usize,
    n_theta: usize,
    n_phi: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    create_dir(out_dir)?;
    if element_id >= config.num_elements() {
        return Err(Error::Domain(format!(
            "element {element_id} outside the {} x {} surface",
            config.m_y, config.m_z
        )));
    }
    let realization = sample_realization(config, seed);
    let assembled = assemble(&realization, config.trunc_len)?;
    let result = alternating_optimize(&assembled, config, seed)?;
    let bank = match &result.surface {
        SurfaceState::Patterns(bank) => bank,
        SurfaceState::Phases { .. } => unreachable!("co-design always returns a bank"),
    };
    let grid_path = out_dir.join(format!("element_{element_id}_pattern.csv"));
    write_pattern_grid(&bank.element(element_id), n_theta, n_phi, &grid_path)?;
    let mut outputs = vec![grid_path];
    let manifest = write_manifest(
        out_dir,
        "export-pattern",
        config,
        serde_json::json!({
            "seed": seed,
            "element": element_id,
            "grid": [n_theta, n_phi],
        }),
        &outputs,
    )?;
    outputs.push(manifest);
    Ok(outputs)
}

/// Hash of a file's bytes, exposed for the CLI to report.
pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path.to_path_buf(), e))?;
    Ok(sha256_hex(&bytes))
}
