use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::json;

use spincell_core::acceptance::{run_criterion, AcceptanceOptions, CRITERIA};
use spincell_core::cell::{
    chamber_field_figure, field_map, line_trace, local_maxima, solve_thermal, write_grid_text, write_slice_csv,
    CellLayoutConfig, ChamberKind, ThermalField,
};
use spincell_core::config::CellConfig;
use spincell_core::consts::ZERO_CELSIUS_K;
use spincell_core::scans::{minimum_location, relative_narrowing, run_scan_with_workers, write_scan, ScanAxis};
use spincell_core::spectro::{fit_lorentzian, select_model, synthesize_spectrum, RfSpectrum};
use spincell_core::spin::{rate_breakdown, steady_state};
use spincell_core::vapor::{absorption_fwhm, optical_depth};

use crate::run_dir::{default_target, file_entry, FileEntry, RunDir};
use crate::{
    AcceptanceCommand, BfieldCommand, Cli, Command, GlobalArgs, Invalid, ScanArgs, ScanCommand, SpectrumCommand,
    ThermalCommand, VaporCommand, RUNS_DIR_ENV,
};

/// Prominence used to count temperature maxima along the trace, K.
const TRACE_PEAK_PROMINENCE_K: f64 = 0.2;

pub fn dispatch(cli: &Cli) -> Result<PathBuf> {
    let g = &cli.global;
    match &cli.command {
        Command::Vapor(VaporCommand::Props) => {
            let (cell, input) = load_cell(g)?;
            let run = open_run(g, "vapor-props")?;
            vapor_props(&run, &cell)?;
            run.commit("vapor props", g.seed, Some(input))
        }
        Command::Spectrum(SpectrumCommand::Synth) => {
            let (cell, input) = load_cell(g)?;
            let run = open_run(g, "spectrum-synth")?;
            spectrum_synth(&run, &cell, g.seed)?;
            run.commit("spectrum synth", g.seed, Some(input))
        }
        Command::Spectrum(SpectrumCommand::Fit { input, sidecar, components }) => {
            for p in std::iter::once(input).chain(sidecar.as_ref()) {
                require_file(p)?;
            }
            let spectrum = RfSpectrum::read(input, sidecar.as_deref())
                .with_context(|| format!("reading spectrum {}", input.display()))?;
            let entry = file_entry(input, file_name(input))?;
            let run = open_run(g, "spectrum-fit")?;
            match components {
                Some(n) => run.write_json("fit.json", &fit_lorentzian(&spectrum, usize::from(*n), None)?)?,
                None => run.write_json("fit.json", &select_model(&spectrum)?)?,
            }
            run.commit("spectrum fit", g.seed, Some(entry))
        }
        Command::Scan(cmd) => {
            let (axis, args) = match cmd {
                ScanCommand::PumpPower(a) => (ScanAxis::PumpPower, a),
                ScanCommand::Temperature(a) => (ScanAxis::Temperature, a),
                ScanCommand::Larmor(a) => (ScanAxis::Larmor, a),
            };
            let (cell, input) = load_cell(g)?;
            let name = format!("scan-{}", axis.name().replace('_', "-"));
            scan(g, &cell, axis, args, &name, input)
        }
        Command::Thermal(ThermalCommand::Solve { pitch_mm }) => {
            let (layout, input) = load_layout(g)?;
            let mut options = layout.thermal_options();
            if let Some(p) = pitch_mm {
                options.pitch = p * 1e-3;
                options.validate()?;
            }
            let run = open_run(g, "thermal-solve")?;
            let field = solve_thermal(&layout.stack(), &layout.cutouts(), &layout.heater(), layout.ambient(), &options)?;
            thermal_outputs(&run, &layout, &field)?;
            run.commit("thermal solve", g.seed, Some(input))
        }
        Command::Bfield(BfieldCommand::Map { current_a }) => {
            let (layout, input) = load_layout(g)?;
            if let Some(c) = current_a {
                if !c.is_finite() {
                    return Err(Invalid(format!("current must be finite, got {c}")).into());
                }
            }
            let run = open_run(g, "bfield-map")?;
            bfield_map(&run, &layout, *current_a)?;
            run.commit("bfield map", g.seed, Some(input))
        }
        Command::Acceptance(AcceptanceCommand::Run { criteria }) => {
            let ids: Vec<u32> = if criteria.is_empty() { CRITERIA.iter().map(|(id, _)| *id).collect() } else { criteria.clone() };
            if let Some(bad) = ids.iter().find(|id| !CRITERIA.iter().any(|(c, _)| c == *id)) {
                return Err(Invalid(format!("no acceptance criterion {bad}")).into());
            }
            let run = open_run(g, "acceptance")?;
            acceptance(&run, &ids, AcceptanceOptions { seed: g.seed, workers: g.workers })?;
            run.commit("acceptance run", g.seed, None)
        }
    }
}

fn file_name(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

fn require_file(path: &Path) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(Invalid(format!("file {} not found", path.display())).into())
    }
}

fn config_path(g: &GlobalArgs) -> Result<&Path> {
    let path = g.config.as_deref().ok_or_else(|| Invalid("--config is required for this command".into()))?;
    require_file(path)?;
    Ok(path)
}

fn load_cell(g: &GlobalArgs) -> Result<(CellConfig, FileEntry)> {
    let path = config_path(g)?;
    let cell = CellConfig::load(path).with_context(|| format!("invalid cell config {}", path.display()))?;
    Ok((cell, file_entry(path, file_name(path))?))
}

fn load_layout(g: &GlobalArgs) -> Result<(CellLayoutConfig, FileEntry)> {
    let path = config_path(g)?;
    let layout = CellLayoutConfig::load(path).with_context(|| format!("invalid layout config {}", path.display()))?;
    Ok((layout, file_entry(path, file_name(path))?))
}

fn open_run(g: &GlobalArgs, name: &str) -> Result<RunDir> {
    let target = match &g.out {
        Some(out) => out.clone(),
        None => {
            let root = std::env::var_os(RUNS_DIR_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
            default_target(&root, name)
        }
    };
    log::info!("writing results to {}", target.display());
    RunDir::create(target)
}

#[derive(Serialize)]
struct VaporRow {
    temperature_k: f64,
    temperature_c: f64,
    number_density_m3: f64,
    mean_relative_speed_m_per_s: f64,
    spin_exchange_rate_per_s: f64,
    diffusion_m2_per_s: Option<f64>,
    diffusion_relaxation_per_s: f64,
    absorption_fwhm_hz: f64,
    optical_depth_resonant: f64,
    optical_depth_pump: f64,
}

fn vapor_props(run: &RunDir, cell: &CellConfig) -> Result<()> {
    let mut temps = cell.scans.temperature_k.clone();
    temps.push(cell.temperature_k);
    temps.sort_by(f64::total_cmp);
    temps.dedup();
    let mut rows = Vec::new();
    for t in temps {
        let mut c = cell.clone();
        c.temperature_k = t;
        let p = c.spin_params()?;
        rows.push(VaporRow {
            temperature_k: t,
            temperature_c: t - ZERO_CELSIUS_K,
            number_density_m3: p.vapor.number_density,
            mean_relative_speed_m_per_s: p.vapor.mean_relative_speed,
            spin_exchange_rate_per_s: p.vapor.sec_rate,
            diffusion_m2_per_s: p.vapor.diffusion_coefficient,
            diffusion_relaxation_per_s: p.gamma_diffusion()?,
            absorption_fwhm_hz: absorption_fwhm(&p.constants, &p.mix, t)?,
            optical_depth_resonant: optical_depth(&p.constants, &p.vapor, 0.0, p.geometry.optical_path, &p.mix)?,
            optical_depth_pump: p.optical_depth()?,
        });
    }
    let mut csv = String::from(
        "temperature_k,temperature_c,number_density_m3,mean_relative_speed_m_per_s,spin_exchange_rate_per_s,\
         diffusion_m2_per_s,diffusion_relaxation_per_s,absorption_fwhm_hz,optical_depth_resonant,optical_depth_pump\n",
    );
    for r in &rows {
        let d = r.diffusion_m2_per_s.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            csv,
            "{},{},{},{},{},{d},{},{},{},{}",
            r.temperature_k,
            r.temperature_c,
            r.number_density_m3,
            r.mean_relative_speed_m_per_s,
            r.spin_exchange_rate_per_s,
            r.diffusion_relaxation_per_s,
            r.absorption_fwhm_hz,
            r.optical_depth_resonant,
            r.optical_depth_pump
        )?;
    }
    run.write("props.csv", csv)?;
    run.write_json("props.json", &json!({ "cell": cell.name, "rows": rows }))
}

fn spectrum_synth(run: &RunDir, cell: &CellConfig, seed: u64) -> Result<()> {
    let params = cell.spin_params()?;
    let steady = steady_state(&params)?;
    let fwhm = rate_breakdown(&params, &steady)?.fwhm_hz();
    let plan = cell.sweep_spec().plan(params.field.larmor_frequency, fwhm);
    let mut noise = cell.noise_model();
    noise.seed = seed;
    let spectrum = synthesize_spectrum(&params, &plan, &noise)?;
    spectrum.write_csv(&run.path("spectrum.csv"))?;
    spectrum.write_sidecar(&run.path("spectrum.json"))?;
    run.write_json(
        "model.json",
        &json!({
            "cell": cell.name,
            "model_fwhm_hz": fwhm,
            "larmor_hz": params.field.larmor_frequency,
            "noise_seed": seed,
            "steady_state": steady,
        }),
    )
}

fn scan(g: &GlobalArgs, cell: &CellConfig, axis: ScanAxis, args: &ScanArgs, name: &str, input: FileEntry) -> Result<PathBuf> {
    let mut config = cell.scan_config(axis, g.seed)?;
    if let Some(r) = args.repeats {
        config.repeats = r;
        config.validate()?;
    }
    let run = open_run(g, name)?;
    let result = run_scan_with_workers(&config, g.workers)?;
    write_scan(&result, run.dir())?;
    let failed = result.records.iter().filter(|r| !r.ok).count();
    let mut summary = json!({
        "cell": cell.name,
        "axis": axis.name(),
        "points": result.points.len(),
        "failed_records": failed,
    });
    if axis == ScanAxis::PumpPower {
        summary["minimum"] = serde_json::to_value(minimum_location(&result).ok())?;
        summary["relative_narrowing"] = serde_json::to_value(relative_narrowing(&result).ok())?;
    }
    run.write_json("summary.json", &summary)?;
    run.commit(&format!("scan {}", name.trim_start_matches("scan-")), g.seed, Some(input))
}

fn nearest_layer(field: &ThermalField, z: f64) -> usize {
    (0..field.nz)
        .min_by(|&a, &b| {
            let c = |k: usize| (0.5 * (field.z_faces[k] + field.z_faces[k + 1]) - z).abs();
            c(a).total_cmp(&c(b))
        })
        .unwrap_or(0)
}

fn thermal_outputs(run: &RunDir, layout: &CellLayoutConfig, field: &ThermalField) -> Result<()> {
    write_grid_text(field, BufWriter::new(File::create(run.path("grid.txt"))?))?;

    let trace = line_trace(field, &layout.trace_path(), layout.trace_step())?;
    let mut csv = String::from("distance_m,x_m,y_m,temperature_k,region\n");
    for p in &trace {
        let region = p.region.map_or("solid", |k| k.name());
        writeln!(csv, "{},{},{},{},{region}", p.distance, p.x, p.y, p.temperature)?;
    }
    run.write("trace.csv", csv)?;

    let peaks: Vec<_> = local_maxima(&trace, TRACE_PEAK_PROMINENCE_K)
        .into_iter()
        .map(|i| json!({ "x_m": trace[i].x, "y_m": trace[i].y, "temperature_k": trace[i].temperature }))
        .collect();

    let mid_z = layout.chamber(ChamberKind::Interaction).map_or(0.5 * field.height(), |b| b.center()[2]);
    let k = nearest_layer(field, mid_z);
    write_slice_csv(field, k, BufWriter::new(File::create(run.path("slice.csv"))?))?;

    let summary = field.summary();
    println!(
        "peak {:.2} C, interaction-chamber differential {:.3} K, balance error {:.2e}",
        summary.peak_c,
        field.chamber(ChamberKind::Interaction).map_or(f64::NAN, |c| c.differential_k),
        summary.balance_error
    );
    run.write_json(
        "summary.json",
        &json!({
            "layout": layout.name,
            "summary": summary,
            "diagnostics": field.diagnostics,
            "slice_layer": k,
            "trace_peak_prominence_k": TRACE_PEAK_PROMINENCE_K,
            "trace_peaks": peaks,
        }),
    )
}

fn bfield_map(run: &RunDir, layout: &CellLayoutConfig, current: Option<f64>) -> Result<()> {
    let heater = layout.heater();
    let current = match current {
        Some(c) => c,
        None => {
            let field =
                solve_thermal(&layout.stack(), &layout.cutouts(), &heater, layout.ambient(), &layout.thermal_options())?;
            field.diagnostics.current
        }
    };
    let chamber = layout
        .chamber(ChamberKind::Interaction)
        .ok_or_else(|| Invalid("layout has no interaction chamber".into()))?;
    let figure = chamber_field_figure(&heater, current, &chamber, layout.field.samples_per_axis)?;
    let [w, h] = layout.footprint_mm;
    let [nx, ny] = layout.field.map_points;
    let map = field_map(&heater, current, (0.0, w * 1e-3), (0.0, h * 1e-3), layout.field.map_z_mm * 1e-3, nx, ny)?;
    let mut csv = String::from("x_m,y_m,z_m,bx_t,by_t,bz_t,abs_b_t\n");
    for s in &map {
        let [x, y, z] = s.position;
        let [bx, by, bz] = s.b;
        writeln!(csv, "{x},{y},{z},{bx},{by},{bz},{}", s.magnitude())?;
    }
    run.write("field_map.csv", csv)?;
    println!(
        "interaction chamber: max |B| {:.3e} T, centre |B| {:.3e} T, suppression x{:.1}",
        figure.max_abs_b, figure.center_abs_b, figure.suppression_ratio
    );
    run.write_json("chamber_field.json", &json!({ "layout": layout.name, "figure": figure }))
}

fn acceptance(run: &RunDir, ids: &[u32], options: AcceptanceOptions) -> Result<()> {
    let mut table = String::new();
    let mut outcomes = Vec::new();
    for &id in ids {
        let outcome = run_criterion(id, &options)?;
        println!("{}", outcome.line());
        writeln!(table, "{}", outcome.line())?;
        outcomes.push(outcome);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    let footer = format!("{passed} of {} criteria pass", outcomes.len());
    println!("{footer}");
    writeln!(table, "{footer}")?;
    run.write("acceptance.txt", table)?;
    run.write_json("acceptance.json", &json!({ "seed": options.seed, "passed": passed, "outcomes": outcomes }))
}
