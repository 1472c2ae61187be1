use std::collections::BTreeMap;

use spincell_core::config::{reference, CellConfig};
use spincell_core::scans::{
    evaluate_point, minimum_location, relative_narrowing, run_scan, run_scan_with_workers, write_scan, ScanAxis,
    ScanConfig, ScanRecord,
};
use spincell_core::spectro::{select_model, synthesize_spectrum, NoiseModel};
use spincell_core::spin::{rate_breakdown, steady_state};

fn small_scan(values: Vec<f64>, repeats: usize) -> ScanConfig {
    ScanConfig::new(ScanAxis::PumpPower, values, reference::wafer_cell(), 7, repeats).unwrap()
}

fn json(r: &ScanRecord) -> String {
    serde_json::to_string(r).unwrap()
}

#[test]
fn single_point_scan_matches_direct_synthesis_and_fit() {
    let config = small_scan(vec![5e-4], 1);
    let result = run_scan(&config).unwrap();
    assert_eq!(result.records.len(), 1);
    let r = &result.records[0];

    let cell = config.base.with_axis_value(ScanAxis::PumpPower, 5e-4);
    let p = cell.spin_params().unwrap();
    let model = rate_breakdown(&p, &steady_state(&p).unwrap()).unwrap().fwhm_hz();
    let plan = cell.sweep_spec().plan(p.field.larmor_frequency, model);
    let noise = NoiseModel { seed: config.point_seed(5e-4, 0), ..cell.noise_model() };
    let spectrum = synthesize_spectrum(&p, &plan, &noise).unwrap();
    let fit = select_model(&spectrum).unwrap();
    assert_eq!(r.fwhm_hz, fit.chosen().dominant().fwhm);
    assert_eq!(r.amplitude, fit.chosen().dominant().amplitude);
    assert_eq!(r.model_fwhm_hz, model);
}

fn file_bytes(config: &ScanConfig, workers: usize) -> Vec<Vec<u8>> {
    let dir = tempfile::tempdir().unwrap();
    let files = write_scan(&run_scan_with_workers(config, Some(workers)).unwrap(), dir.path()).unwrap();
    files.all().iter().map(|p| std::fs::read(p).unwrap()).collect()
}

#[test]
fn result_files_are_reproducible_across_worker_counts() {
    let config = small_scan(vec![1e-5, 3e-4, 2e-3, 1e-2], 2);
    assert_eq!(file_bytes(&config, 1), file_bytes(&config, 3));
}

#[test]
fn permuting_values_permutes_records() {
    let values = vec![1e-5, 3e-4, 2e-3, 1e-2];
    let forward = run_scan(&small_scan(values.clone(), 2)).unwrap();
    let mut shuffled = values;
    shuffled.swap(0, 2);
    shuffled.swap(1, 3);
    let permuted = run_scan(&small_scan(shuffled, 2)).unwrap();
    let key = |r: &ScanRecord| (r.axis_value.to_bits(), r.repeat);
    let a: BTreeMap<_, _> = forward.records.iter().map(|r| (key(r), json(r))).collect();
    let b: BTreeMap<_, _> = permuted.records.iter().map(|r| (key(r), json(r))).collect();
    assert_eq!(a, b);
}

#[test]
fn records_rederive_from_stored_snapshot() {
    let dir = tempfile::tempdir().unwrap();
    let files = write_scan(&run_scan(&small_scan(vec![1e-4, 2e-3], 2)).unwrap(), dir.path()).unwrap();
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(&files.metadata).unwrap()).unwrap();
    let base: CellConfig = serde_json::from_value(meta["config"].clone()).unwrap();
    let axis: ScanAxis = serde_json::from_value(meta["axis"].clone()).unwrap();
    let config = ScanConfig::new(
        axis,
        serde_json::from_value(meta["values"].clone()).unwrap(),
        base,
        meta["master_seed"].as_u64().unwrap(),
        meta["repeats"].as_u64().unwrap() as usize,
    )
    .unwrap();
    let mut reader = csv::Reader::from_path(&files.records).unwrap();
    let stored: Vec<ScanRecord> = reader.deserialize().map(Result::unwrap).collect();
    assert_eq!(stored.len(), 4);
    for r in &stored {
        assert_eq!(json(r), json(&evaluate_point(&config, r.axis_value, r.repeat)));
    }
}

#[test]
fn narrowing_of_reference_scan_matches_recomputation() {
    let mut cell = reference::wafer_cell();
    cell.temperature_k = 383.15;
    let config = cell.scan_config(ScanAxis::PumpPower, 11).unwrap();
    let result = run_scan(&config).unwrap();
    let rn = relative_narrowing(&result).unwrap();
    assert!(rn > 0.0 && rn < 1.0, "{rn}");

    let ok: Vec<&ScanRecord> = result.records.iter().filter(|r| r.ok).collect();
    let reference = ok
        .iter()
        .min_by(|a, b| (a.axis_value / 1e-4).ln().abs().total_cmp(&(b.axis_value / 1e-4).ln().abs()))
        .unwrap();
    let min = ok
        .iter()
        .filter(|r| r.axis_value >= reference.axis_value)
        .map(|r| r.fwhm_hz)
        .fold(f64::INFINITY, f64::min);
    assert!((rn - (reference.fwhm_hz - min) / reference.fwhm_hz).abs() < 1e-12);

    let m = minimum_location(&result).unwrap();
    assert!(m.interior && m.location > 3e-4 && m.location < 6e-3, "{m:?}");
}
