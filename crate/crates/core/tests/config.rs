use std::path::PathBuf;

use spincell_core::cell::CellLayoutConfig;
use spincell_core::config::{reference, CellConfig, ChamberEntry};
use spincell_core::Error;

fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

#[test]
fn shipped_files_match_embedded_references() {
    let dir = configs_dir();
    assert_eq!(CellConfig::load(&dir.join("wafer_cell.json")).unwrap(), reference::wafer_cell());
    assert_eq!(CellConfig::load(&dir.join("paraffin_cell.json")).unwrap(), reference::paraffin_cell());
    assert_eq!(
        CellConfig::load(&dir.join("spherical_glass_cell.json")).unwrap(),
        reference::spherical_glass_cell()
    );
    assert_eq!(CellLayoutConfig::load(dir.join("cell_layout.json")).unwrap(), reference::cell_layout());
}

#[test]
fn spherical_reference_matches_fill_description() {
    let cell = reference::spherical_glass_cell();
    assert!(matches!(cell.chamber, ChamberEntry::Spherical { radius_m, .. } if radius_m == 0.01));
    let torr = 101_325.0 / 760.0;
    let fill = |species: &str| {
        cell.buffer_gas.iter().find(|g| g.species == species).map(|g| g.fill_pressure_pa / torr).unwrap()
    };
    assert!((fill("Ne") - 300.0).abs() < 0.1);
    assert!((fill("N2") - 50.0).abs() < 0.1);
}

#[test]
fn validation_errors_are_classified() {
    let text = reference::WAFER_CELL.replacen("\"fill_pressure_pa\": ", "\"fill_pressure_pa\": -", 1);
    assert!(CellConfig::from_json_str(&text, None).unwrap_err().is_validation());

    let mut cell = reference::wafer_cell();
    cell.pump.power_w = f64::NAN;
    assert!(cell.validate().unwrap_err().is_validation());

    let missing = CellConfig::load(&configs_dir().join("no_such_file.json")).unwrap_err();
    assert!(matches!(missing, Error::Io(_)));
}

#[test]
fn layout_rejects_track_outside_footprint() {
    let mut layout = reference::cell_layout();
    layout.heater.centerline_mm[0][0] = 25.0;
    assert!(CellLayoutConfig::from_json_str(&layout.to_json_string().unwrap()).is_err());
}

#[test]
fn layout_rejects_resistance_far_from_target() {
    let mut layout = reference::cell_layout();
    layout.heater.target_resistance_ohm = 700.0;
    let err = CellLayoutConfig::from_json_str(&layout.to_json_string().unwrap()).unwrap_err();
    assert!(err.to_string().contains("target"), "{err}");
}

#[test]
fn layout_rejects_unknown_keys() {
    let text = reference::CELL_LAYOUT.replacen("\"footprint_mm\"", "\"footprint\"", 1);
    assert!(CellLayoutConfig::from_json_str(&text).is_err());
}
