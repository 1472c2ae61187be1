use std::sync::OnceLock;

use proptest::prelude::*;

use spincell_core::cell::{
    chamber_field_figure, heater_b_field, line_trace, local_maxima, read_grid_text, segment_field, solve_thermal,
    write_grid_text, write_slice_csv, CellLayoutConfig, ChamberKind, Drive, HeaterLayout, Surface, ThermalField,
    Track, TrackRole,
};
use spincell_core::config::reference;

fn layout() -> CellLayoutConfig {
    reference::cell_layout()
}

fn reference_field() -> &'static ThermalField {
    static FIELD: OnceLock<ThermalField> = OnceLock::new();
    FIELD.get_or_init(|| {
        let l = layout();
        solve_thermal(&l.stack(), &l.cutouts(), &l.heater(), l.ambient(), &l.thermal_options()).unwrap()
    })
}

fn track(vertices: Vec<[f64; 3]>) -> Track {
    Track {
        vertices,
        width: 1e-4,
        thickness: 1e-7,
        resistivity: 1e-7,
        temp_coefficient: 0.0,
        role: TrackRole::Go,
        surface: Surface::Top,
    }
}

fn heater(tracks: Vec<Track>) -> HeaterLayout {
    HeaterLayout { tracks, pins: Vec::new(), drive: Drive::Dc { volts: 1.0 }, reference_temperature: 293.15 }
}

fn norm(b: [f64; 3]) -> f64 {
    b.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[test]
fn heater_resistance_matches_target() {
    let r = layout().resistance_at_20c();
    assert!((r / 573.0 - 1.0).abs() < 0.05, "{r}");
}

#[test]
fn constant_field_gives_constant_trace() {
    let l = layout();
    let field = ThermalField::uniform(&l.stack(), &l.cutouts(), 0.25e-3, 301.5).unwrap();
    let trace = line_trace(&field, &[[0.0, 0.0], [20.2e-3, 10.2e-3], [0.0, 10.2e-3]], 1e-4).unwrap();
    assert!(trace.len() > 100);
    assert!(trace.iter().all(|p| (p.temperature - 301.5).abs() < 1e-12));
}

#[test]
fn reference_solve_has_three_peaks_near_anchor() {
    let l = layout();
    let trace = line_trace(reference_field(), &l.trace_path(), l.trace_step()).unwrap();
    let peaks = local_maxima(&trace, 0.2);
    assert_eq!(peaks.len(), 3, "{peaks:?}");
    for i in peaks {
        let c = trace[i].temperature - 273.15;
        assert!((c - 78.5).abs() < 5.0, "{c}");
    }
}

#[test]
fn interaction_chamber_is_hotter_than_storage() {
    let f = reference_field();
    let hot = f.chamber(ChamberKind::Interaction).unwrap();
    let cold = f.chamber(ChamberKind::Storage).unwrap();
    assert!(hot.mean_k > cold.mean_k);
}

#[test]
fn minimum_temperature_lies_on_the_boundary() {
    let f = reference_field();
    let (mut best, mut at) = (f64::INFINITY, (0, 0, 0));
    for k in 0..f.nz {
        for j in 0..f.ny {
            for i in 0..f.nx {
                if f.at(i, j, k) < best {
                    best = f.at(i, j, k);
                    at = (i, j, k);
                }
            }
        }
    }
    let (i, j, k) = at;
    assert!(i == 0 || j == 0 || k == 0 || i + 1 == f.nx || j + 1 == f.ny || k + 1 == f.nz, "{at:?}");
    assert!(best > f.ambient);
}

#[test]
fn zero_drive_stays_at_ambient() {
    let l = layout();
    let mut h = l.heater();
    h.drive = Drive::Ac { volts_rms: 0.0, frequency_hz: 1e6 };
    let f = solve_thermal(&l.stack(), &l.cutouts(), &h, l.ambient(), &l.thermal_options()).unwrap();
    assert!(f.temperature.iter().all(|t| (t - l.ambient()).abs() < 1e-9));
}

#[test]
fn grid_text_round_trip() {
    let f = reference_field();
    let mut text = Vec::new();
    write_grid_text(f, &mut text).unwrap();
    let back = read_grid_text(text.as_slice()).unwrap();
    assert_eq!((back.nx, back.ny, back.nz), (f.nx, f.ny, f.nz));
    assert_eq!((back.dx, back.dy), (f.dx, f.dy));
    assert_eq!(back.z_faces, f.z_faces);
    assert_eq!(back.temperature, f.temperature);
    assert_eq!(back.region, f.region);
    assert_eq!(back.cutouts, f.cutouts);
    assert_eq!(back.ambient, f.ambient);

    let mut csv = Vec::new();
    write_slice_csv(f, 3, &mut csv).unwrap();
    assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 1 + f.nx * f.ny);
}

#[test]
fn paired_layout_suppresses_chamber_field() {
    let l = layout();
    let chamber = l.chamber(ChamberKind::Interaction).unwrap();
    let current = reference_field().diagnostics.current;
    let one = chamber_field_figure(&l.heater(), current, &chamber, 5).unwrap();
    assert!(one.suppression_ratio >= 5.0, "{}", one.suppression_ratio);
    let two = chamber_field_figure(&l.heater(), 2.0 * current, &chamber, 5).unwrap();
    assert!((two.max_abs_b / one.max_abs_b - 2.0).abs() < 1e-14);
    let zero = chamber_field_figure(&l.heater(), 0.0, &chamber, 5).unwrap();
    assert_eq!(zero.max_abs_b, 0.0);
}

#[test]
fn mirror_symmetry_on_the_symmetry_plane() {
    // A closed loop mirrored in x = 0 maps onto itself with reversed
    // circulation, so the field normal to that plane vanishes on it.
    let ring = track(vec![[-3e-3, -2e-3, 0.0], [3e-3, -2e-3, 0.0], [3e-3, 2e-3, 0.0], [-3e-3, 2e-3, 0.0], [-3e-3, -2e-3, 0.0]]);
    // An open path plus its mirror image: the in-plane components cancel.
    let path = vec![[1e-3, -4e-3, 0.5e-3], [2e-3, 0.0, 0.5e-3], [1.5e-3, 3e-3, 0.2e-3]];
    let mirrored = path.iter().map(|v| [-v[0], v[1], v[2]]).collect();
    let ring = heater(vec![ring]);
    let pair = heater(vec![track(path), track(mirrored)]);
    for p in [[0.0, 0.0, 1e-3], [0.0, 1.3e-3, -0.7e-3], [0.0, -5e-3, 2e-3]] {
        let b = heater_b_field(&ring, 1.0, p).unwrap();
        assert!(b[0].abs() <= 1e-12 * norm(b), "{b:?}");
        let b = heater_b_field(&pair, 1.0, p).unwrap();
        assert!(b[1].abs().max(b[2].abs()) <= 1e-12 * norm(b), "{b:?}");
    }
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    [-1e-2..1e-2f64, -1e-2..1e-2f64, -1e-2..1e-2f64]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn superposition_is_exact(a in point(), b in point(), c in point(), p in point(), i in -2.0..2.0f64) {
        let t1 = track(vec![a, b]);
        let t2 = track(vec![b, c]);
        let fields = (
            heater_b_field(&heater(vec![t1.clone(), t2.clone()]), i, p),
            heater_b_field(&heater(vec![t1]), i, p),
            heater_b_field(&heater(vec![t2]), i, p),
        );
        if let (Ok(both), Ok(f1), Ok(f2)) = fields {
            for k in 0..3 {
                prop_assert!((both[k] - f1[k] - f2[k]).abs() <= 1e-12 * norm(both).max(f64::MIN_POSITIVE));
            }
        }
    }

    #[test]
    fn segment_field_is_orthogonal_to_the_segment(a in point(), b in point(), p in point()) {
        if let Ok(f) = segment_field(a, b, 1.0, p) {
            let dl = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let dot: f64 = (0..3).map(|k| f[k] * dl[k]).sum();
            prop_assert!(dot.abs() <= 1e-9 * norm(f) * norm(dl));
        }
    }
}
