//! Thermal model of the glass/Si/glass cell stack with Pt heater tracks, and
//! Biot–Savart stray fields of the heater.

mod biot;
mod export;
mod grid;
mod heater;
mod layout;
mod pcg;
mod stack;
mod thermal;
mod trace;

pub use biot::{chamber_field_figure, field_map, heater_b_field, segment_field, ChamberFieldSummary, FieldSample};
pub use export::{read_grid_text, write_grid_text, write_slice_csv};
pub use heater::{Drive, HeaterLayout, Pin, Surface, Track, TrackRole};
pub use layout::{
    CellLayoutConfig, CutoutEntry, DriveEntry, FieldFigureEntry, HeaterEntry, LayerEntry, PinEntry, SolverEntry, TraceEntry,
};
pub use stack::{Box3, ChamberCutout, ChamberKind, Layer, LayerStack, Material};
pub use thermal::{solve_thermal, ChamberStats, SolveDiagnostics, ThermalField, ThermalOptions, ThermalSummary};
pub use trace::{line_trace, local_maxima, TracePoint};
