//! Plain-text exports of a [`ThermalField`].
//!
//! The flat grid format is line oriented: a `# spincell thermal grid v1`
//! header, `key value...` lines for the geometry, then a `temperature_k` block
//! and a `region` block, each holding `nz · ny` rows of `nx` whitespace
//! separated values (x fastest, then y, then z from the bottom), and a final
//! `end` line. Floats are written in shortest round-trip form.

use std::io::{BufRead, Write};

use super::{Box3, ChamberCutout, ChamberKind, ThermalField};
use crate::{Error, Result};

const HEADER: &str = "# spincell thermal grid v1";

pub fn write_grid_text<W: Write>(field: &ThermalField, mut w: W) -> Result<()> {
    writeln!(w, "{HEADER}")?;
    writeln!(w, "nx {}", field.nx)?;
    writeln!(w, "ny {}", field.ny)?;
    writeln!(w, "nz {}", field.nz)?;
    writeln!(w, "dx_m {}", field.dx)?;
    writeln!(w, "dy_m {}", field.dy)?;
    let faces: Vec<String> = field.z_faces.iter().map(|z| z.to_string()).collect();
    writeln!(w, "z_faces_m {}", faces.join(" "))?;
    writeln!(w, "ambient_k {}", field.ambient)?;
    for c in &field.cutouts {
        let (o, e) = (c.region.origin, c.region.extent);
        writeln!(w, "cutout {} {} {} {} {} {} {}", c.name.name(), o[0], o[1], o[2], e[0], e[1], e[2])?;
    }
    writeln!(w, "temperature_k")?;
    for row in field.temperature.chunks(field.nx) {
        let s: Vec<String> = row.iter().map(|t| t.to_string()).collect();
        writeln!(w, "{}", s.join(" "))?;
    }
    writeln!(w, "region")?;
    for row in field.region.chunks(field.nx) {
        let s: Vec<String> = row.iter().map(|t| t.to_string()).collect();
        writeln!(w, "{}", s.join(" "))?;
    }
    writeln!(w, "end")?;
    Ok(())
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::config(format!("thermal grid line {line}: {msg}"))
}

fn parse<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| bad(line, format!("cannot parse {s:?}")))
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    number: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<(usize, String)> {
        self.number += 1;
        let line = self.inner.next().ok_or_else(|| Error::config("thermal grid ended early"))??;
        Ok((self.number, line))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<String>)> {
        let (n, l) = self.next()?;
        let mut parts = l.split_whitespace().map(str::to_string);
        match parts.next() {
            Some(k) if k == key => Ok((n, parts.collect())),
            _ => Err(bad(n, format!("expected {key}"))),
        }
    }

    fn value<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        match self.keyed(key)? {
            (n, v) if v.len() == 1 => parse(n, &v[0]),
            (n, _) => Err(bad(n, format!("{key} takes one value"))),
        }
    }

    fn block<T: std::str::FromStr>(&mut self, rows: usize, nx: usize) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(rows * nx);
        for _ in 0..rows {
            let (n, l) = self.next()?;
            let before = out.len();
            for s in l.split_whitespace() {
                out.push(parse(n, s)?);
            }
            if out.len() - before != nx {
                return Err(bad(n, format!("expected {nx} values, found {}", out.len() - before)));
            }
        }
        Ok(out)
    }

    fn expect(&mut self, word: &str) -> Result<()> {
        let (n, l) = self.next()?;
        if l.trim() != word {
            return Err(bad(n, format!("expected {word}")));
        }
        Ok(())
    }
}

/// Reads the flat grid format. Solver diagnostics are not stored and come
/// back as defaults.
pub fn read_grid_text<R: BufRead>(r: R) -> Result<ThermalField> {
    let mut lines = Lines { inner: r.lines(), number: 0 };
    lines.expect(HEADER)?;
    let nx: usize = lines.value("nx")?;
    let ny: usize = lines.value("ny")?;
    let nz: usize = lines.value("nz")?;
    let dx: f64 = lines.value("dx_m")?;
    let dy: f64 = lines.value("dy_m")?;
    let (n, v) = lines.keyed("z_faces_m")?;
    let z_faces = v.iter().map(|s| parse(n, s)).collect::<Result<Vec<f64>>>()?;
    if nx == 0 || ny == 0 || nz == 0 || z_faces.len() != nz + 1 {
        return Err(bad(n, "inconsistent grid dimensions"));
    }
    let ambient: f64 = lines.value("ambient_k")?;
    let mut cutouts = Vec::new();
    loop {
        let (n, l) = lines.next()?;
        if l.trim() == "temperature_k" {
            break;
        }
        let parts: Vec<&str> = l.split_whitespace().collect();
        if parts.len() != 8 || parts[0] != "cutout" {
            return Err(bad(n, "expected a cutout line or temperature_k"));
        }
        let name = match parts[1] {
            "interaction" => ChamberKind::Interaction,
            "storage" => ChamberKind::Storage,
            "channel" => ChamberKind::Channel,
            other => return Err(bad(n, format!("unknown chamber {other:?}"))),
        };
        let v = parts[2..].iter().map(|s| parse(n, s)).collect::<Result<Vec<f64>>>()?;
        cutouts.push(ChamberCutout { name, region: Box3 { origin: [v[0], v[1], v[2]], extent: [v[3], v[4], v[5]] } });
    }
    let temperature: Vec<f64> = lines.block(ny * nz, nx)?;
    lines.expect("region")?;
    let region: Vec<u8> = lines.block(ny * nz, nx)?;
    if region.iter().any(|r| *r as usize > cutouts.len()) {
        return Err(Error::config("thermal grid region index exceeds the cutout list"));
    }
    lines.expect("end")?;
    Ok(ThermalField {
        nx,
        ny,
        nz,
        dx,
        dy,
        z_faces,
        temperature,
        region,
        cutouts,
        ambient,
        diagnostics: Default::default(),
    })
}

/// One horizontal layer `k` as CSV: x_m, y_m, z_m, temperature_k, region.
pub fn write_slice_csv<W: Write>(field: &ThermalField, k: usize, w: W) -> Result<()> {
    if k >= field.nz {
        return Err(Error::domain(format!("slice {k} out of range (nz = {})", field.nz)));
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x_m", "y_m", "z_m", "temperature_k", "region"])?;
    let z = 0.5 * (field.z_faces[k] + field.z_faces[k + 1]);
    for j in 0..field.ny {
        for i in 0..field.nx {
            let a = field.index(i, j, k);
            let region = match field.region[a] {
                0 => "solid",
                r => field.cutouts[r as usize - 1].name.name(),
            };
            out.write_record([
                ((i as f64 + 0.5) * field.dx).to_string(),
                ((j as f64 + 0.5) * field.dy).to_string(),
                z.to_string(),
                field.temperature[a].to_string(),
                region.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
