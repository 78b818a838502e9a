use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use nadir_core::{NadirTable, Trajectory};
use serde::Serialize;

/// Write via a sibling temp file and rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "output path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })
}

pub fn to_json<T: Serialize>(value: &T) -> io::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(io::Error::other)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_with_units(units: &str) -> csv::Writer<Vec<u8>> {
    let mut buf = Vec::new();
    writeln!(buf, "# {units}").unwrap();
    csv::Writer::from_writer(buf)
}

fn finish(writer: csv::Writer<Vec<u8>>) -> io::Result<Vec<u8>> {
    writer.into_inner().map_err(|e| io::Error::other(e.to_string()))
}

/// `table.csv`: header of grid times, then one row of `F_it` per bus.
pub fn table_csv(table: &NadirTable) -> io::Result<Vec<u8>> {
    let mut w = csv_with_units("t in s; F in pu");
    let header = std::iter::once("bus".to_string()).chain(table.times().iter().map(f64::to_string));
    w.write_record(header)?;
    for i in 0..table.n() {
        let row = std::iter::once(i.to_string()).chain(table.row(i).iter().map(f64::to_string));
        w.write_record(row)?;
    }
    finish(w)
}

/// `trajectory.csv`: `t, omega_bus_0 .. omega_bus_{n-1}, coi`.
pub fn trajectory_csv(traj: &Trajectory) -> io::Result<Vec<u8>> {
    let mut w = csv_with_units("t in s; omega and coi in pu");
    let header = std::iter::once("t".to_string())
        .chain((0..traj.n()).map(|i| format!("omega_bus_{i}")))
        .chain(std::iter::once("coi".to_string()));
    w.write_record(header)?;
    for (j, t) in traj.times().iter().enumerate() {
        let coi = traj.coi().map(|c| c[j].to_string()).unwrap_or_default();
        let column = traj.omega().column(j);
        let row = std::iter::once(t.to_string())
            .chain(column.iter().map(f64::to_string))
            .chain(std::iter::once(coi));
        w.write_record(row)?;
    }
    finish(w)
}
