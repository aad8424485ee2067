use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use super::{RunOutcome, ScenarioError, ScenarioResult};
use crate::grid::make_grid;
use crate::spectra::spectrum_csv;
use crate::wavefunction::WaveFunction2D;

/// Leading bytes of every snapshot file.
pub const SNAPSHOT_MAGIC: [u8; 8] = *b"CFGQM1\0\0";

fn output_error(path: &Path) -> impl FnOnce(io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Output { path: path.to_path_buf(), source }
}

fn input_error(path: &Path) -> impl FnOnce(io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Input { path: path.to_path_buf(), source }
}

/// Little-endian dump: magic, `n_x`, `n_v` (u64), x and v bounds, time,
/// then interleaved re/im amplitudes in row-major `(i, j)` order.
pub fn write_snapshot(path: &Path, wf: &WaveFunction2D, t: f64) -> ScenarioResult<()> {
    let g = wf.grid();
    let mut buf = Vec::with_capacity(64 + 16 * g.len());
    buf.extend_from_slice(&SNAPSHOT_MAGIC);
    buf.extend_from_slice(&(g.n_x() as u64).to_le_bytes());
    buf.extend_from_slice(&(g.n_v() as u64).to_le_bytes());
    for b in [g.x.min, g.x.max, g.v.min, g.v.max, t] {
        buf.extend_from_slice(&b.to_le_bytes());
    }
    for z in wf.amps() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(output_error(path))?;
    file.write_all(&buf).map_err(output_error(path))
}

fn malformed(msg: impl Into<String>) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.into())
}

/// Inverse of [`write_snapshot`]; returns the state and its time stamp.
pub fn read_snapshot(path: &Path) -> ScenarioResult<(WaveFunction2D, f64)> {
    let mut bytes = Vec::new();
    fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(input_error(path))?;
    let parse = || -> io::Result<(WaveFunction2D, f64)> {
        let mut words = bytes.get(8..).ok_or_else(|| malformed("truncated header"))?.chunks_exact(8);
        if bytes[..8] != SNAPSHOT_MAGIC {
            return Err(malformed("not a snapshot file"));
        }
        let mut next = || words.next().map(|w| <[u8; 8]>::try_from(w).expect("chunk of 8")).ok_or_else(|| malformed("truncated"));
        let n_x = u64::from_le_bytes(next()?) as usize;
        let n_v = u64::from_le_bytes(next()?) as usize;
        let mut header = [0.0; 5];
        for h in &mut header {
            *h = f64::from_le_bytes(next()?);
        }
        let expected = 8 + 16 + 40 + 16 * n_x.saturating_mul(n_v);
        if bytes.len() != expected {
            return Err(malformed(format!("expected {expected} bytes, found {}", bytes.len())));
        }
        let grid = make_grid(header[0], header[1], n_x, header[2], header[3], n_v).map_err(|e| malformed(e.to_string()))?;
        let mut amps = Vec::with_capacity(n_x * n_v);
        for _ in 0..n_x * n_v {
            let re = f64::from_le_bytes(next()?);
            let im = f64::from_le_bytes(next()?);
            amps.push(Complex64::new(re, im));
        }
        let wf = WaveFunction2D::from_amps(grid, amps).map_err(|e| malformed(e.to_string()))?;
        Ok((wf, header[4]))
    };
    parse().map_err(input_error(path))
}

fn write_text(path: &Path, text: &str) -> ScenarioResult<()> {
    fs::write(path, text).map_err(output_error(path))
}

/// Writes every artefact of `outcome` into `dir` and lists the file names in the report.
pub fn write_outputs(outcome: &mut RunOutcome, dir: &Path) -> ScenarioResult<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(output_error(dir))?;
    let name = &outcome.config.name;
    let mut written = Vec::new();

    let series_path = dir.join(outcome.config.series_file());
    write_text(&series_path, &outcome.series.to_csv())?;
    written.push(series_path);
    if let Some(companion) = &outcome.companion {
        let path = dir.join(format!("{name}_basic_qm.csv"));
        write_text(&path, &companion.to_csv())?;
        written.push(path);
    }
    for (k, (t, wf)) in outcome.snapshots.iter().enumerate() {
        let path = dir.join(format!("{name}_snap_{k:04}.bin"));
        write_snapshot(&path, wf, *t)?;
        written.push(path);
    }
    if let Some(eigenvalues) = &outcome.spectrum {
        let path = dir.join(format!("{name}_spectrum.csv"));
        write_text(&path, &spectrum_csv(eigenvalues))?;
        written.push(path);
    }
    let report_path = dir.join(format!("{name}_report.json"));
    if outcome.config.outputs.report {
        written.push(report_path.clone());
    }
    outcome.report.files =
        written.iter().filter_map(|p| p.file_name()).map(|f| f.to_string_lossy().into_owned()).collect();
    if outcome.config.outputs.report {
        let json = serde_json::to_string_pretty(&outcome.report)
            .map_err(|e| ScenarioError::Numeric(format!("report serialization: {e}")))?;
        write_text(&report_path, &json)?;
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wavefunction::{gaussian_packet, Packet};

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let g = make_grid(-8.0, 8.0, 64, -6.0, 8.0, 64).unwrap();
        let wf = gaussian_packet(&g, &Packet::new(0.0, 1.0, 1.0, 1.0, 0.2), 1.0).unwrap();
        let path = dir.path().join("s.bin");
        write_snapshot(&path, &wf, 0.125).unwrap();
        let bytes = fs::read(&path).unwrap();
        assert_eq!(&bytes[..8], b"CFGQM1\0\0");
        assert_eq!(bytes.len(), 64 + 16 * 64 * 64);
        let (back, t) = read_snapshot(&path).unwrap();
        assert_eq!(t, 0.125);
        assert_eq!(back, wf);
    }

    #[test]
    fn corrupt_snapshots_are_input_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.bin");
        fs::write(&path, b"CFGQM1\0\0\x01").unwrap();
        let err = read_snapshot(&path).unwrap_err();
        assert!(matches!(err, ScenarioError::Input { .. }));
        assert_eq!(err.exit_code(), 1);
        assert!(matches!(read_snapshot(&dir.path().join("missing.bin")), Err(ScenarioError::Input { .. })));
    }
}
