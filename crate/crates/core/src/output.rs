//! Output files: the ledger CSV (17 significant digits), the verdict
//! list, and flat binary checkpoints. All writes are atomic
//! (write-then-rename) so partially written files never appear.

use crate::error::{Result, SimError};
use crate::field::{Boundary, ScalarField, VectorField};
use crate::grid::Grid;
use crate::ledger::{LedgerRow, Verdict, CSV_HEADER};
use crate::stepper::FluidState;
use std::io::Write;
use std::path::Path;

/// 17-significant-digit formatting; round-trips any finite f64 exactly.
pub fn format_g17(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write bytes atomically: temporary file in the same directory, then
/// rename over the target.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .ok_or_else(|| SimError::Io(format!("no parent directory for {}", path.display())))?;
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".into())
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Ledger CSV: header plus one row per output time.
pub fn write_ledger_csv(path: &Path, rows: &[LedgerRow]) -> Result<()> {
    let mut s = String::with_capacity(64 + rows.len() * 400);
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in rows {
        let vals = r.values();
        let mut first = true;
        for v in vals {
            if !first {
                s.push(',');
            }
            s.push_str(&format_g17(v));
            first = false;
        }
        s.push('\n');
    }
    atomic_write(path, s.as_bytes())
}

/// Parse a ledger CSV back (round-trip checks, downstream analysis).
pub fn read_ledger_csv(path: &Path) -> Result<Vec<LedgerRow>> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => {
            return Err(SimError::Input(format!(
                "unexpected ledger header: {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<f64> = line
            .split(',')
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| SimError::Input(format!("bad ledger value '{v}'")))
            })
            .collect::<Result<_>>()?;
        rows.push(LedgerRow::from_values(&vals)?);
    }
    Ok(rows)
}

/// Verdict file: one `name=holds margin first_violation_t` line each.
pub fn write_verdicts(path: &Path, verdicts: &[Verdict]) -> Result<()> {
    let mut s = String::new();
    for v in verdicts {
        let fv = match v.first_violation_t {
            Some(t) => format_g17(t),
            None => "none".into(),
        };
        s.push_str(&format!(
            "{}={} {} {}\n",
            v.name,
            v.holds,
            format_g17(v.margin),
            fv
        ));
    }
    atomic_write(path, s.as_bytes())
}

fn push_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn push_slice(buf: &mut Vec<u8>, data: &[f64]) {
    for v in data {
        push_f64(buf, *v);
    }
}

/// Checkpoint layout: header (dim: u32; cells: u32 per axis; lengths:
/// f64 per axis; time: f64), then rho, the velocity components in axis
/// order, theta and P, each in axis-major (C) order as little-endian
/// 8-byte floats.
pub fn write_checkpoint(path: &Path, state: &FluidState) -> Result<()> {
    let grid = state.rho.grid;
    let mut buf = Vec::new();
    push_u32(&mut buf, grid.dim as u32);
    for a in 0..grid.dim {
        push_u32(&mut buf, grid.cells[a] as u32);
    }
    for a in 0..grid.dim {
        push_f64(&mut buf, grid.lengths[a]);
    }
    push_f64(&mut buf, state.t);
    push_slice(&mut buf, &state.rho.lat.data);
    for a in 0..grid.dim {
        push_slice(&mut buf, &state.u.comps[a].data);
    }
    push_slice(&mut buf, &state.theta.lat.data);
    push_slice(&mut buf, &state.p.lat.data);
    atomic_write(path, &buf)
}

/// Inverse of [`write_checkpoint`].
pub fn read_checkpoint(path: &Path) -> Result<FluidState> {
    let bytes = std::fs::read(path)?;
    let mut off = 0usize;
    let take_u32 = |off: &mut usize| -> Result<u32> {
        let end = *off + 4;
        if end > bytes.len() {
            return Err(SimError::Input("checkpoint truncated".into()));
        }
        let v = u32::from_le_bytes(bytes[*off..end].try_into().unwrap());
        *off = end;
        Ok(v)
    };
    let take_f64 = |off: &mut usize| -> Result<f64> {
        let end = *off + 8;
        if end > bytes.len() {
            return Err(SimError::Input("checkpoint truncated".into()));
        }
        let v = f64::from_le_bytes(bytes[*off..end].try_into().unwrap());
        *off = end;
        Ok(v)
    };
    let dim = take_u32(&mut off)? as usize;
    if dim != 2 && dim != 3 {
        return Err(SimError::Input(format!("checkpoint has bad dim {dim}")));
    }
    let mut cells = [1usize; 3];
    for a in cells.iter_mut().take(dim) {
        *a = take_u32(&mut off)? as usize;
    }
    let mut lengths = [1.0f64; 3];
    for a in lengths.iter_mut().take(dim) {
        *a = take_f64(&mut off)?;
    }
    let t = take_f64(&mut off)?;
    let grid = Grid::new(dim, cells, lengths)?;
    let read_field = |len: usize, off: &mut usize| -> Result<Vec<f64>> {
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            v.push(take_f64(off)?);
        }
        Ok(v)
    };
    let mut rho = ScalarField::zeros(grid, Boundary::Free);
    rho.lat.data = read_field(rho.lat.len(), &mut off)?;
    let mut u = VectorField::zeros(grid);
    for a in 0..dim {
        let n = u.comps[a].len();
        u.comps[a].data = read_field(n, &mut off)?;
    }
    let mut theta = ScalarField::zeros(grid, Boundary::DirichletZero);
    theta.lat.data = read_field(theta.lat.len(), &mut off)?;
    let mut p = ScalarField::zeros(grid, Boundary::Free);
    p.lat.data = read_field(p.lat.len(), &mut off)?;
    if off != bytes.len() {
        return Err(SimError::Input(format!(
            "checkpoint has {} trailing bytes",
            bytes.len() - off
        )));
    }
    Ok(FluidState {
        t,
        rho,
        u,
        theta,
        p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ledger::LedgerRow;

    fn tmpdir() -> std::path::PathBuf {
        let d = std::env::temp_dir().join(format!(
            "benard-output-test-{}-{:?}",
            std::process::id(),
            std::thread::current().id()
        ));
        std::fs::create_dir_all(&d).unwrap();
        d
    }

    fn sample_row(t: f64) -> LedgerRow {
        let mut vals = [0.0f64; 18];
        vals[0] = t;
        for (i, v) in vals.iter_mut().enumerate().skip(1) {
            *v = (i as f64 * 0.37 + t).sin() * 1e3;
        }
        LedgerRow::from_values(&vals).unwrap()
    }

    #[test]
    fn empty_ledger_is_header_only() {
        let d = tmpdir();
        let p = d.join("empty.csv");
        write_ledger_csv(&p, &[]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.starts_with("t,E,D,B,"));
    }

    #[test]
    fn two_rows_make_three_lines() {
        let d = tmpdir();
        let p = d.join("two.csv");
        write_ledger_csv(&p, &[sample_row(0.0), sample_row(0.1)]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let d = tmpdir();
        let p = d.join("rt.csv");
        let rows = vec![sample_row(0.0), sample_row(0.05), sample_row(0.1)];
        write_ledger_csv(&p, &rows).unwrap();
        let back = read_ledger_csv(&p).unwrap();
        assert_eq!(back.len(), rows.len());
        for (a, b) in rows.iter().zip(back.iter()) {
            for (x, y) in a.values().iter().zip(b.values().iter()) {
                let same = (x == y) || (x.is_nan() && y.is_nan());
                assert!(same, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn format_g17_round_trips_f64() {
        for v in [
            1.0 / 3.0,
            std::f64::consts::PI,
            1e-300,
            -2.5e17,
            6.02214076e23,
        ] {
            let s = format_g17(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(v, back, "{s}");
        }
    }

    #[test]
    fn checkpoint_round_trip() {
        let g = Grid::new(2, [6, 5, 1], [1.0, 2.0, 1.0]).unwrap();
        let mut state = FluidState::quiescent(g, 0.3);
        for (i, v) in state.theta.lat.data.iter_mut().enumerate() {
            *v = i as f64 * 0.01;
        }
        for (i, v) in state.u.comps[0].data.iter_mut().enumerate() {
            *v = (i as f64).cos();
        }
        state.t = 1.25;
        let d = tmpdir();
        let p = d.join("chk.bin");
        write_checkpoint(&p, &state).unwrap();
        let back = read_checkpoint(&p).unwrap();
        assert_eq!(back.t, state.t);
        assert_eq!(back.rho.lat.data, state.rho.lat.data);
        assert_eq!(back.u.comps[0].data, state.u.comps[0].data);
        assert_eq!(back.theta.lat.data, state.theta.lat.data);
        assert_eq!(back.rho.grid, g);
    }

    #[test]
    fn verdict_lines_have_the_fixed_shape() {
        let d = tmpdir();
        let p = d.join("verdicts.txt");
        let v = vec![
            Verdict {
                name: "monotone_energy".into(),
                holds: true,
                margin: 1.5e-4,
                first_violation_t: None,
            },
            Verdict {
                name: "gronwall_grad_mu".into(),
                holds: false,
                margin: -0.25,
                first_violation_t: Some(0.3),
            },
        ];
        write_verdicts(&p, &v).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[0].starts_with("monotone_energy=true "));
        assert!(lines[0].ends_with(" none"));
        assert!(lines[1].starts_with("gronwall_grad_mu=false "));
    }
}
