//! CSV and legacy VTK writers, and the mesh CSV reader used by `compare`.
//!
//! Floats are written with 17 significant digits so files round-trip exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ma_mesh_core::{ConvergenceRecord, Mesh, Vec2};

use crate::error::{CliError, CliResult};

pub const EQUI_HEADER: &str = "iter,equi,max_residual,min_vol,min_eig,gamma_max,inner_iters";
pub const MESH_HEADER: &str = "i,j,x,y";
pub const SUMMARY_HEADER: &str = "algorithm,params,N,converged,iterations,final_equi,wall_seconds";

/// `v` with 17 significant digits.
pub fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn equi_csv(history: &[ConvergenceRecord]) -> String {
    let mut s = String::with_capacity(128 * (history.len() + 1));
    s.push_str(EQUI_HEADER);
    s.push('\n');
    for r in history {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.iteration,
            sig17(r.equi),
            sig17(r.max_residual),
            sig17(r.min_vol),
            sig17(r.min_eig),
            sig17(r.gamma_max),
            r.inner_iters
        );
    }
    s
}

/// Corner `(i, j)` sits at index `j n + i`.
pub fn mesh_csv(mesh: &Mesh) -> String {
    let n = mesh.n();
    let mut s = String::with_capacity(48 * (mesh.n_corners() + 1));
    s.push_str(MESH_HEADER);
    s.push('\n');
    for (k, p) in mesh.corners().iter().enumerate() {
        let _ = writeln!(s, "{},{},{},{}", k % n, k / n, sig17(p.x), sig17(p.y));
    }
    s
}

/// Legacy ASCII unstructured grid. Every cell gets its own four points so
/// cells straddling the periodic seam are drawn unbroken.
pub fn mesh_vtk(mesh: &Mesh, title: &str) -> String {
    let cells = mesh.n_cells();
    let mut s = String::with_capacity(100 * cells);
    let _ = write!(
        s,
        "# vtk DataFile Version 3.0\n{title}\nASCII\nDATASET UNSTRUCTURED_GRID\nPOINTS {} double\n",
        4 * cells
    );
    for c in 0..cells {
        for p in mesh.cell_corners(c) {
            let _ = writeln!(s, "{} {} 0", sig17(p.x), sig17(p.y));
        }
    }
    let _ = writeln!(s, "CELLS {cells} {}", 5 * cells);
    for c in 0..cells {
        let b = 4 * c;
        let _ = writeln!(s, "4 {} {} {} {}", b, b + 1, b + 2, b + 3);
    }
    let _ = writeln!(s, "CELL_TYPES {cells}");
    for _ in 0..cells {
        s.push_str("9\n");
    }
    let _ = write!(s, "CELL_DATA {cells}\nSCALARS volume double 1\nLOOKUP_TABLE default\n");
    for v in mesh.volumes() {
        let _ = writeln!(s, "{}", sig17(*v));
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: String,
    pub params: String,
    pub n: usize,
    pub converged: bool,
    pub iterations: usize,
    pub final_equi: f64,
    pub wall_seconds: f64,
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{:.6}",
            r.algorithm,
            r.params,
            r.n,
            r.converged,
            r.iterations,
            sig17(r.final_equi),
            r.wall_seconds
        );
    }
    s
}

pub fn write(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Corner positions of an `i,j,x,y` file, with `n` inferred from the count.
#[derive(Debug, Clone, PartialEq)]
pub struct CornerSet {
    pub n: usize,
    pub points: Vec<Vec2>,
}

pub fn read_mesh_csv(path: &Path) -> CliResult<CornerSet> {
    let src = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_mesh_csv(&src, path)
}

pub fn parse_mesh_csv(src: &str, path: &Path) -> CliResult<CornerSet> {
    let bad = |line: usize, message: String| CliError::Parse { path: path.to_path_buf(), line, message };
    let mut lines = src.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == MESH_HEADER => {}
        _ => return Err(bad(1, format!("expected header `{MESH_HEADER}`"))),
    }
    let mut rows = Vec::new();
    for (k, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 4 {
            return Err(bad(k + 1, format!("expected 4 fields, found {}", f.len())));
        }
        let idx = |s: &str| s.parse::<usize>().map_err(|e| bad(k + 1, format!("bad index `{s}`: {e}")));
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(k + 1, format!("bad coordinate `{s}`: {e}")));
        rows.push((idx(f[0])?, idx(f[1])?, Vec2::new(num(f[2])?, num(f[3])?), k + 1));
    }
    let n = (rows.len() as f64).sqrt().round() as usize;
    if n * n != rows.len() || n == 0 {
        return Err(bad(1, format!("{} corners do not form a square mesh", rows.len())));
    }
    let mut points = vec![None; n * n];
    for (i, j, p, line) in rows {
        if i >= n || j >= n {
            return Err(bad(line, format!("corner ({i}, {j}) outside a {n} x {n} mesh")));
        }
        if points[j * n + i].replace(p).is_some() {
            return Err(bad(line, format!("corner ({i}, {j}) repeated")));
        }
    }
    Ok(CornerSet { n, points: points.into_iter().map(|p| p.expect("all corners seen")).collect() })
}

/// Largest minimum-image distance between matching corners.
pub fn max_corner_distance(a: &CornerSet, b: &CornerSet) -> CliResult<f64> {
    if a.n != b.n {
        return Err(CliError::Shape(format!("{} x {} corners vs {} x {}", a.n, a.n, b.n, b.n)));
    }
    Ok(a.points.iter().zip(&b.points).map(|(&p, &q)| (p - q).min_image(1.0).norm()).fold(0.0, f64::max))
}
