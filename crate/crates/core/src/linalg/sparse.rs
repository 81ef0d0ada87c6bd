use alloc::vec::Vec;

use crate::mesh::Mesh;

/// Compressed sparse row matrix with sorted column indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
    diag: Vec<usize>,
}

impl CsrMatrix {
    /// Zero matrix with the cell-plus-face-neighbours pattern of `mesh`.
    pub fn with_mesh_pattern(mesh: &Mesh) -> (CsrMatrix, Vec<[usize; 4]>) {
        let n = mesh.n_cells();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(5 * n);
        row_ptr.push(0);
        let faces = mesh.faces();
        for c in 0..n {
            let mut row: Vec<usize> = mesh
                .cell_faces(c)
                .iter()
                .map(|&f| {
                    let face = &faces[f];
                    if face.owner == c {
                        face.neighbour
                    } else {
                        face.owner
                    }
                })
                .collect();
            row.push(c);
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(&row);
            row_ptr.push(cols.len());
        }
        let values = alloc::vec![0.0; cols.len()];
        let mut m = CsrMatrix { n, row_ptr, cols, values, diag: Vec::new() };
        m.diag = (0..n).map(|r| m.position(r, r).expect("diagonal in pattern")).collect();
        let slots = faces
            .iter()
            .map(|f| {
                [
                    m.diag[f.owner],
                    m.position(f.owner, f.neighbour).expect("face in pattern"),
                    m.position(f.neighbour, f.owner).expect("face in pattern"),
                    m.diag[f.neighbour],
                ]
            })
            .collect();
        (m, slots)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.cols[range.clone()], &self.values[range])
    }

    pub fn position(&self, r: usize, c: usize) -> Option<usize> {
        let start = self.row_ptr[r];
        self.cols[start..self.row_ptr[r + 1]]
            .binary_search(&c)
            .ok()
            .map(|k| start + k)
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |k| self.values[k])
    }

    #[inline]
    pub fn diagonal(&self, r: usize) -> f64 {
        self.values[self.diag[r]]
    }

    #[inline]
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Multiplies each row `r` by `scale[r]`.
    pub fn scale_rows(&mut self, scale: &[f64]) {
        for r in 0..self.n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                self.values[k] *= scale[r];
            }
        }
    }

    pub fn add_diagonal(&mut self, values: &[f64]) {
        for (r, v) in values.iter().enumerate() {
            let k = self.diag[r];
            self.values[k] += v;
        }
    }

    pub fn mul_vec_into(&self, x: &[f64], out: &mut [f64]) {
        for r in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[k] * x[self.cols[k]];
            }
            out[r] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.n];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|r| {
            let (cols, vals) = self.row(r);
            cols.iter().zip(vals).all(|(&c, &v)| (v - self.get(c, r)).abs() <= tol * v.abs().max(1.0))
        })
    }

    /// Replaces row `r` by `d * e_r` and clears column `r` elsewhere, where `d`
    /// is the current diagonal (or 1 when it is zero). Returns `(d, column)`,
    /// the removed column entries as `(row, value)` pairs for right-hand-side
    /// elimination.
    pub(crate) fn pin_row_and_column(&mut self, r: usize) -> (f64, Vec<(usize, f64)>) {
        let d = match self.diagonal(r) {
            v if v != 0.0 => v,
            _ => 1.0,
        };
        for k in self.row_ptr[r]..self.row_ptr[r + 1] {
            self.values[k] = if self.cols[k] == r { d } else { 0.0 };
        }
        let mut column = Vec::new();
        for row in 0..self.n {
            if row == r {
                continue;
            }
            if let Some(k) = self.position(row, r) {
                if self.values[k] != 0.0 {
                    column.push((row, self.values[k]));
                }
                self.values[k] = 0.0;
            }
        }
        (d, column)
    }
}

/// Incomplete LU factorisation with zero fill, stored in the pattern of `A`.
#[derive(Debug, Clone)]
pub struct Ilu0 {
    lu: CsrMatrix,
}

impl Ilu0 {
    /// Returns `None` when a zero pivot appears.
    pub fn new(a: &CsrMatrix) -> Option<Ilu0> {
        let mut lu = a.clone();
        let n = lu.n;
        for i in 0..n {
            let (start, end) = (lu.row_ptr[i], lu.row_ptr[i + 1]);
            for kk in start..end {
                let k = lu.cols[kk];
                if k >= i {
                    break;
                }
                let pivot = lu.values[lu.diag[k]];
                if pivot == 0.0 || !pivot.is_finite() {
                    return None;
                }
                let lik = lu.values[kk] / pivot;
                lu.values[kk] = lik;
                for jj in kk + 1..end {
                    let j = lu.cols[jj];
                    if let Some(kj) = lu.position(k, j) {
                        lu.values[jj] -= lik * lu.values[kj];
                    }
                }
            }
            let d = lu.values[lu.diag[i]];
            if d == 0.0 || !d.is_finite() {
                return None;
            }
        }
        Some(Ilu0 { lu })
    }

    /// Solves `L U z = r` in place.
    pub fn apply(&self, z: &mut [f64]) {
        let lu = &self.lu;
        for i in 0..lu.n {
            let mut s = z[i];
            for k in lu.row_ptr[i]..lu.diag[i] {
                s -= lu.values[k] * z[lu.cols[k]];
            }
            z[i] = s;
        }
        for i in (0..lu.n).rev() {
            let mut s = z[i];
            for k in lu.diag[i] + 1..lu.row_ptr[i + 1] {
                s -= lu.values[k] * z[lu.cols[k]];
            }
            z[i] = s / lu.values[lu.diag[i]];
        }
    }
}
