//! Doubly periodic structured quadrilateral meshes on `[-1/2, 1/2]^2`.
//!
//! Cell `(i, j)` has id `j * n + i`; corner `(i, j)` is the lower-left corner
//! of that cell and corners are stored once per periodic class, so there are
//! `n * n` of each. Face ids `0..n*n` are the east faces of each cell (owner
//! = the cell, neighbour = its east neighbour) and `n*n..2*n*n` the north
//! faces. All geometry is recomputed from the corners, so the computational
//! mesh and any moved physical mesh go through the same code path.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::geom::Vec2;

/// Side length of the periodic domain.
pub const PERIOD: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    /// Face between `(i, j)` and `(i + 1, j)`; normal along +x on the uniform mesh.
    East,
    /// Face between `(i, j)` and `(i, j + 1)`; normal along +y on the uniform mesh.
    North,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Face {
    pub owner: usize,
    pub neighbour: usize,
    pub kind: FaceKind,
    /// Face length times the unit normal pointing from owner to neighbour.
    pub area: Vec2,
    /// Minimum-image vector from the owner centre to the neighbour centre.
    pub delta: Vec2,
    /// Face midpoint, in the owner's unwrapped frame.
    pub centre: Vec2,
    /// Linear interpolation weight of the owner value (`1 - w` for the neighbour).
    pub owner_weight: f64,
}

impl Face {
    #[inline]
    pub fn unit_normal(&self) -> Vec2 {
        self.area / self.area.norm()
    }

    /// Interpolates a cell quantity onto this face.
    #[inline]
    pub fn interpolate<T>(&self, owner: T, neighbour: T) -> T
    where
        T: core::ops::Mul<f64, Output = T> + core::ops::Add<Output = T>,
    {
        owner * self.owner_weight + neighbour * (1.0 - self.owner_weight)
    }
}

/// Geometry of a periodic `n x n` quad mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    n: usize,
    corners: Vec<Vec2>,
    centres: Vec<Vec2>,
    volumes: Vec<f64>,
    faces: Vec<Face>,
    /// East, north, west, south face of every cell.
    cell_faces: Vec<[usize; 4]>,
    /// Two east faces then two north faces meeting at every corner.
    corner_faces: Vec<[usize; 4]>,
}

/// Result of [`Mesh::tangling_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangleReport {
    pub min_cell_volume: f64,
    pub min_triangle_area: f64,
    /// Cell holding the smallest triangle.
    pub worst_cell: usize,
    pub tangled: bool,
}

impl Mesh {
    /// Uniform `n x n` grid with spacing `1/n`.
    pub fn uniform(n: usize) -> Result<Mesh> {
        if n < 3 {
            return Err(Error::InvalidMesh("at least 3 cells per side are required"));
        }
        let h = PERIOD / n as f64;
        let mut corners = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                corners.push(Vec2::new(-0.5 + i as f64 * h, -0.5 + j as f64 * h));
            }
        }
        Ok(Self::from_corners(n, corners))
    }

    /// Builds connectivity and geometry from `n * n` corner positions.
    pub fn from_corners(n: usize, corners: Vec<Vec2>) -> Mesh {
        assert_eq!(corners.len(), n * n, "corner count must be n*n");
        let nc = n * n;
        let mut faces = Vec::with_capacity(2 * nc);
        let mut cell_faces = Vec::with_capacity(nc);
        let mut corner_faces = Vec::with_capacity(nc);
        let east = |c: usize| {
            let (i, j) = (c % n, c / n);
            j * n + (i + 1) % n
        };
        let north = |c: usize| {
            let (i, j) = (c % n, c / n);
            ((j + 1) % n) * n + i
        };
        let west = |c: usize| {
            let (i, j) = (c % n, c / n);
            j * n + (i + n - 1) % n
        };
        let south = |c: usize| {
            let (i, j) = (c % n, c / n);
            ((j + n - 1) % n) * n + i
        };
        for kind in [FaceKind::East, FaceKind::North] {
            for c in 0..nc {
                let neighbour = match kind {
                    FaceKind::East => east(c),
                    FaceKind::North => north(c),
                };
                faces.push(Face {
                    owner: c,
                    neighbour,
                    kind,
                    area: Vec2::ZERO,
                    delta: Vec2::ZERO,
                    centre: Vec2::ZERO,
                    owner_weight: 0.5,
                });
            }
        }
        for c in 0..nc {
            cell_faces.push([c, nc + c, west(c), nc + south(c)]);
        }
        for k in 0..nc {
            // cells around corner k: sw = south-west of k, se, nw
            let nw = west(k);
            let sw = south(nw);
            let se = south(k);
            corner_faces.push([sw, nw, nc + sw, nc + se]);
        }
        let mut mesh = Mesh {
            n,
            corners,
            centres: alloc::vec![Vec2::ZERO; nc],
            volumes: alloc::vec![0.0; nc],
            faces,
            cell_faces,
            corner_faces,
        };
        mesh.recompute_geometry();
        mesh
    }

    /// The four corners of cell `c`, counter-clockwise from the lower-left,
    /// unwrapped so they form a contiguous quad.
    pub fn cell_corners(&self, c: usize) -> [Vec2; 4] {
        let n = self.n;
        let (i, j) = (c % n, c / n);
        let (ip, jp) = ((i + 1) % n, (j + 1) % n);
        let sx = if i + 1 == n { PERIOD } else { 0.0 };
        let sy = if j + 1 == n { PERIOD } else { 0.0 };
        [
            self.corners[j * n + i],
            self.corners[j * n + ip] + Vec2::new(sx, 0.0),
            self.corners[jp * n + ip] + Vec2::new(sx, sy),
            self.corners[jp * n + i] + Vec2::new(0.0, sy),
        ]
    }

    fn recompute_geometry(&mut self) {
        let nc = self.n * self.n;
        for c in 0..nc {
            let p = self.cell_corners(c);
            self.centres[c] = (p[0] + p[1] + p[2] + p[3]) * 0.25;
            self.volumes[c] = 0.5 * ((p[1] - p[0]).cross(p[2] - p[0]) + (p[2] - p[0]).cross(p[3] - p[0]));
        }
        for f in 0..2 * nc {
            let face = self.faces[f];
            let p = self.cell_corners(face.owner);
            // counter-clockwise edge of the owner; outward normal is the edge rotated clockwise
            let (a, b) = match face.kind {
                FaceKind::East => (p[1], p[2]),
                FaceKind::North => (p[2], p[3]),
            };
            let t = b - a;
            let area = Vec2::new(t.y, -t.x);
            let centre = (a + b) * 0.5;
            let xo = self.centres[face.owner];
            let xn = self.centres[face.neighbour];
            let delta = (xn - xo).min_image(PERIOD);
            let to_owner = (centre - xo).min_image(PERIOD).norm();
            let to_neigh = (centre - xn).min_image(PERIOD).norm();
            let face = &mut self.faces[f];
            face.area = area;
            face.centre = centre;
            face.delta = delta;
            face.owner_weight = to_neigh / (to_owner + to_neigh);
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn n_cells(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn n_corners(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        PERIOD / self.n as f64
    }

    #[inline]
    pub fn corners(&self) -> &[Vec2] {
        &self.corners
    }

    #[inline]
    pub fn centres(&self) -> &[Vec2] {
        &self.centres
    }

    #[inline]
    pub fn volumes(&self) -> &[f64] {
        &self.volumes
    }

    #[inline]
    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    #[inline]
    pub fn cell_faces(&self, c: usize) -> [usize; 4] {
        self.cell_faces[c]
    }

    #[inline]
    pub fn corner_faces(&self, k: usize) -> [usize; 4] {
        self.corner_faces[k]
    }

    /// Outward area vector of face `f` as seen from cell `c`.
    #[inline]
    pub fn outward_area(&self, c: usize, f: usize) -> Vec2 {
        let face = &self.faces[f];
        if face.owner == c {
            face.area
        } else {
            -face.area
        }
    }

    pub fn total_volume(&self) -> f64 {
        self.volumes.iter().sum()
    }

    pub fn min_volume(&self) -> f64 {
        self.volumes.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Signed areas of the triangles `(p0, p1, p2)` and `(p0, p2, p3)` of every
    /// quad; tangled iff any is non-positive.
    pub fn tangling_check(&self) -> TangleReport {
        let mut report = TangleReport {
            min_cell_volume: f64::INFINITY,
            min_triangle_area: f64::INFINITY,
            worst_cell: 0,
            tangled: false,
        };
        for c in 0..self.n_cells() {
            let p = self.cell_corners(c);
            let t1 = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]);
            let t2 = 0.5 * (p[2] - p[0]).cross(p[3] - p[0]);
            let t = t1.min(t2);
            if t < report.min_triangle_area {
                report.min_triangle_area = t;
                report.worst_cell = c;
            }
            report.min_cell_volume = report.min_cell_volume.min(self.volumes[c]);
        }
        report.tangled = !(report.min_triangle_area > 0.0);
        report
    }
}

/// Fixed computational mesh together with its moved physical image.
#[derive(Debug, Clone, PartialEq)]
pub struct MeshPair {
    pub computational: Mesh,
    pub physical: Mesh,
    /// Per-corner displacement (grad phi) used for the last move.
    pub corner_displacement: Vec<Vec2>,
}

impl MeshPair {
    pub fn new(computational: Mesh) -> MeshPair {
        let physical = computational.clone();
        let corner_displacement = alloc::vec![Vec2::ZERO; computational.n_corners()];
        MeshPair { computational, physical, corner_displacement }
    }

    /// Moves the physical corners to `xi + grad` and recomputes all geometry.
    pub fn update_physical(&mut self, corner_grad: &[Vec2]) -> Result<()> {
        let nk = self.computational.n_corners();
        if corner_grad.len() != nk {
            return Err(Error::LengthMismatch { expected: nk, found: corner_grad.len() });
        }
        let corners = self
            .computational
            .corners()
            .iter()
            .zip(corner_grad)
            .map(|(&xi, &g)| xi + g)
            .collect();
        self.physical = Mesh::from_corners(self.computational.n(), corners);
        self.corner_displacement.clear();
        self.corner_displacement.extend_from_slice(corner_grad);
        Ok(())
    }

    /// Consuming form of [`MeshPair::update_physical`].
    pub fn updated(mut self, corner_grad: &[Vec2]) -> Result<MeshPair> {
        self.update_physical(corner_grad)?;
        Ok(self)
    }
}
