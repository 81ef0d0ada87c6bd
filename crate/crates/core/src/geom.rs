//! Two-component vectors and 2x2 matrices.

use core::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn dot(self, o: Vec2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Vec2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    /// Outer product `self * o^T`.
    #[inline]
    pub fn outer(self, o: Vec2) -> Mat2 {
        Mat2::new(self.x * o.x, self.x * o.y, self.y * o.x, self.y * o.y)
    }

    /// Wraps each component into `[-period/2, period/2]` (minimum image).
    #[inline]
    pub fn min_image(self, period: f64) -> Vec2 {
        Vec2::new(
            self.x - period * libm::round(self.x / period),
            self.y - period * libm::round(self.y / period),
        )
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x + o.x, self.y + o.y)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, o: Vec2) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, o: Vec2) -> Vec2 {
        Vec2::new(self.x - o.x, self.y - o.y)
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, o: Vec2) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

/// Row-major 2x2 matrix `[[xx, xy], [yx, yy]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub xx: f64,
    pub xy: f64,
    pub yx: f64,
    pub yy: f64,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2 { xx: 0.0, xy: 0.0, yx: 0.0, yy: 0.0 };
    pub const IDENTITY: Mat2 = Mat2 { xx: 1.0, xy: 0.0, yx: 0.0, yy: 1.0 };

    #[inline]
    pub const fn new(xx: f64, xy: f64, yx: f64, yy: f64) -> Self {
        Self { xx, xy, yx, yy }
    }

    #[inline]
    pub const fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, 0.0, b)
    }

    #[inline]
    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.yx
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    #[inline]
    pub fn transpose(&self) -> Mat2 {
        Mat2::new(self.xx, self.yx, self.xy, self.yy)
    }

    #[inline]
    pub fn symmetrised(&self) -> Mat2 {
        let off = 0.5 * (self.xy + self.yx);
        Mat2::new(self.xx, off, off, self.yy)
    }

    #[inline]
    pub fn mul_vec(&self, v: Vec2) -> Vec2 {
        Vec2::new(self.xx * v.x + self.xy * v.y, self.yx * v.x + self.yy * v.y)
    }

    /// Frobenius inner product `sum_ab A_ab B_ab`.
    #[inline]
    pub fn contract(&self, o: &Mat2) -> f64 {
        self.xx * o.xx + self.xy * o.xy + self.yx * o.yx + self.yy * o.yy
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        let scale = self.xx.abs().max(self.xy.abs()).max(self.yx.abs()).max(self.yy.abs());
        if !(d.abs() > 1e-14 * scale * scale) {
            return None;
        }
        Some(Mat2::new(self.yy / d, -self.xy / d, -self.yx / d, self.xx / d))
    }

    /// Eigenvalues `(min, max)` of the symmetric part.
    pub fn sym_eigenvalues(&self) -> (f64, f64) {
        let off = 0.5 * (self.xy + self.yx);
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let r = libm::hypot(half_diff, off);
        (mean - r, mean + r)
    }

    #[inline]
    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yx.is_finite() && self.yy.is_finite()
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    #[inline]
    fn add(self, o: Mat2) -> Mat2 {
        Mat2::new(self.xx + o.xx, self.xy + o.xy, self.yx + o.yx, self.yy + o.yy)
    }
}

impl AddAssign for Mat2 {
    #[inline]
    fn add_assign(&mut self, o: Mat2) {
        *self = *self + o;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    #[inline]
    fn sub(self, o: Mat2) -> Mat2 {
        Mat2::new(self.xx - o.xx, self.xy - o.xy, self.yx - o.yx, self.yy - o.yy)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, s: f64) -> Mat2 {
        Mat2::new(self.xx * s, self.xy * s, self.yx * s, self.yy * s)
    }
}
