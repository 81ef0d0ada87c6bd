//! Radially symmetric monitor functions `m(x) = 1 + a1 sech^2(a2 (|x|^2 - a3^2))`.

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::mesh::PERIOD;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonitorSpec {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
}

impl MonitorSpec {
    /// Concentrates resolution on the circle `|x| = 1/4`.
    pub const RING: MonitorSpec = MonitorSpec { alpha1: 10.0, alpha2: 200.0, alpha3: 0.25 };
    /// Concentrates resolution at the origin.
    pub const BELL: MonitorSpec = MonitorSpec { alpha1: 50.0, alpha2: 100.0, alpha3: 0.0 };
    /// `m = 1`; the uniform mesh is already equidistributed.
    pub const UNIFORM: MonitorSpec = MonitorSpec { alpha1: 0.0, alpha2: 0.0, alpha3: 0.0 };

    pub fn new(alpha1: f64, alpha2: f64, alpha3: f64) -> Result<Self> {
        let spec = MonitorSpec { alpha1, alpha2, alpha3 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "ring" => Some(Self::RING),
            "bell" => Some(Self::BELL),
            "uniform" => Some(Self::UNIFORM),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha1.is_finite() && self.alpha2.is_finite() && self.alpha3.is_finite()) {
            return Err(Error::InvalidConfig("monitor parameters must be finite"));
        }
        // sech^2 takes values in (0, 1], so m > 0 iff alpha1 > -1
        if !(self.alpha1 > -1.0) {
            return Err(Error::InvalidConfig("monitor alpha1 must exceed -1"));
        }
        Ok(())
    }

    #[inline]
    fn argument(&self, x: Vec2) -> f64 {
        self.alpha2 * (x.norm_sq() - self.alpha3 * self.alpha3)
    }

    /// `m(x)`; strictly positive.
    #[inline]
    pub fn eval(&self, x: Vec2) -> f64 {
        let s = sech(self.argument(x));
        1.0 + self.alpha1 * s * s
    }

    /// Analytic `grad m = -4 a1 a2 sech^2(u) tanh(u) x`.
    #[inline]
    pub fn grad(&self, x: Vec2) -> Vec2 {
        let u = self.argument(x);
        let s = sech(u);
        x * (-4.0 * self.alpha1 * self.alpha2 * s * s * libm::tanh(u))
    }

    /// Evaluates at a periodic position, wrapped into the fundamental cell first.
    #[inline]
    pub fn eval_periodic(&self, x: Vec2) -> f64 {
        self.eval(x.min_image(PERIOD))
    }

    #[inline]
    pub fn grad_periodic(&self, x: Vec2) -> Vec2 {
        self.grad(x.min_image(PERIOD))
    }

    pub fn eval_all(&self, points: &[Vec2]) -> alloc::vec::Vec<f64> {
        points.iter().map(|&p| self.eval(p)).collect()
    }

    pub fn grad_all(&self, points: &[Vec2]) -> alloc::vec::Vec<Vec2> {
        points.iter().map(|&p| self.grad(p)).collect()
    }
}

#[inline]
fn sech(u: f64) -> f64 {
    // 1/cosh overflows to 0 gracefully for large |u|
    let a = u.abs();
    if a > 700.0 {
        return 0.0;
    }
    let e = libm::exp(-a);
    2.0 * e / (1.0 + e * e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn crest_values() {
        assert_eq!(MonitorSpec::RING.eval(Vec2::new(0.25, 0.0)), 11.0);
        assert_eq!(MonitorSpec::BELL.eval(Vec2::ZERO), 51.0);
    }

    #[test]
    fn bell_tail_is_one() {
        let at_edge = MonitorSpec::BELL.eval(Vec2::new(0.5, 0.0));
        // 50 sech^2(25) < 1e-19
        assert!(at_edge - 1.0 < 1e-19);
        assert_eq!(MonitorSpec::BELL.eval(Vec2::new(1e3, 0.0)), 1.0);
    }

    #[test]
    fn gradient_vanishes_on_symmetry_sets() {
        assert_eq!(MonitorSpec::BELL.grad(Vec2::ZERO), Vec2::ZERO);
        assert_eq!(MonitorSpec::RING.grad(Vec2::ZERO), Vec2::ZERO);
        assert_eq!(MonitorSpec::RING.grad(Vec2::new(0.25, 0.0)).norm(), 0.0);
    }

    #[test]
    fn alpha1_bound() {
        assert!(MonitorSpec::new(-1.0, 1.0, 0.0).is_err());
        assert!(MonitorSpec::new(-0.5, 1.0, 0.0).is_ok());
        assert!(MonitorSpec::new(f64::NAN, 1.0, 0.0).is_err());
    }

    fn arb_spec() -> impl Strategy<Value = MonitorSpec> {
        prop_oneof![Just(MonitorSpec::RING), Just(MonitorSpec::BELL)]
    }

    proptest! {
        #[test]
        fn positive_and_rotation_invariant(spec in arb_spec(), a in -0.7f64..0.7, b in -0.7f64..0.7) {
            let m = spec.eval(Vec2::new(a, b));
            prop_assert!(m > 0.0);
            prop_assert_eq!(m, spec.eval(Vec2::new(b, -a)));
        }

        #[test]
        fn gradient_is_radial(spec in arb_spec(), a in -0.7f64..0.7, b in -0.7f64..0.7) {
            let x = Vec2::new(a, b);
            let g = spec.grad(x);
            prop_assert!(g.cross(x).abs() <= 1e-12 * (g.norm() * x.norm()).max(1e-300));
        }

        #[test]
        fn gradient_matches_central_differences(spec in arb_spec(), a in -0.5f64..0.5, b in -0.5f64..0.5) {
            let x = Vec2::new(a, b);
            let step = 1e-6;
            let fd = Vec2::new(
                (spec.eval(x + Vec2::new(step, 0.0)) - spec.eval(x - Vec2::new(step, 0.0))) / (2.0 * step),
                (spec.eval(x + Vec2::new(0.0, step)) - spec.eval(x - Vec2::new(0.0, step))) / (2.0 * step),
            );
            let g = spec.grad(x);
            // unit floor covers the critical circle and origin, where |grad m| -> 0
            prop_assert!((fd - g).norm() <= 1e-6 * g.norm().max(1.0),
                "fd {:?} analytic {:?}", fd, g);
        }
    }
}
