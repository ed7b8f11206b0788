//! Uniform 1-D grids, sampled complex fields and the Fourier mode contract.
//!
//! Samples sit at cell midpoints: sample `k` of an axis is at
//! `x_min + (k + 1/2) dx`. The synthesis kernel is `e^{+ipx}` and the
//! analysis side carries the `1/(2 pi)`:
//!
//! `f(x) = sum_k c(p_k) e^{i p_k x} dp / (2 pi)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidAxis(format!("need at least 2 samples, got {n}")));
        }
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidAxis(format!(
                "bounds must be finite with x_max > x_min (got [{x_min}, {x_max}])"
            )));
        }
        Ok(Axis { x_min, x_max, n })
    }

    /// Axis on `[-half_width, half_width]`.
    pub fn centered(half_width: f64, n: usize) -> Result<Self> {
        Axis::new(-half_width, half_width, n)
    }

    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.n as f64
    }

    pub fn extent(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn point(&self, k: usize) -> f64 {
        self.x_min + (k as f64 + 0.5) * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.point(k)).collect()
    }

    /// Conjugate wavenumber axis: spans `+-pi/dx` with the same sample count,
    /// so its spacing is `2 pi / extent`.
    pub fn wavenumber_axis(&self) -> Axis {
        let half = PI / self.spacing();
        Axis { x_min: -half, x_max: half, n: self.n }
    }

    /// Index of the sample nearest to `x`, clamped to the axis.
    pub fn nearest_index(&self, x: f64) -> usize {
        let r = ((x - self.x_min) / self.spacing() - 0.5).round();
        r.clamp(0.0, (self.n - 1) as f64) as usize
    }

    /// True when both axes sample the same points to within `rel` of a step.
    pub fn approx_eq(&self, other: &Axis, rel: f64) -> bool {
        let tol = rel * self.spacing().abs().max(other.spacing().abs());
        self.n == other.n
            && (self.x_min - other.x_min).abs() <= tol
            && (self.x_max - other.x_max).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub axis: Axis,
    pub samples: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(axis: Axis, samples: Vec<Complex64>) -> Result<Self> {
        if samples.len() != axis.n {
            return Err(Error::InvalidArgument(format!(
                "field has {} samples but the axis has {}",
                samples.len(),
                axis.n
            )));
        }
        if samples.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("field contains non-finite samples".into()));
        }
        Ok(ComplexField { axis, samples })
    }

    pub fn from_fn(axis: Axis, f: impl Fn(f64) -> Complex64) -> Self {
        let samples = (0..axis.n).map(|k| f(axis.point(k))).collect();
        ComplexField { axis, samples }
    }

    pub fn zeros(axis: Axis) -> Self {
        ComplexField { axis, samples: vec![Complex64::new(0.0, 0.0); axis.n] }
    }

    /// Plane-wave mode `e^{ipx}` sampled on `axis`.
    pub fn plane_wave(axis: Axis, p: f64) -> Self {
        ComplexField::from_fn(axis, |x| Complex64::from_polar(1.0, p * x))
    }

    /// `sum |f|^2 dx`.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.axis.spacing()
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        ComplexField {
            axis: self.axis,
            samples: self.samples.iter().map(|z| z * s).collect(),
        }
    }

    /// Relative L2 distance `||self - other|| / ||other||`.
    pub fn rel_l2(&self, other: &ComplexField) -> f64 {
        let num: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        let den: f64 = other.samples.iter().map(|b| b.norm_sqr()).sum();
        (num / den).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveContext {
    pub omega: f64,
    pub c: f64,
}

impl WaveContext {
    pub fn new(omega: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidArgument(format!("omega must be positive, got {omega}")));
        }
        Ok(WaveContext { omega, c: SPEED_OF_LIGHT })
    }

    pub fn from_wavelength(lambda: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("wavelength must be positive, got {lambda}")));
        }
        WaveContext::new(2.0 * PI * SPEED_OF_LIGHT / lambda)
    }

    /// Wavenumber `omega / c`.
    pub fn k(&self) -> f64 {
        self.omega / self.c
    }

    pub fn wavelength(&self) -> f64 {
        2.0 * PI * self.c / self.omega
    }
}

/// Midpoint-rule integral `sum f dx`.
pub fn integrate(field: &ComplexField) -> Complex64 {
    field.samples.iter().sum::<Complex64>() * field.axis.spacing()
}

/// FFT plan plus the phase ramps that map the DFT onto the midpoint grid.
/// Cheap to clone and safe to share across threads.
#[derive(Clone)]
pub struct FourierPlan {
    space: Axis,
    forward: Arc<dyn Fft<f64>>,
    backward: Arc<dyn Fft<f64>>,
    fwd_in: Vec<Complex64>,
    fwd_out: Vec<Complex64>,
    inv_in: Vec<Complex64>,
    inv_out: Vec<Complex64>,
}

impl std::fmt::Debug for FourierPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FourierPlan").field("space", &self.space).finish()
    }
}

impl FourierPlan {
    pub fn new(space: Axis) -> Self {
        let n = space.n;
        let modes = space.wavenumber_axis();
        let dx = space.spacing();
        let dp = modes.spacing();
        let x0 = space.point(0);
        let p0 = modes.point(0);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let backward = planner.plan_fft_inverse(n);
        let fwd_in = (0..n).map(|j| Complex64::from_polar(1.0, -p0 * j as f64 * dx)).collect();
        let fwd_out = (0..n)
            .map(|k| Complex64::from_polar(dx, -modes.point(k) * x0))
            .collect();
        let inv_in = (0..n)
            .map(|k| Complex64::from_polar(1.0, modes.point(k) * x0))
            .collect();
        let inv_out = (0..n)
            .map(|j| Complex64::from_polar(dp / (2.0 * PI), p0 * j as f64 * dx))
            .collect();
        FourierPlan { space, forward, backward, fwd_in, fwd_out, inv_in, inv_out }
    }

    pub fn space(&self) -> Axis {
        self.space
    }

    pub fn modes(&self) -> Axis {
        self.space.wavenumber_axis()
    }

    /// In place: samples on the space axis become coefficients on the mode axis.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        for (z, r) in buf.iter_mut().zip(&self.fwd_in) {
            *z *= r;
        }
        self.forward.process(buf);
        for (z, r) in buf.iter_mut().zip(&self.fwd_out) {
            *z *= r;
        }
    }

    /// In place: coefficients on the mode axis become samples on the space axis.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        for (z, r) in buf.iter_mut().zip(&self.inv_in) {
            *z *= r;
        }
        self.backward.process(buf);
        for (z, r) in buf.iter_mut().zip(&self.inv_out) {
            *z *= r;
        }
    }
}

/// Coefficients `c(p_k) = sum_j f(x_j) e^{-i p_k x_j} dx` on the conjugate axis.
pub fn fourier_modes(field: &ComplexField) -> ComplexField {
    let plan = FourierPlan::new(field.axis);
    let mut buf = field.samples.clone();
    plan.forward_in_place(&mut buf);
    ComplexField { axis: plan.modes(), samples: buf }
}

/// Inverse of [`fourier_modes`]; `space` must be the axis the coefficients came from.
pub fn inverse_fourier_modes(coeffs: &ComplexField, space: Axis) -> Result<ComplexField> {
    if !coeffs.axis.approx_eq(&space.wavenumber_axis(), 1e-9) {
        return Err(Error::InvalidAxis(
            "coefficient axis is not the wavenumber axis of the target grid".into(),
        ));
    }
    let plan = FourierPlan::new(space);
    let mut buf = coeffs.samples.clone();
    plan.inverse_in_place(&mut buf);
    Ok(ComplexField { axis: space, samples: buf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn axis_validation_and_midpoints() {
        assert!(Axis::new(0.0, 1.0, 1).is_err());
        assert!(Axis::new(1.0, 1.0, 10).is_err());
        let a = Axis::new(0.0, 1.0, 4).unwrap();
        assert_eq!(a.points(), vec![0.125, 0.375, 0.625, 0.875]);
        assert_eq!(a.nearest_index(0.4), 1);
        assert_eq!(a.nearest_index(-3.0), 0);
    }

    #[test]
    fn integrate_constant_is_exact() {
        let a = Axis::new(0.0, 1.0, 100).unwrap();
        let f = ComplexField::from_fn(a, |_| c(1.0, 0.0));
        assert_eq!(integrate(&f), c(1.0, 0.0));
    }

    #[test]
    fn integrate_odd_function_vanishes() {
        let a = Axis::new(-1.0, 1.0, 101).unwrap();
        let f = ComplexField::from_fn(a, |x| c(x, 0.0));
        assert!(integrate(&f).norm() <= 1e-15);
    }

    #[test]
    fn integrate_full_period_oscillation() {
        let a = Axis::new(0.0, 2.0, 256).unwrap();
        let f = ComplexField::from_fn(a, |x| Complex64::from_polar(1.0, PI * x));
        assert!(integrate(&f).norm() <= 1e-12);
    }

    #[test]
    fn pure_mode_is_a_single_bin() {
        let a = Axis::new(-1.0, 1.0, 128).unwrap();
        let modes = a.wavenumber_axis();
        let p0 = modes.point(70);
        let c = fourier_modes(&ComplexField::plane_wave(a, p0));
        let peak = c.samples[70].norm();
        assert!((peak - 2.0).abs() < 1e-12);
        for (k, z) in c.samples.iter().enumerate() {
            if k != 70 {
                assert!(z.norm() <= 1e-10 * peak, "bin {k}: {}", z.norm());
            }
        }
    }

    #[test]
    fn gaussian_transforms_to_gaussian() {
        let w = 0.05;
        let a = Axis::centered(1.0, 512).unwrap();
        let f = ComplexField::from_fn(a, |x| c((-x * x / (2.0 * w * w)).exp(), 0.0));
        let coeffs = fourier_modes(&f);
        let norm = w * (2.0 * PI).sqrt();
        for k in 0..a.n {
            let p = coeffs.axis.point(k);
            let expect = norm * (-p * p * w * w / 2.0).exp();
            assert!((coeffs.samples[k] - c(expect, 0.0)).norm() < 1e-10, "p = {p}");
        }
        for k in 0..a.n / 2 {
            let d = coeffs.samples[k] - coeffs.samples[a.n - 1 - k];
            assert!(d.norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_rejects_foreign_axis() {
        let a = Axis::new(0.0, 1.0, 16).unwrap();
        let f = fourier_modes(&ComplexField::zeros(a));
        assert!(inverse_fourier_modes(&f, Axis::new(0.0, 2.0, 16).unwrap()).is_err());
    }

    fn random_field() -> impl Strategy<Value = ComplexField> {
        (2usize..200, -5.0f64..5.0, 0.1f64..10.0).prop_flat_map(|(n, x0, len)| {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n).prop_map(move |v| {
                let a = Axis::new(x0, x0 + len, v.len()).unwrap();
                ComplexField::new(a, v.into_iter().map(|(r, i)| c(r, i)).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn parseval(f in random_field()) {
            let coeffs = fourier_modes(&f);
            let lhs = f.energy();
            let rhs = coeffs.samples.iter().map(|z| z.norm_sqr()).sum::<f64>()
                * coeffs.axis.spacing() / (2.0 * PI);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
        }

        #[test]
        fn round_trip(f in random_field()) {
            let back = inverse_fourier_modes(&fourier_modes(&f), f.axis).unwrap();
            prop_assume!(f.energy() > 0.0);
            prop_assert!(back.rel_l2(&f) <= 1e-12);
        }

        #[test]
        fn integrate_is_linear(f in random_field(), ar in -3.0f64..3.0, ai in -3.0f64..3.0, b in -3.0f64..3.0) {
            let a = c(ar, ai);
            let g = ComplexField::from_fn(f.axis, |x| c(x.sin(), x.cos()));
            let combo = ComplexField {
                axis: f.axis,
                samples: f.samples.iter().zip(&g.samples).map(|(u, v)| a * u + v * b).collect(),
            };
            let lhs = integrate(&combo);
            let rhs = a * integrate(&f) + integrate(&g) * b;
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + rhs.norm()));
        }
    }
}
