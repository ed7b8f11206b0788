//! Source models: SPDC pairs, classically correlated ensembles and
//! random-phase ensembles.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Axis, WaveContext, SPEED_OF_LIGHT};

/// Shape of the mode-weight profile on `|p| <= p_max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeProfile {
    Flat,
    /// Amplitude `e^{-p^2 / 2 sigma^2}`.
    Gaussian { sigma: f64 },
}

impl ModeProfile {
    fn amplitude(&self, p: f64) -> f64 {
        match self {
            ModeProfile::Flat => 1.0,
            ModeProfile::Gaussian { sigma } => (-p * p / (2.0 * sigma * sigma)).exp(),
        }
    }
}

/// Spectral amplitude over detuning. Only the degenerate line is computed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SpectralAmplitude {
    #[default]
    Monochromatic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiphotonSource {
    pub omega_p: f64,
    pub p_max: f64,
    pub profile: ModeProfile,
    pub spectrum: SpectralAmplitude,
}

impl BiphotonSource {
    pub fn new(omega_p: f64, p_max: f64, profile: ModeProfile) -> Result<Self> {
        let src = BiphotonSource { omega_p, p_max, profile, spectrum: SpectralAmplitude::Monochromatic };
        src.check_paraxial()?;
        Ok(src)
    }

    pub fn from_pump_wavelength(lambda_p: f64, p_max: f64, profile: ModeProfile) -> Result<Self> {
        BiphotonSource::new(2.0 * PI * SPEED_OF_LIGHT / lambda_p, p_max, profile)
    }

    /// `omega_p / 2c`, the wavenumber of each degenerate photon.
    pub fn paraxial_limit(&self) -> f64 {
        self.omega_p / (2.0 * SPEED_OF_LIGHT)
    }

    fn check_paraxial(&self) -> Result<()> {
        if !(self.p_max > 0.0) || self.p_max >= self.paraxial_limit() {
            return Err(Error::ParaxialViolation { p_max: self.p_max, limit: self.paraxial_limit() });
        }
        Ok(())
    }

    /// Wave context at the degenerate frequency `omega_p / 2`.
    pub fn degenerate_context(&self) -> WaveContext {
        WaveContext { omega: self.omega_p / 2.0, c: SPEED_OF_LIGHT }
    }

    /// Idler wavenumber paired with signal wavenumber `p`.
    pub fn pairing(p: f64) -> f64 {
        -p
    }
}

/// Mode weights `f(p_k)` with `sum |f|^2 dp = 1` on the modes with `|p| <= p_max`.
pub fn spdc_mode_weights(src: &BiphotonSource, mode_axis: &Axis) -> Result<Vec<f64>> {
    src.check_paraxial()?;
    normalized_amplitudes(src.profile, src.p_max, mode_axis)
}

fn normalized_amplitudes(profile: ModeProfile, p_max: f64, axis: &Axis) -> Result<Vec<f64>> {
    let raw: Vec<f64> = axis
        .points()
        .into_iter()
        .map(|p| if p.abs() <= p_max { profile.amplitude(p) } else { 0.0 })
        .collect();
    let norm = raw.iter().map(|f| f * f).sum::<f64>() * axis.spacing();
    if norm <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "no mode of the grid lies inside |p| <= {p_max}"
        )));
    }
    let s = norm.sqrt();
    Ok(raw.into_iter().map(|f| f / s).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalEnsemble {
    /// Pairing scale: mode `p` in arm A goes with `p / epsilon` in arm B.
    pub epsilon: f64,
    pub p_max: f64,
    pub profile: ModeProfile,
}

impl ClassicalEnsemble {
    pub fn new(epsilon: f64, p_max: f64, profile: ModeProfile) -> Result<Self> {
        if epsilon == 0.0 || !epsilon.is_finite() {
            return Err(Error::InvalidArgument("epsilon must be finite and nonzero".into()));
        }
        Ok(ClassicalEnsemble { epsilon, p_max, profile })
    }

    /// Probability weights `w(p_k) >= 0` with `sum w dp = 1`.
    pub fn weights(&self, mode_axis: &Axis) -> Result<Vec<f64>> {
        Ok(normalized_amplitudes(self.profile, self.p_max, mode_axis)?
            .into_iter()
            .map(|f| f * f)
            .collect())
    }
}

/// Arm-B mode index paired with arm-A mode `j` under `p_B = p_A / epsilon`,
/// snapped to the nearest bin (halves round up). `None` when off the grid.
pub fn classical_partner(j: usize, epsilon: f64, modes: usize) -> Option<usize> {
    let centre = (modes as f64 - 1.0) / 2.0;
    let r = ((j as f64 - centre) / epsilon + centre + 0.5).floor();
    (r >= 0.0 && r < modes as f64).then_some(r as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseMode {
    /// Independent phases uniform on `[0, 2 pi)`.
    Uniform,
    /// All phases zero: the ensemble collapses to one coherent realization.
    Frozen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandomPhaseEnsemble {
    pub p_max: f64,
    pub profile: ModeProfile,
    pub seed: u64,
    pub phases: PhaseMode,
}

impl RandomPhaseEnsemble {
    pub fn weights(&self, mode_axis: &Axis) -> Result<Vec<f64>> {
        Ok(normalized_amplitudes(self.profile, self.p_max, mode_axis)?
            .into_iter()
            .map(|f| f * f)
            .collect())
    }
}

/// Explicit phase generator; callers own and advance it.
#[derive(Debug, Clone)]
pub struct PhaseGenerator {
    rng: ChaCha8Rng,
}

impl PhaseGenerator {
    pub fn new(seed: u64) -> Self {
        PhaseGenerator { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Independent stream for realization `index`, fixed by `(seed, index)`.
    pub fn for_realization(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        PhaseGenerator { rng }
    }

    fn phase(&mut self) -> f64 {
        self.rng.random_range(0.0..2.0 * PI)
    }
}

/// One realization of the arm-A and arm-B phases, one per mode.
pub fn draw_realization(
    ens: &RandomPhaseEnsemble,
    generator: &mut PhaseGenerator,
    modes: usize,
) -> (Vec<f64>, Vec<f64>) {
    match ens.phases {
        PhaseMode::Frozen => (vec![0.0; modes], vec![0.0; modes]),
        PhaseMode::Uniform => {
            let a = (0..modes).map(|_| generator.phase()).collect();
            let b = (0..modes).map(|_| generator.phase()).collect();
            (a, b)
        }
    }
}

/// Any of the three source kinds.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceModel {
    Spdc(BiphotonSource),
    Classical(ClassicalEnsemble),
    RandomPhase(RandomPhaseEnsemble),
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn src(p_max: f64, profile: ModeProfile) -> BiphotonSource {
        BiphotonSource::from_pump_wavelength(351e-9, p_max, profile).unwrap()
    }

    fn norm(f: &[f64], axis: &Axis) -> f64 {
        f.iter().map(|v| v * v).sum::<f64>() * axis.spacing()
    }

    #[test]
    fn flat_weights_are_equal_and_normalized() {
        let axis = Axis::centered(1e5, 256).unwrap();
        let f = spdc_mode_weights(&src(1e5, ModeProfile::Flat), &axis).unwrap();
        assert!(f.iter().all(|v| (v - f[0]).abs() < 1e-15));
        assert!((norm(&f, &axis) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn halving_support_rescales_by_sqrt2() {
        let axis = Axis::centered(1e5, 256).unwrap();
        let full = spdc_mode_weights(&src(1e5, ModeProfile::Flat), &axis).unwrap();
        let half = spdc_mode_weights(&src(0.5e5, ModeProfile::Flat), &axis).unwrap();
        assert_eq!(half.iter().filter(|v| **v > 0.0).count(), 128);
        let inside = half.iter().find(|v| **v > 0.0).unwrap();
        assert!((inside / full[0] - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn gaussian_profile_matches_closed_form() {
        let sigma = 2e4;
        let axis = Axis::centered(2e5, 2000).unwrap();
        let f = spdc_mode_weights(&src(2e5, ModeProfile::Gaussian { sigma }), &axis).unwrap();
        // far tails are negligible, so the continuum constant (sigma sqrt(pi))^{-1/2} applies
        let c = (sigma * PI.sqrt()).powf(-0.5);
        for (k, v) in f.iter().enumerate() {
            let p = axis.point(k);
            assert!((v - c * (-p * p / (2.0 * sigma * sigma)).exp()).abs() < 1e-12 * c);
        }
    }

    #[test]
    fn paraxial_bound_is_enforced() {
        let limit = src(1.0, ModeProfile::Flat).paraxial_limit();
        assert!((limit - 2.0 * PI / 702e-9).abs() < 1e-3);
        let err = BiphotonSource::from_pump_wavelength(351e-9, limit, ModeProfile::Flat);
        assert!(matches!(err, Err(Error::ParaxialViolation { .. })));
    }

    #[test]
    fn pairing_is_an_involution() {
        for p in [0.0, 1.5e4, -3.25e4, f64::MIN_POSITIVE] {
            assert_eq!(BiphotonSource::pairing(BiphotonSource::pairing(p)), p);
        }
    }

    #[test]
    fn flat_pair_state_is_maximally_entangled_on_its_support() {
        // reduced single-arm distribution |f_j|^2 is uniform over the kept modes
        let axis = Axis::centered(1e5, 100).unwrap();
        let f = spdc_mode_weights(&src(1e5, ModeProfile::Flat), &axis).unwrap();
        let probs: Vec<f64> = f.iter().map(|v| v * v * axis.spacing()).collect();
        for q in &probs {
            assert!((q - 1.0 / 100.0).abs() < 1e-15);
        }
    }

    #[test]
    fn classical_partner_rules() {
        for j in 0..11 {
            assert_eq!(classical_partner(j, 1.0, 11), Some(j));
            assert_eq!(classical_partner(j, -1.0, 11), Some(10 - j));
        }
        assert_eq!(classical_partner(0, 0.5, 11), None);
        assert_eq!(classical_partner(5, 0.5, 11), Some(5));
        assert_eq!(classical_partner(7, 2.0, 11), Some(6));
        assert_eq!(classical_partner(3, 2.0, 11), Some(4));
        assert!(ClassicalEnsemble::new(0.0, 1.0, ModeProfile::Flat).is_err());
    }

    #[test]
    fn classical_weights_are_a_density() {
        let axis = Axis::centered(1e5, 64).unwrap();
        let e = ClassicalEnsemble::new(1.0, 6e4, ModeProfile::Flat).unwrap();
        let w = e.weights(&axis).unwrap();
        assert!(w.iter().all(|v| *v >= 0.0));
        assert!((w.iter().sum::<f64>() * axis.spacing() - 1.0).abs() < 1e-12);
    }

    fn ensemble(phases: PhaseMode) -> RandomPhaseEnsemble {
        RandomPhaseEnsemble { p_max: 1e5, profile: ModeProfile::Flat, seed: 42, phases }
    }

    #[test]
    fn realizations_are_reproducible() {
        let e = ensemble(PhaseMode::Uniform);
        let a = draw_realization(&e, &mut PhaseGenerator::new(42), 16);
        let b = draw_realization(&e, &mut PhaseGenerator::new(42), 16);
        assert_eq!(a, b);
        let c = draw_realization(&e, &mut PhaseGenerator::for_realization(42, 1), 16);
        assert_ne!(a, c);
        assert!(a.0.iter().chain(&a.1).all(|t| (0.0..2.0 * PI).contains(t)));
        let frozen = draw_realization(&ensemble(PhaseMode::Frozen), &mut PhaseGenerator::new(1), 4);
        assert_eq!(frozen, (vec![0.0; 4], vec![0.0; 4]));
    }

    #[test]
    fn phases_have_zero_mean_and_are_independent() {
        let e = ensemble(PhaseMode::Uniform);
        let mut g = PhaseGenerator::new(7);
        let n = 100_000;
        let mut mean = Complex64::new(0.0, 0.0);
        let mut cross = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let (a, b) = draw_realization(&e, &mut g, 1);
            mean += Complex64::from_polar(1.0, a[0]);
            cross += Complex64::from_polar(1.0, a[0] - b[0]);
        }
        assert!((mean / n as f64).norm() <= 0.02);
        assert!((cross / n as f64).norm() <= 0.02);
    }
}
