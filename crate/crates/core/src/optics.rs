//! Optical elements, arm transfer matrices and closed-form propagators.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Axis, ComplexField, FourierPlan, WaveContext};

/// Relative amplitude below which samples and spectral bins are ignored by
/// the sampling guards.
const GUARD_FLOOR: f64 = 1e-6;

/// On-axis phase `k d`, reduced to `[0, 2 pi)` so that large optical path
/// lengths do not swamp the mode-dependent phases.
fn carrier_phase(k: f64, d: f64) -> f64 {
    (k * d).rem_euclid(2.0 * PI)
}

/// `e^{i q x^2 / 2}`.
pub fn quadratic_phase(x: f64, q: f64) -> Complex64 {
    Complex64::from_polar(1.0, 0.5 * q * x * x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaskTable {
    pub label: String,
    pub xs: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl MaskTable {
    pub fn new(label: impl Into<String>, xs: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if xs.len() != values.len() || xs.len() < 2 {
            return Err(Error::InvalidArgument(
                "mask table needs at least two (x, amplitude) rows".into(),
            ));
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument("mask table x values must increase".into()));
        }
        if values.iter().any(|v| v.norm() > 1.0 + 1e-12) {
            return Err(Error::InvalidArgument("mask amplitudes must satisfy |t| <= 1".into()));
        }
        Ok(MaskTable { label: label.into(), xs, values })
    }

    /// Linear interpolation; zero outside the tabulated range.
    pub fn eval(&self, x: f64) -> Complex64 {
        let last = self.xs.len() - 1;
        if x < self.xs[0] || x > self.xs[last] {
            return Complex64::new(0.0, 0.0);
        }
        let i = self.xs.partition_point(|&v| v <= x).clamp(1, last);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let s = (x - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - s) + self.values[i] * s
    }
}

/// Reads a mask table: one `x_m amplitude [imag]` row per line, separated by
/// whitespace or commas. Blank lines and `#` comments are skipped.
pub fn load_mask_file(path: &Path) -> Result<MaskTable> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut xs = Vec::new();
    let mut values = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| {
                Error::InvalidArgument(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
        match cols.as_slice() {
            [x, re] => {
                xs.push(*x);
                values.push(Complex64::new(*re, 0.0));
            }
            [x, re, im] => {
                xs.push(*x);
                values.push(Complex64::new(*re, *im));
            }
            _ => {
                return Err(Error::InvalidArgument(format!(
                    "{}:{}: expected 2 or 3 columns",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    MaskTable::new(path.display().to_string(), xs, values)
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskProfile {
    /// Two open slits of width `width` centred at `+-separation/2`.
    DoubleSlit { separation: f64, width: f64 },
    SingleSlit { width: f64 },
    /// Amplitude `e^{-x^2 / 2 w^2}`.
    Gaussian { width: f64 },
    Table(MaskTable),
}

impl MaskProfile {
    pub fn transmission(&self, x: f64) -> Complex64 {
        let open = |inside: bool| Complex64::new(if inside { 1.0 } else { 0.0 }, 0.0);
        match self {
            MaskProfile::DoubleSlit { separation, width } => open(
                (x - separation / 2.0).abs() < width / 2.0
                    || (x + separation / 2.0).abs() < width / 2.0,
            ),
            MaskProfile::SingleSlit { width } => open(x.abs() < width / 2.0),
            MaskProfile::Gaussian { width } => {
                Complex64::new((-x * x / (2.0 * width * width)).exp(), 0.0)
            }
            MaskProfile::Table(t) => t.eval(x),
        }
    }

    /// `|t(x)|^2`, the ideal image of the mask.
    pub fn intensity(&self, x: f64) -> f64 {
        self.transmission(x).norm_sqr()
    }

    pub fn sample(&self, axis: &Axis) -> ComplexField {
        ComplexField::from_fn(*axis, |x| self.transmission(x))
    }

    fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::InvalidArgument(format!("mask {name} must be positive, got {v}")))
            }
        };
        match self {
            MaskProfile::DoubleSlit { separation, width } => {
                positive("separation", *separation)?;
                positive("width", *width)
            }
            MaskProfile::SingleSlit { width } | MaskProfile::Gaussian { width } => {
                positive("width", *width)
            }
            MaskProfile::Table(_) => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    FreeSpace { d: f64 },
    ThinLens { f: f64 },
    Mask(MaskProfile),
    /// Gaussian aperture `e^{-x^2 / 2A}`, `A` in m^2.
    GaussianPupil { a: f64 },
}

impl Element {
    pub fn validate(&self) -> Result<()> {
        match self {
            Element::FreeSpace { d } if !(d.is_finite() && *d > 0.0) => Err(
                Error::InvalidArgument(format!("free-space distance must be positive, got {d}")),
            ),
            Element::ThinLens { f } if *f == 0.0 || f.is_nan() => {
                Err(Error::InvalidArgument("focal length must be nonzero".into()))
            }
            Element::GaussianPupil { a } if !(a.is_finite() && *a > 0.0) => Err(
                Error::InvalidArgument(format!("pupil area scale must be positive, got {a}")),
            ),
            Element::Mask(m) => m.validate(),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BucketMode {
    /// `sum |A|^2 dx`: a many-pixel bucket.
    IntensitySum,
    /// `|sum A dx|^2`: amplitude-level integration over the detector plane.
    Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DetectorSpec {
    PointArray { axis: Axis },
    Bucket { axis: Axis, mode: BucketMode },
    /// Collects only the zero transverse wavenumber component.
    FarFieldPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmSpec {
    pub elements: Vec<Element>,
    pub detector: DetectorSpec,
}

impl ArmSpec {
    pub fn new(elements: Vec<Element>, detector: DetectorSpec) -> Result<Self> {
        for e in &elements {
            e.validate()?;
        }
        Ok(ArmSpec { elements, detector })
    }
}

/// Simulation window plus the band of input modes it carries.
///
/// The input modes are exactly the grid wavenumbers with `|p| <= p_max`, so
/// every mode is an eigenmode of the discrete free-space propagator and the
/// pairing `p -> -p` maps mode `j` to `M - 1 - j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimGrid {
    pub space: Axis,
    pub modes: Axis,
    first_bin: usize,
}

impl SimGrid {
    pub fn new(n: usize, extent: f64, p_max: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidAxis(format!("grid size must be even, got {n}")));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::InvalidAxis(format!("extent must be positive, got {extent}")));
        }
        let space = Axis::centered(extent / 2.0, n)?;
        let waves = space.wavenumber_axis();
        let dp = waves.spacing();
        let count = (0..n).filter(|&k| waves.point(k).abs() <= p_max).count();
        if count < 2 {
            return Err(Error::InvalidAxis(format!(
                "p_max = {p_max} keeps fewer than 2 modes (mode spacing {dp})"
            )));
        }
        let half = count as f64 * dp / 2.0;
        let modes = Axis::new(-half, half, count)?;
        Ok(SimGrid { space, modes, first_bin: (n - count) / 2 })
    }

    pub fn mode_count(&self) -> usize {
        self.modes.n
    }

    /// Grid wavenumber bin of mode `j`.
    pub fn bin_of_mode(&self, j: usize) -> usize {
        self.first_bin + j
    }

    /// Index of the paired mode `-p`.
    pub fn partner(&self, j: usize) -> usize {
        self.modes.n - 1 - j
    }
}

/// Sampled `g(x_out; p)` in polar form, row-major over `(x_out, p)`.
///
/// Modulus and phase are stored separately, plus a per-mode phase offset,
/// so pure-phase perturbations leave every modulus bit for bit unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    pub out_axis: Axis,
    pub mode_axis: Axis,
    modulus: Vec<f64>,
    phase: Vec<f64>,
    mode_phase: Vec<f64>,
}

impl TransferMatrix {
    pub fn from_complex(out_axis: Axis, mode_axis: Axis, entries: &[Complex64]) -> Result<Self> {
        if entries.len() != out_axis.n * mode_axis.n {
            return Err(Error::InvalidArgument(format!(
                "expected {} entries, got {}",
                out_axis.n * mode_axis.n,
                entries.len()
            )));
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("transfer matrix has non-finite entries".into()));
        }
        let (modulus, phase) = entries.iter().map(|z| z.to_polar()).unzip();
        Ok(TransferMatrix {
            out_axis,
            mode_axis,
            modulus,
            phase,
            mode_phase: vec![0.0; mode_axis.n],
        })
    }

    /// `g = 1` everywhere: a detector that sees every mode with unit response.
    pub fn unit(out_axis: Axis, mode_axis: Axis) -> Self {
        let len = out_axis.n * mode_axis.n;
        TransferMatrix {
            out_axis,
            mode_axis,
            modulus: vec![1.0; len],
            phase: vec![0.0; len],
            mode_phase: vec![0.0; mode_axis.n],
        }
    }

    pub fn rows(&self) -> usize {
        self.out_axis.n
    }

    pub fn cols(&self) -> usize {
        self.mode_axis.n
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        let k = i * self.cols() + j;
        Complex64::from_polar(self.modulus[k], self.phase[k] + self.mode_phase[j])
    }

    /// `|g(x_i, p_j)|^2` straight from the stored modulus.
    pub fn intensity(&self, i: usize, j: usize) -> f64 {
        let m = self.modulus[i * self.cols() + j];
        m * m
    }

    pub fn modulus(&self) -> &[f64] {
        &self.modulus
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        let cols = self.cols();
        (0..self.modulus.len()).map(|k| self.entry(k / cols, k % cols)).collect()
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows()).map(|i| self.entry(i, j)).collect()
    }

    pub fn row(&self, i: usize) -> Vec<Complex64> {
        (0..self.cols()).map(|j| self.entry(i, j)).collect()
    }

    /// True when row `i` vanishes for every mode.
    pub fn row_is_zero(&self, i: usize) -> bool {
        let c = self.cols();
        self.modulus[i * c..(i + 1) * c].iter().all(|&m| m == 0.0)
    }

    /// `sum_i |g(x_i, p_j)|^2 dx`.
    pub fn integrated_intensity(&self, j: usize) -> f64 {
        (0..self.rows()).map(|i| self.intensity(i, j)).sum::<f64>() * self.out_axis.spacing()
    }

    /// `|sum_i g(x_i, p_j) dx|`. A per-mode phase is a common factor of the
    /// column and drops out of the modulus, so it is left unapplied.
    pub fn integrated_modulus(&self, j: usize) -> f64 {
        let c = self.cols();
        let sum: Complex64 = (0..self.rows())
            .map(|i| Complex64::from_polar(self.modulus[i * c + j], self.phase[i * c + j]))
            .sum();
        sum.norm() * self.out_axis.spacing()
    }

    /// `sum_i g(x_i, p_j) dx`, including any per-mode phase.
    pub fn integrated_amplitude(&self, j: usize) -> Complex64 {
        (0..self.rows()).map(|i| self.entry(i, j)).sum::<Complex64>() * self.out_axis.spacing()
    }

    /// Multiplies column `j` by `e^{i theta_j}`.
    pub fn with_mode_phases(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != self.cols() {
            return Err(Error::DimMismatch { expected: self.cols(), got: theta.len() });
        }
        let mode_phase = self.mode_phase.iter().zip(theta).map(|(a, b)| a + b).collect();
        Ok(TransferMatrix { mode_phase, ..self.clone() })
    }

    /// Multiplies every entry by its own pure phase (row-major over `(x, p)`).
    pub fn with_entry_phases(&self, theta: &[f64]) -> Result<Self> {
        if theta.len() != self.phase.len() {
            return Err(Error::DimMismatch { expected: self.phase.len(), got: theta.len() });
        }
        let phase = self.phase.iter().zip(theta).map(|(a, b)| a + b).collect();
        Ok(TransferMatrix { phase, ..self.clone() })
    }
}

/// Element application on a fixed grid with cached FFT plans.
#[derive(Debug, Clone)]
pub struct Propagator {
    plan: FourierPlan,
    k: f64,
    xs: Vec<f64>,
    waves: Vec<f64>,
}

impl Propagator {
    pub fn new(space: Axis, ctx: &WaveContext) -> Self {
        let plan = FourierPlan::new(space);
        let waves = plan.modes().points();
        Propagator { plan, k: ctx.k(), xs: space.points(), waves }
    }

    pub fn plan(&self) -> &FourierPlan {
        &self.plan
    }

    pub fn apply(&self, buf: &mut [Complex64], elem: &Element) -> Result<()> {
        match elem {
            Element::FreeSpace { d } => {
                self.plan.forward_in_place(buf);
                self.check_paraxial(buf)?;
                let carrier = carrier_phase(self.k, *d);
                for (z, &p) in buf.iter_mut().zip(&self.waves) {
                    *z *= Complex64::from_polar(1.0, carrier - d * p * p / (2.0 * self.k));
                }
                self.plan.inverse_in_place(buf);
            }
            Element::ThinLens { f } => {
                self.check_lens(buf, *f)?;
                let q = -self.k / f;
                for (z, &x) in buf.iter_mut().zip(&self.xs) {
                    *z *= quadratic_phase(x, q);
                }
            }
            Element::Mask(m) => {
                for (z, &x) in buf.iter_mut().zip(&self.xs) {
                    *z *= m.transmission(x);
                }
            }
            Element::GaussianPupil { a } => {
                for (z, &x) in buf.iter_mut().zip(&self.xs) {
                    *z *= (-x * x / (2.0 * a)).exp();
                }
            }
        }
        Ok(())
    }

    fn check_paraxial(&self, spectrum: &[Complex64]) -> Result<()> {
        let peak = spectrum.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let limit = self.k / 2.0;
        let offending = spectrum
            .iter()
            .zip(&self.waves)
            .any(|(z, p)| p.abs() >= limit && z.norm() > GUARD_FLOOR * peak);
        if offending {
            return Err(Error::SamplingViolation(format!(
                "field has spectral content beyond the paraxial limit |p| < {limit:.3e} rad/m"
            )));
        }
        Ok(())
    }

    /// The lens chirp adds a local wavenumber `k x / f` on top of the
    /// field's own band; the sum must stay under the grid Nyquist limit.
    fn check_lens(&self, buf: &[Complex64], f: f64) -> Result<()> {
        let peak = buf.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Ok(());
        }
        let reach = buf
            .iter()
            .zip(&self.xs)
            .filter(|(z, _)| z.norm() > GUARD_FLOOR * peak)
            .map(|(_, x)| x.abs())
            .fold(0.0, f64::max);
        let mut spec = buf.to_vec();
        self.plan.forward_in_place(&mut spec);
        let speak = spec.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let band = spec
            .iter()
            .zip(&self.waves)
            .filter(|(z, _)| z.norm() > GUARD_FLOOR * speak)
            .map(|(_, p)| p.abs())
            .fold(0.0, f64::max);
        let dx = self.plan.space().spacing();
        let step = (self.k * reach / f.abs() + band) * dx;
        if step > PI {
            return Err(Error::SamplingViolation(format!(
                "lens f = {f} m changes phase by {step:.3} rad per sample (limit pi); \
                 refine the grid or shrink the window"
            )));
        }
        Ok(())
    }
}

/// Applies one element to a field.
pub fn propagate(field: &ComplexField, elem: &Element, ctx: &WaveContext) -> Result<ComplexField> {
    elem.validate()?;
    let prop = Propagator::new(field.axis, ctx);
    let mut buf = field.samples.clone();
    prop.apply(&mut buf, elem)?;
    Ok(ComplexField { axis: field.axis, samples: buf })
}

/// Band-limited evaluation of a grid field at arbitrary detector points.
struct Sampler {
    table: Option<Vec<Complex64>>,
    n_out: usize,
}

impl Sampler {
    fn new(space: &Axis, out: &Axis) -> Self {
        if out.approx_eq(space, 1e-12) {
            return Sampler { table: None, n_out: out.n };
        }
        let waves = space.wavenumber_axis();
        let w = waves.spacing() / (2.0 * PI);
        let ps = waves.points();
        let table = (0..out.n)
            .flat_map(|i| {
                let x = out.point(i);
                ps.iter().map(move |&p| Complex64::from_polar(w, p * x)).collect::<Vec<_>>()
            })
            .collect();
        Sampler { table: Some(table), n_out: out.n }
    }

    fn sample(&self, plan: &FourierPlan, mut field: Vec<Complex64>) -> Vec<Complex64> {
        match &self.table {
            None => field,
            Some(table) => {
                plan.forward_in_place(&mut field);
                let n = field.len();
                (0..self.n_out)
                    .map(|i| {
                        table[i * n..(i + 1) * n]
                            .iter()
                            .zip(&field)
                            .map(|(a, b)| a * b)
                            .sum()
                    })
                    .collect()
            }
        }
    }
}

/// Detector-plane axis an arm reports on.
pub fn detector_axis(det: &DetectorSpec, grid: &SimGrid) -> Axis {
    match det {
        DetectorSpec::PointArray { axis } | DetectorSpec::Bucket { axis, .. } => *axis,
        DetectorSpec::FarFieldPoint => grid.space,
    }
}

/// Launches each input mode `e^{ipx}` through the arm and records the field
/// on the detector axis. Columns are computed independently in parallel and
/// assembled in mode order.
pub fn arm_transfer(arm: &ArmSpec, ctx: &WaveContext, grid: &SimGrid) -> Result<TransferMatrix> {
    for e in &arm.elements {
        e.validate()?;
    }
    let prop = Propagator::new(grid.space, ctx);
    let out_axis = detector_axis(&arm.detector, grid);
    let sampler = Sampler::new(&grid.space, &out_axis);
    let columns: Vec<Vec<Complex64>> = (0..grid.mode_count())
        .into_par_iter()
        .map(|j| {
            let p = grid.modes.point(j);
            let mut buf = ComplexField::plane_wave(grid.space, p).samples;
            for e in &arm.elements {
                prop.apply(&mut buf, e)?;
            }
            Ok(sampler.sample(prop.plan(), buf))
        })
        .collect::<Result<_>>()?;
    let m = grid.mode_count();
    let mut entries = vec![Complex64::new(0.0, 0.0); out_axis.n * m];
    for (j, col) in columns.iter().enumerate() {
        for (i, z) in col.iter().enumerate() {
            entries[i * m + j] = *z;
        }
    }
    TransferMatrix::from_complex(out_axis, grid.modes, &entries)
}

/// Free propagation of mode `p` over `d`: `e^{ikd} e^{ipx} e^{-i d p^2 / 2k}`.
pub fn analytic_gb_free(ctx: &WaveContext, d: f64, x: f64, p: f64) -> Complex64 {
    let k = ctx.k();
    Complex64::from_polar(1.0, carrier_phase(k, d) + p * x - d * p * p / (2.0 * k))
}

/// Field of mode `p` after `d1`, a thin lens `f` and `d1p`, before the mask.
///
/// With `q = 1/d1p - 1/f` the result is a tilted, curved wave
/// `pref e^{ik(d1+d1p)} e^{-i D p^2/2k} e^{i p x f/(f-d1p)} e^{-i k x^2 / 2(f-d1p)}`
/// where `D = d1 + d1p f/(f-d1p)`.
pub fn image_arm_field(
    ctx: &WaveContext,
    d1: f64,
    f: f64,
    d1p: f64,
    x: f64,
    p: f64,
) -> Result<Complex64> {
    let k = ctx.k();
    let carrier = carrier_phase(k, d1 + d1p);
    if f.is_infinite() {
        return Ok(analytic_gb_free(ctx, d1 + d1p, x, p));
    }
    if (f - d1p).abs() <= 1e-12 * f.abs().max(d1p.abs()) {
        return Err(Error::DegenerateGeometry(format!(
            "lens focal length {f} m equals the lens-to-detector distance"
        )));
    }
    let q = 1.0 / d1p - 1.0 / f;
    let pref = if q > 0.0 {
        Complex64::new(1.0 / (q * d1p).sqrt(), 0.0)
    } else {
        Complex64::new(0.0, -1.0 / (-q * d1p).sqrt())
    };
    let ratio = f / (f - d1p);
    let big_d = d1 + d1p * ratio;
    let phase = carrier - big_d * p * p / (2.0 * k) + p * x * ratio - k * x * x / (2.0 * (f - d1p));
    Ok(pref * Complex64::from_polar(1.0, phase))
}

/// Closed-form image-arm response of a bucket placed right behind the mask:
/// `integral t(x) u(x; p) dx` evaluated by midpoint quadrature on `axis`.
pub fn analytic_ga_image(
    ctx: &WaveContext,
    d1: f64,
    f: f64,
    d1p: f64,
    mask: &MaskProfile,
    axis: &Axis,
    p: f64,
) -> Result<Complex64> {
    let mut acc = Complex64::new(0.0, 0.0);
    for x in axis.points() {
        let t = mask.transmission(x);
        if t != Complex64::new(0.0, 0.0) {
            acc += t * image_arm_field(ctx, d1, f, d1p, x, p)?;
        }
    }
    Ok(acc * axis.spacing())
}

/// On-axis field of mode `p` after `d1`, the mask, and `d1p`, with the
/// remaining Fresnel integral over the mask plane done on `axis`.
pub fn analytic_ga_ghost(
    ctx: &WaveContext,
    d1: f64,
    d1p: f64,
    mask: &MaskProfile,
    axis: &Axis,
    p: f64,
) -> Result<Complex64> {
    if !(d1 > 0.0 && d1p > 0.0) {
        return Err(Error::InvalidArgument("ghost-arm distances must be positive".into()));
    }
    let k = ctx.k();
    let lead = Complex64::from_polar(1.0, carrier_phase(k, d1 + d1p) - d1 * p * p / (2.0 * k));
    let kernel = (Complex64::new(k, 0.0) / Complex64::new(0.0, 2.0 * PI * d1p)).sqrt();
    let sum: Complex64 = axis
        .points()
        .into_iter()
        .map(|xa| mask.transmission(xa) * Complex64::from_polar(1.0, k * xa * xa / (2.0 * d1p) + p * xa))
        .sum();
    Ok(lead * kernel * sum * axis.spacing())
}

/// Focal-plane intensity response behind a Gaussian pupil and lens `f2`:
/// `(k/f2) A^2 e^{-(p - k x2/f2)^2 A}`.
pub fn analytic_gb_focal(ctx: &WaveContext, f2: f64, a: f64, x2: f64, p: f64) -> f64 {
    let k = ctx.k();
    let u = p - k * x2 / f2;
    (k / f2) * a * a * (-u * u * a).exp()
}

/// True when the focal response is narrower (in `p`) than half a mode step,
/// so it acts as a Kronecker delta on the mode grid.
pub fn focal_is_delta(a: f64, mode_spacing: f64) -> bool {
    1.0 / (2.0 * a).sqrt() <= 0.5 * mode_spacing
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ctx() -> WaveContext {
        WaveContext::from_wavelength(702e-9).unwrap()
    }

    fn array(half: f64, n: usize) -> DetectorSpec {
        DetectorSpec::PointArray { axis: Axis::centered(half, n).unwrap() }
    }

    #[test]
    fn quadratic_phase_values() {
        assert_eq!(quadratic_phase(3.7, 0.0), Complex64::new(1.0, 0.0));
        let z = quadratic_phase(1.0, PI);
        assert!((z - Complex64::new(0.0, 1.0)).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn quadratic_phase_is_unit_modulus(x in -1e3f64..1e3, q in -1e6f64..1e6) {
            prop_assert!((quadratic_phase(x, q).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sim_grid_mode_band() {
        let g = SimGrid::new(2048, 0.0256, 1.2566e5).unwrap();
        assert_eq!(g.mode_count(), 1024);
        let waves = g.space.wavenumber_axis();
        for j in [0, 17, 1023] {
            assert!((g.modes.point(j) - waves.point(g.bin_of_mode(j))).abs() < 1e-6);
            assert!((g.modes.point(j) + g.modes.point(g.partner(j))).abs() < 1e-6);
        }
        assert!(SimGrid::new(2047, 0.0256, 1e5).is_err());
    }

    #[test]
    fn element_validation() {
        assert!(Element::FreeSpace { d: 0.0 }.validate().is_err());
        assert!(Element::ThinLens { f: 0.0 }.validate().is_err());
        assert!(Element::ThinLens { f: -0.2 }.validate().is_ok());
        assert!(Element::GaussianPupil { a: -1.0 }.validate().is_err());
        assert!(Element::Mask(MaskProfile::SingleSlit { width: 0.0 }).validate().is_err());
    }

    #[test]
    fn slit_edges_are_open_intervals() {
        let m = MaskProfile::SingleSlit { width: 2.0 };
        assert_eq!(m.intensity(0.999), 1.0);
        assert_eq!(m.intensity(1.0), 0.0);
        let d = MaskProfile::DoubleSlit { separation: 4.0, width: 1.0 };
        assert_eq!(d.intensity(2.2), 1.0);
        assert_eq!(d.intensity(0.0), 0.0);
    }

    #[test]
    fn plane_wave_through_free_space_matches_mode_phase() {
        let c = ctx();
        let g = SimGrid::new(256, 0.01, 1e5).unwrap();
        let p = g.modes.point(40);
        let out = propagate(
            &ComplexField::plane_wave(g.space, p),
            &Element::FreeSpace { d: 0.7 },
            &c,
        )
        .unwrap();
        for (k, z) in out.samples.iter().enumerate() {
            let want = analytic_gb_free(&c, 0.7, g.space.point(k), p);
            assert!((z - want).norm() < 1e-10);
        }
    }

    #[test]
    fn infinite_focal_length_is_identity() {
        let a = Axis::centered(0.005, 512).unwrap();
        let f = ComplexField::from_fn(a, |x| Complex64::new((-x * x / 1e-6).exp(), x * 100.0));
        let out = propagate(&f, &Element::ThinLens { f: f64::INFINITY }, &ctx()).unwrap();
        assert!(out.rel_l2(&f) < 1e-12);
    }

    fn rms_width(f: &ComplexField) -> f64 {
        let w: Vec<f64> = f.samples.iter().map(|z| z.norm_sqr()).collect();
        let total: f64 = w.iter().sum();
        let xs = f.axis.points();
        let mean: f64 = w.iter().zip(&xs).map(|(a, x)| a * x).sum::<f64>() / total;
        (w.iter().zip(&xs).map(|(a, x)| a * (x - mean).powi(2)).sum::<f64>() / total).sqrt()
    }

    #[test]
    fn gaussian_beam_spreads_as_predicted() {
        let c = ctx();
        let w0 = 1e-4;
        let z = 0.5;
        let a = Axis::centered(0.008, 4096).unwrap();
        let beam = ComplexField::from_fn(a, |x| Complex64::new((-x * x / (2.0 * w0 * w0)).exp(), 0.0));
        let out = propagate(&beam, &Element::FreeSpace { d: z }, &c).unwrap();
        let zr = c.k() * w0 * w0;
        let predicted = w0 * (1.0 + (z / zr).powi(2)).sqrt() / 2f64.sqrt();
        let got = rms_width(&out);
        assert!((got / predicted - 1.0).abs() < 1e-3, "{got} vs {predicted}");
    }

    #[test]
    fn lossless_elements_preserve_energy() {
        let c = ctx();
        let a = Axis::centered(0.005, 1024).unwrap();
        let f = ComplexField::from_fn(a, |x| {
            Complex64::new((-x * x / 2e-7).exp(), 0.3 * (-(x - 1e-3).powi(2) / 1e-7).exp())
        });
        for e in [Element::FreeSpace { d: 0.3 }, Element::ThinLens { f: 0.5 }] {
            let out = propagate(&f, &e, &c).unwrap();
            assert!((out.energy() / f.energy() - 1.0).abs() < 1e-10);
        }
        for e in [
            Element::Mask(MaskProfile::DoubleSlit { separation: 1e-3, width: 2e-4 }),
            Element::GaussianPupil { a: 1e-7 },
        ] {
            assert!(propagate(&f, &e, &c).unwrap().energy() <= f.energy());
        }
    }

    #[test]
    fn strong_lens_on_coarse_grid_is_rejected() {
        let a = Axis::centered(0.02, 256).unwrap();
        let f = ComplexField::from_fn(a, |_| Complex64::new(1.0, 0.0));
        let err = propagate(&f, &Element::ThinLens { f: 0.05 }, &ctx()).unwrap_err();
        assert!(matches!(err, Error::SamplingViolation(_)));
    }

    #[test]
    fn empty_arm_is_identity() {
        let g = SimGrid::new(256, 0.01, 1e5).unwrap();
        let arm = ArmSpec::new(vec![], array(0.003, 17)).unwrap();
        let t = arm_transfer(&arm, &ctx(), &g).unwrap();
        for i in 0..t.rows() {
            for j in 0..t.cols() {
                let want = Complex64::from_polar(1.0, g.modes.point(j) * t.out_axis.point(i));
                assert!((t.entry(i, j) - want).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn composition_matches_sequential_propagation() {
        let c = ctx();
        let g = SimGrid::new(512, 0.01, 5e4).unwrap();
        let elems = vec![
            Element::FreeSpace { d: 0.2 },
            Element::Mask(MaskProfile::SingleSlit { width: 1e-3 }),
            Element::FreeSpace { d: 0.1 },
        ];
        let arm = ArmSpec::new(
            elems.clone(),
            DetectorSpec::Bucket { axis: g.space, mode: BucketMode::IntensitySum },
        )
        .unwrap();
        let t = arm_transfer(&arm, &c, &g).unwrap();
        for j in [0, 9, g.mode_count() - 1] {
            let mut f = ComplexField::plane_wave(g.space, g.modes.point(j));
            for e in &elems {
                f = propagate(&f, e, &c).unwrap();
            }
            let col = t.column(j);
            for (a, b) in col.iter().zip(&f.samples) {
                assert!((a - b).norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn mode_phases_leave_moduli_untouched() {
        let g = SimGrid::new(64, 0.01, 3e3).unwrap();
        let arm = ArmSpec::new(vec![Element::FreeSpace { d: 0.1 }], array(0.002, 5)).unwrap();
        let t = arm_transfer(&arm, &ctx(), &g).unwrap();
        let theta: Vec<f64> = (0..t.cols()).map(|j| j as f64 * 0.7).collect();
        let s = t.with_mode_phases(&theta).unwrap();
        assert_eq!(s.modulus(), t.modulus());
        assert!((s.entry(2, 1) - t.entry(2, 1) * Complex64::from_polar(1.0, 0.7)).norm() < 1e-12);
        assert!(t.with_mode_phases(&[0.0]).is_err());
    }

    #[test]
    fn image_field_open_aperture_has_flat_modulus() {
        let c = ctx();
        let m: Vec<f64> = (-5..=5)
            .map(|i| image_arm_field(&c, 0.3, 0.4, 0.8, i as f64 * 1e-3, 0.0).unwrap().norm())
            .collect();
        for v in &m {
            assert!((v - m[0]).abs() < 1e-12);
        }
        assert!(matches!(
            image_arm_field(&c, 0.3, 0.4, 0.4, 0.0, 0.0),
            Err(Error::DegenerateGeometry(_))
        ));
    }

    #[test]
    fn image_field_without_lens_is_free_propagation() {
        let c = ctx();
        for (x, p) in [(1e-3, 2e4), (-2e-3, -5e4)] {
            let a = image_arm_field(&c, 0.3, f64::INFINITY, 0.5, x, p).unwrap();
            let b = image_arm_field(&c, 0.3, 1e12, 0.5, x, p).unwrap();
            let want = analytic_gb_free(&c, 0.8, x, p);
            assert!((a - want).norm() < 1e-12);
            assert!((b - want).norm() < 1e-3);
        }
    }

    #[test]
    fn image_field_modulus_ignores_pure_phase_prefactors() {
        let c = ctx();
        for (x, p) in [(1e-4, 0.0), (-7e-4, 3e4)] {
            let full = image_arm_field(&c, 0.2, 0.5, 0.1, x, p).unwrap();
            let q = 1.0 / 0.1 - 1.0 / 0.5;
            let bare = 1.0 / (q * 0.1f64).sqrt();
            assert!((full.norm() - bare).abs() < 1e-12);
        }
    }

    #[test]
    fn ghost_arm_narrow_slit_has_flat_modulus() {
        let c = ctx();
        let axis = Axis::centered(0.001, 2048).unwrap();
        let mask = MaskProfile::SingleSlit { width: 2.0 * axis.spacing() };
        let vals: Vec<Complex64> = [0.0, 2e4, 5e4]
            .iter()
            .map(|&p| analytic_ga_ghost(&c, 0.5, 0.1, &mask, &axis, p).unwrap())
            .collect();
        for v in &vals {
            assert!((v.norm() / vals[0].norm() - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn ghost_arm_far_field_follows_slit_interference() {
        let c = ctx();
        let axis = Axis::centered(0.0128, 4096).unwrap();
        let ds = 5e-4;
        let mask = MaskProfile::DoubleSlit { separation: ds, width: 2.0 * axis.spacing() };
        let g0 = analytic_ga_ghost(&c, 0.5, 1e6, &mask, &axis, 0.0).unwrap().norm_sqr();
        for p in [1e3, 3e3, 5e3] {
            let g = analytic_ga_ghost(&c, 0.5, 1e6, &mask, &axis, p).unwrap().norm_sqr();
            let want = (p * ds / 2.0).cos().powi(2);
            assert!((g / g0 - want).abs() < 2e-3, "p = {p}: {} vs {want}", g / g0);
        }
    }

    #[test]
    fn ghost_arm_symmetric_mask_is_even_in_p() {
        let c = ctx();
        let axis = Axis::centered(0.0128, 2048).unwrap();
        let mask = MaskProfile::DoubleSlit { separation: 5e-4, width: 1e-4 };
        for p in [1e4, 4e4] {
            let a = analytic_ga_ghost(&c, 0.5, 0.1, &mask, &axis, p).unwrap();
            let b = analytic_ga_ghost(&c, 0.5, 0.1, &mask, &axis, -p).unwrap();
            assert!((a - b).norm() < 1e-12 * a.norm());
        }
    }

    #[test]
    fn focal_response_shape() {
        let c = ctx();
        let (f2, a) = (0.4, 3.1e-6);
        let k = c.k();
        let x2 = 1e-3;
        let peak = analytic_gb_focal(&c, f2, a, x2, k * x2 / f2);
        assert!((peak - k / f2 * a * a).abs() < 1e-12 * peak);
        let doubled = analytic_gb_focal(&c, f2, 2.0 * a, x2, k * x2 / f2);
        assert!((doubled / peak - 4.0).abs() < 1e-12);
        // x2 scan at fixed p: Gaussian whose RMS width is (f2/k)/sqrt(2A) / sqrt(2)
        let width_amp = f2 / k / (2.0 * a).sqrt();
        let v = analytic_gb_focal(&c, f2, a, width_amp, 0.0) / analytic_gb_focal(&c, f2, a, 0.0, 0.0);
        assert!((v - (-0.5f64).exp()).abs() < 1e-12);
        assert!(focal_is_delta(1.0, 2.0));
        assert!(!focal_is_delta(1e-12, 2.0));
    }

    #[test]
    fn mask_table_interpolates_and_loads() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        std::fs::write(&path, "# x t\n-1e-3 0\n0, 1\n1e-3 0.5 0\n").unwrap();
        let t = load_mask_file(&path).unwrap();
        assert!((t.eval(-5e-4).re - 0.5).abs() < 1e-12);
        assert!((t.eval(5e-4).re - 0.75).abs() < 1e-12);
        assert_eq!(t.eval(2e-3), Complex64::new(0.0, 0.0));
        std::fs::write(&path, "0 2\n1 0\n").unwrap();
        assert!(load_mask_file(&path).is_err());
        assert!(load_mask_file(&dir.path().join("missing")).is_err());
    }
}
