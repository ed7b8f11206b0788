//! Coincidence and singles observables, Monte-Carlo ensembles and pattern metrics.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::Axis;
use crate::optics::{BucketMode, DetectorSpec, TransferMatrix};
use crate::sources::{
    classical_partner, draw_realization, spdc_mode_weights, BiphotonSource, ClassicalEnsemble,
    PhaseGenerator, RandomPhaseEnsemble,
};

/// Realizations per Monte-Carlo block. Blocks are summed internally in
/// order and then combined in block order, so results do not depend on the
/// thread count.
const MC_BLOCK: usize = 32;

/// Whether a pattern is peak-normalized or left as raw sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Peak,
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub axis: Axis,
    pub values: Vec<f64>,
}

impl Pattern {
    pub fn new(axis: Axis, values: Vec<f64>) -> Result<Self> {
        if values.len() != axis.n {
            return Err(Error::DimMismatch { expected: axis.n, got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument("pattern values must be finite and nonnegative".into()));
        }
        Ok(Pattern { axis, values })
    }

    pub fn from_fn(axis: Axis, f: impl Fn(f64) -> f64) -> Self {
        Pattern { axis, values: axis.points().into_iter().map(f).collect() }
    }

    pub fn peak(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn normalized(&self) -> Result<Pattern> {
        let peak = self.peak();
        if peak <= 0.0 {
            return Err(Error::EmptyPattern);
        }
        Ok(Pattern { axis: self.axis, values: self.values.iter().map(|v| v / peak).collect() })
    }

    pub fn scaled(self, scale: Scale) -> Result<Pattern> {
        match scale {
            Scale::Peak => self.normalized(),
            Scale::Raw if self.peak() <= 0.0 => Err(Error::EmptyPattern),
            Scale::Raw => Ok(self),
        }
    }

    /// Root-mean-square of `self - other` over the samples.
    pub fn rms_deviation(&self, other: &Pattern) -> Result<f64> {
        if self.values.len() != other.values.len() {
            return Err(Error::DimMismatch { expected: self.values.len(), got: other.values.len() });
        }
        let ss: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).powi(2)).sum();
        Ok((ss / self.values.len() as f64).sqrt())
    }

    /// CSV with the version header, `#` comment lines, then `x_m,value`
    /// rows (plus `stderr` when given).
    pub fn write_csv<W: Write>(&self, out: &mut W, comments: &[String], stderr: Option<&[f64]>) -> io::Result<()> {
        writeln!(out, "# qimsim pattern v1")?;
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        match stderr {
            Some(err) => {
                writeln!(out, "x_m,value,stderr")?;
                for ((x, v), e) in self.axis.points().iter().zip(&self.values).zip(err) {
                    writeln!(out, "{x:e},{v:e},{e:e}")?;
                }
            }
            None => {
                writeln!(out, "x_m,value")?;
                for (x, v) in self.axis.points().iter().zip(&self.values) {
                    writeln!(out, "{x:e},{v:e}")?;
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceMap {
    pub axis1: Axis,
    pub axis2: Axis,
    /// Row-major over `(x1, x2)`.
    pub values: Vec<f64>,
}

impl CoincidenceMap {
    pub fn get(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.axis2.n + i2]
    }

    /// `sum_{x2} C(x1, x2) dx2` as a pattern over `x1`.
    pub fn marginal_x1(&self) -> Pattern {
        let n2 = self.axis2.n;
        let dx = self.axis2.spacing();
        let values = self.values.chunks(n2).map(|r| r.iter().sum::<f64>() * dx).collect();
        Pattern { axis: self.axis1, values }
    }

    pub fn normalized(&self) -> Result<CoincidenceMap> {
        let peak = self.values.iter().copied().fold(0.0, f64::max);
        if peak <= 0.0 {
            return Err(Error::EmptyPattern);
        }
        Ok(CoincidenceMap { values: self.values.iter().map(|v| v / peak).collect(), ..self.clone() })
    }

    pub fn write_csv<W: Write>(&self, out: &mut W, comments: &[String]) -> io::Result<()> {
        writeln!(out, "# qimsim pattern v1")?;
        for c in comments {
            writeln!(out, "# {c}")?;
        }
        writeln!(out, "x1_m,x2_m,value")?;
        let xs2 = self.axis2.points();
        for (i1, x1) in self.axis1.points().iter().enumerate() {
            for (i2, x2) in xs2.iter().enumerate() {
                writeln!(out, "{x1:e},{x2:e},{:e}", self.get(i1, i2))?;
            }
        }
        Ok(())
    }
}

/// Complex two-detector amplitude `A(x1, x2)`, row-major over `(x1, x2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeMap {
    pub axis1: Axis,
    pub axis2: Axis,
    pub values: Vec<Complex64>,
}

impl AmplitudeMap {
    pub fn get(&self, i1: usize, i2: usize) -> Complex64 {
        self.values[i1 * self.axis2.n + i2]
    }
}

fn check_modes(a: &TransferMatrix, b: &TransferMatrix) -> Result<()> {
    if a.mode_axis.approx_eq(&b.mode_axis, 1e-9) {
        Ok(())
    } else {
        Err(Error::ModeAxisMismatch)
    }
}

fn anti_partners(m: usize) -> Vec<usize> {
    (0..m).map(|j| m - 1 - j).collect()
}

/// `g2(x2, partner_j)` laid out as one contiguous row per `x2`.
fn partner_rows(g2: &TransferMatrix, partner: &[usize]) -> Vec<Complex64> {
    (0..g2.rows())
        .flat_map(|i2| partner.iter().map(move |&jj| g2.entry(i2, jj)))
        .collect()
}

/// `A[i1][i2] = sum_j coeff_j g1(i1, j) g2(i2, partner_j)`.
fn pair_amplitude(
    g1: &TransferMatrix,
    g2: &TransferMatrix,
    coeff: &[Complex64],
    partner: &[usize],
) -> Vec<Complex64> {
    let m = coeff.len();
    let n2 = g2.rows();
    let b = partner_rows(g2, partner);
    let rows: Vec<Vec<Complex64>> = (0..g1.rows())
        .into_par_iter()
        .map(|i1| {
            if g1.row_is_zero(i1) {
                return vec![Complex64::new(0.0, 0.0); n2];
            }
            let a: Vec<Complex64> = g1.row(i1).iter().zip(coeff).map(|(g, c)| g * c).collect();
            (0..n2)
                .map(|i2| a.iter().zip(&b[i2 * m..(i2 + 1) * m]).map(|(x, y)| x * y).sum())
                .collect()
        })
        .collect();
    rows.concat()
}

/// `A(x1, x2) = sum_p f(p) gA(x1, p) gB(x2, -p) dp`.
pub fn biphoton_amplitude(
    ga: &TransferMatrix,
    gb: &TransferMatrix,
    src: &BiphotonSource,
) -> Result<AmplitudeMap> {
    check_modes(ga, gb)?;
    let dp = ga.mode_axis.spacing();
    let coeff: Vec<Complex64> = spdc_mode_weights(src, &ga.mode_axis)?
        .into_iter()
        .map(|f| Complex64::new(f * dp, 0.0))
        .collect();
    let values = pair_amplitude(ga, gb, &coeff, &anti_partners(ga.cols()));
    Ok(AmplitudeMap { axis1: ga.out_axis, axis2: gb.out_axis, values })
}

/// Reduces an amplitude map over the arm-A detector.
pub fn coincidence_pattern(ampl: &AmplitudeMap, detector1: &DetectorSpec, scale: Scale) -> Result<Pattern> {
    let n2 = ampl.axis2.n;
    let dx1 = ampl.axis1.spacing();
    let values: Vec<f64> = match detector1 {
        DetectorSpec::Bucket { mode: BucketMode::IntensitySum, .. } => (0..n2)
            .map(|i2| (0..ampl.axis1.n).map(|i1| ampl.get(i1, i2).norm_sqr()).sum::<f64>() * dx1)
            .collect(),
        DetectorSpec::Bucket { mode: BucketMode::Amplitude, .. } | DetectorSpec::FarFieldPoint => (0..n2)
            .map(|i2| ((0..ampl.axis1.n).map(|i1| ampl.get(i1, i2)).sum::<Complex64>() * dx1).norm_sqr())
            .collect(),
        DetectorSpec::PointArray { .. } => {
            return Err(Error::UnsupportedDetector(
                "arm-A detector must be a bucket or far-field point".into(),
            ))
        }
    };
    Pattern { axis: ampl.axis2, values }.scaled(scale)
}

/// Biphoton coincidence pattern over the arm-B detector. Amplitude-level
/// detectors reduce arm A before pairing, which avoids the full map.
pub fn biphoton_pattern(
    ga: &TransferMatrix,
    gb: &TransferMatrix,
    src: &BiphotonSource,
    detector1: &DetectorSpec,
    scale: Scale,
) -> Result<Pattern> {
    match detector1 {
        DetectorSpec::Bucket { mode: BucketMode::Amplitude, .. } | DetectorSpec::FarFieldPoint => {
            check_modes(ga, gb)?;
            let dp = ga.mode_axis.spacing();
            let f = spdc_mode_weights(src, &ga.mode_axis)?;
            let m = ga.cols();
            let coeff: Vec<Complex64> =
                (0..m).map(|j| ga.integrated_amplitude(j) * f[j] * dp).collect();
            let b = partner_rows(gb, &anti_partners(m));
            let values = (0..gb.rows())
                .map(|i2| {
                    coeff
                        .iter()
                        .zip(&b[i2 * m..(i2 + 1) * m])
                        .map(|(c, g)| c * g)
                        .sum::<Complex64>()
                        .norm_sqr()
                })
                .collect();
            Pattern { axis: gb.out_axis, values }.scaled(scale)
        }
        _ => coincidence_pattern(&biphoton_amplitude(ga, gb, src)?, detector1, scale),
    }
}

/// Single-detector rate in one arm with the partner photon traced out:
/// `R(x) = sum_y |sum_p f(p) g_det(x, p) g_traced(y, -p) dp|^2 dy`.
///
/// This equals the mode-coherence form `sum_{jk} f_jk g(x, p_j) g*(x, p_k)`
/// with `f_jk = f_j f_k^* sum_y g_traced(y, -p_j) g_traced^*(y, -p_k) dy`;
/// `traced` should cover the full window of its detector plane.
pub fn singles_pattern(
    detected: &TransferMatrix,
    src: &BiphotonSource,
    traced: &TransferMatrix,
    scale: Scale,
) -> Result<Pattern> {
    check_modes(detected, traced)?;
    let dp = detected.mode_axis.spacing();
    let coeff: Vec<Complex64> = spdc_mode_weights(src, &detected.mode_axis)?
        .into_iter()
        .map(|f| Complex64::new(f * dp, 0.0))
        .collect();
    let amp = pair_amplitude(detected, traced, &coeff, &anti_partners(detected.cols()));
    let dy = traced.out_axis.spacing();
    let values = amp
        .chunks(traced.rows())
        .map(|row| row.iter().map(|z| z.norm_sqr()).sum::<f64>() * dy)
        .collect();
    Pattern { axis: detected.out_axis, values }.scaled(scale)
}

/// Per-mode arm-A factor of the classical prediction for the given detector.
fn classical_arm_a(ga: &TransferMatrix, detector1: &DetectorSpec) -> Result<Vec<f64>> {
    match detector1 {
        DetectorSpec::Bucket { mode: BucketMode::IntensitySum, .. } => {
            Ok((0..ga.cols()).map(|j| ga.integrated_intensity(j)).collect())
        }
        DetectorSpec::FarFieldPoint => {
            Ok((0..ga.cols()).map(|j| ga.integrated_modulus(j).powi(2)).collect())
        }
        DetectorSpec::Bucket { mode: BucketMode::Amplitude, .. } => Err(Error::UnsupportedDetector(
            "an amplitude-integrated bucket has no meaning for a classical ensemble".into(),
        )),
        DetectorSpec::PointArray { .. } => Err(Error::UnsupportedDetector(
            "a point array in arm A gives a map; use classical_map".into(),
        )),
    }
}

fn classical_pairs(ens: &ClassicalEnsemble, ga: &TransferMatrix) -> Result<Vec<(usize, usize, f64)>> {
    let dp = ga.mode_axis.spacing();
    let w = ens.weights(&ga.mode_axis)?;
    let m = ga.cols();
    let pairs: Vec<(usize, usize, f64)> = (0..m)
        .filter(|&j| w[j] > 0.0)
        .filter_map(|j| classical_partner(j, ens.epsilon, m).map(|jj| (j, jj, w[j] * dp)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::PairingOutOfRange(ens.epsilon));
    }
    Ok(pairs)
}

/// `C(x2) = sum_p w(p) |gA|^2 |gB(x2, p/epsilon)|^2 dp` with the arm-A
/// detector reduction applied to `|gA|^2`. Only moduli are consumed.
pub fn classical_coincidence(
    ens: &ClassicalEnsemble,
    ga: &TransferMatrix,
    gb: &TransferMatrix,
    detector1: &DetectorSpec,
    scale: Scale,
) -> Result<Pattern> {
    check_modes(ga, gb)?;
    let pairs = classical_pairs(ens, ga)?;
    let arm_a = classical_arm_a(ga, detector1)?;
    let values = (0..gb.rows())
        .map(|i2| pairs.iter().map(|&(j, jj, w)| w * arm_a[j] * gb.intensity(i2, jj)).sum())
        .collect();
    Pattern { axis: gb.out_axis, values }.scaled(scale)
}

/// Full classical map `C(x1, x2) = sum_p w(p) |gA(x1, p)|^2 |gB(x2, p/epsilon)|^2 dp`.
pub fn classical_map(
    ens: &ClassicalEnsemble,
    ga: &TransferMatrix,
    gb: &TransferMatrix,
    scale: Scale,
) -> Result<CoincidenceMap> {
    check_modes(ga, gb)?;
    let pairs = classical_pairs(ens, ga)?;
    let n2 = gb.rows();
    let values: Vec<f64> = (0..ga.rows())
        .into_par_iter()
        .flat_map_iter(|i1| {
            let pairs = &pairs;
            (0..n2).map(move |i2| {
                pairs.iter().map(|&(j, jj, w)| w * ga.intensity(i1, j) * gb.intensity(i2, jj)).sum()
            })
        })
        .collect();
    let map = CoincidenceMap { axis1: ga.out_axis, axis2: gb.out_axis, values };
    match scale {
        Scale::Peak => map.normalized(),
        Scale::Raw => Ok(map),
    }
}

/// Monte-Carlo mean pattern with its per-bin standard error.
#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloPattern {
    pub pattern: Pattern,
    pub stderr: Vec<f64>,
    pub realizations: usize,
}

/// Averages `|A|^2` over random-phase realizations with
/// `A = sum_p sqrt(w dp) gA(x1, p) e^{i thA(p)} gB(x2, -p) e^{i thB(-p)}`,
/// reduced over the arm-A detector. Realization `r` draws its phases from
/// the stream `(seed, r)`.
pub fn klyshko_mc(
    ens: &RandomPhaseEnsemble,
    ga: &TransferMatrix,
    gb: &TransferMatrix,
    detector1: &DetectorSpec,
    n_realizations: usize,
    scale: Scale,
) -> Result<MonteCarloPattern> {
    if n_realizations == 0 {
        return Err(Error::InvalidArgument("need at least one realization".into()));
    }
    check_modes(ga, gb)?;
    let m = ga.cols();
    let n2 = gb.rows();
    let dp = ga.mode_axis.spacing();
    let amp: Vec<f64> = ens.weights(&ga.mode_axis)?.into_iter().map(|w| (w * dp).sqrt()).collect();
    let partner = anti_partners(m);
    let b = partner_rows(gb, &partner);
    let amplitude_level = match detector1 {
        DetectorSpec::Bucket { mode: BucketMode::IntensitySum, .. } => false,
        DetectorSpec::Bucket { mode: BucketMode::Amplitude, .. } | DetectorSpec::FarFieldPoint => true,
        DetectorSpec::PointArray { .. } => {
            return Err(Error::UnsupportedDetector(
                "arm-A detector must be a bucket or far-field point".into(),
            ))
        }
    };
    let reduced_a: Vec<Complex64> = if amplitude_level {
        (0..m).map(|j| ga.integrated_amplitude(j)).collect()
    } else {
        Vec::new()
    };
    let realization = |r: usize| -> Vec<f64> {
        let mut generator = PhaseGenerator::for_realization(ens.seed, r as u64);
        let (ta, tb) = draw_realization(ens, &mut generator, m);
        let coeff: Vec<Complex64> = (0..m)
            .map(|j| Complex64::from_polar(amp[j], ta[j] + tb[partner[j]]))
            .collect();
        if amplitude_level {
            let c: Vec<Complex64> = coeff.iter().zip(&reduced_a).map(|(x, y)| x * y).collect();
            (0..n2)
                .map(|i2| c.iter().zip(&b[i2 * m..(i2 + 1) * m]).map(|(x, y)| x * y).sum::<Complex64>().norm_sqr())
                .collect()
        } else {
            let dx1 = ga.out_axis.spacing();
            let mut acc = vec![0.0; n2];
            for i1 in 0..ga.rows() {
                if ga.row_is_zero(i1) {
                    continue;
                }
                let a: Vec<Complex64> = ga.row(i1).iter().zip(&coeff).map(|(g, c)| g * c).collect();
                for (i2, slot) in acc.iter_mut().enumerate() {
                    let z: Complex64 = a.iter().zip(&b[i2 * m..(i2 + 1) * m]).map(|(x, y)| x * y).sum();
                    *slot += z.norm_sqr() * dx1;
                }
            }
            acc
        }
    };
    let blocks = n_realizations.div_ceil(MC_BLOCK);
    let partial: Vec<(Vec<f64>, Vec<f64>)> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut s = vec![0.0; n2];
            let mut q = vec![0.0; n2];
            for r in blk * MC_BLOCK..((blk + 1) * MC_BLOCK).min(n_realizations) {
                for (i, v) in realization(r).into_iter().enumerate() {
                    s[i] += v;
                    q[i] += v * v;
                }
            }
            (s, q)
        })
        .collect();
    let mut s = vec![0.0; n2];
    let mut q = vec![0.0; n2];
    for (bs, bq) in partial {
        for i in 0..n2 {
            s[i] += bs[i];
            q[i] += bq[i];
        }
    }
    let n = n_realizations as f64;
    let mean: Vec<f64> = s.iter().map(|v| v / n).collect();
    let mut stderr: Vec<f64> = if n_realizations > 1 {
        q.iter()
            .zip(&mean)
            .map(|(qq, mu)| ((qq / n - mu * mu).max(0.0) * n / (n - 1.0) / n).sqrt())
            .collect()
    } else {
        vec![0.0; n2]
    };
    let raw = Pattern { axis: gb.out_axis, values: mean };
    let peak = raw.peak();
    let pattern = raw.scaled(scale)?;
    if scale == Scale::Peak {
        for e in &mut stderr {
            *e /= peak;
        }
    }
    Ok(MonteCarloPattern { pattern, stderr, realizations: n_realizations })
}

/// The infinite-ensemble limit of [`klyshko_mc`]: the classical prediction
/// with anti-correlated pairing (`epsilon = -1`).
pub fn klyshko_closed_form(
    ens: &RandomPhaseEnsemble,
    ga: &TransferMatrix,
    gb: &TransferMatrix,
    detector1: &DetectorSpec,
    scale: Scale,
) -> Result<Pattern> {
    let classical = ClassicalEnsemble::new(-1.0, ens.p_max, ens.profile)?;
    classical_coincidence(&classical, ga, gb, detector1, scale)
}

/// Positions of interior local maxima above 5% of the peak, refined by a
/// parabola through each maximum and its neighbours.
pub fn local_maxima(p: &Pattern) -> Vec<f64> {
    let v = &p.values;
    let peak = p.peak();
    let dx = p.axis.spacing();
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] >= v[i + 1] && v[i] > 0.05 * peak)
        .map(|i| {
            let (a, b, c) = (v[i - 1], v[i], v[i + 1]);
            let den = a - 2.0 * b + c;
            let off = if den != 0.0 { 0.5 * (a - c) / den } else { 0.0 };
            p.axis.point(i) + off * dx
        })
        .collect()
}

/// Mean distance between adjacent interior maxima.
pub fn fringe_spacing(p: &Pattern) -> Result<f64> {
    let peaks = local_maxima(p);
    if peaks.len() < 3 {
        return Err(Error::NoFringes(peaks.len()));
    }
    Ok((peaks[peaks.len() - 1] - peaks[0]) / (peaks.len() - 1) as f64)
}

/// `(max - min) / (max + min)` over the central half of the axis.
pub fn visibility(p: &Pattern) -> f64 {
    let n = p.values.len();
    let centre = &p.values[n / 4..n - n / 4];
    let max = centre.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = centre.iter().copied().fold(f64::INFINITY, f64::min);
    if max + min <= 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}

/// L-infinity distance after normalizing both patterns to unit peak.
pub fn image_error(p: &Pattern, reference: &Pattern) -> Result<f64> {
    if p.values.len() != reference.values.len() {
        return Err(Error::DimMismatch { expected: reference.values.len(), got: p.values.len() });
    }
    let a = p.normalized()?;
    let b = reference.normalized()?;
    Ok(a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Least-squares magnification `m` such that `p(x) ~ reference(m x)`,
/// scanned over `[lo, hi]` and refined with a parabola.
pub fn fit_magnification(p: &Pattern, reference: impl Fn(f64) -> f64, lo: f64, hi: f64) -> Result<f64> {
    let p = p.normalized()?;
    let xs = p.axis.points();
    let cost = |m: f64| -> f64 {
        xs.iter().zip(&p.values).map(|(x, v)| (v - reference(m * x)).powi(2)).sum()
    };
    let steps = 4000;
    let h = (hi - lo) / steps as f64;
    let costs: Vec<f64> = (0..=steps).map(|i| cost(lo + i as f64 * h)).collect();
    let best = (0..=steps).min_by(|&a, &b| costs[a].total_cmp(&costs[b])).unwrap_or(0);
    let m = lo + best as f64 * h;
    if best == 0 || best == steps {
        return Ok(m);
    }
    let (a, b, c) = (costs[best - 1], costs[best], costs[best + 1]);
    let den = a - 2.0 * b + c;
    Ok(if den > 0.0 { m + 0.5 * (a - c) / den * h } else { m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SPEED_OF_LIGHT;
    use crate::sources::{ModeProfile, PhaseMode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn modes() -> Axis {
        Axis::new(-8e3, 8e3, 16).unwrap()
    }

    fn random_matrix(rows: usize, seed: u64) -> TransferMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = modes();
        let entries: Vec<Complex64> = (0..rows * m.n)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        TransferMatrix::from_complex(Axis::new(-1e-3, 1e-3, rows).unwrap(), m, &entries).unwrap()
    }

    fn spdc() -> BiphotonSource {
        BiphotonSource::new(2.0 * PI * SPEED_OF_LIGHT / 405e-9, 1e4, ModeProfile::Flat).unwrap()
    }

    fn bucket(ga: &TransferMatrix, mode: BucketMode) -> DetectorSpec {
        DetectorSpec::Bucket { axis: ga.out_axis, mode }
    }

    fn max_rel_diff(a: &Pattern, b: &Pattern) -> f64 {
        let peak = a.peak().max(b.peak());
        a.values.iter().zip(&b.values).map(|(x, y)| (x - y).abs() / peak).fold(0.0, f64::max)
    }

    #[test]
    fn fused_pattern_matches_full_map() {
        let ga = random_matrix(7, 1);
        let gb = random_matrix(9, 2);
        for mode in [BucketMode::Amplitude, BucketMode::IntensitySum] {
            let det = bucket(&ga, mode);
            let fused = biphoton_pattern(&ga, &gb, &spdc(), &det, Scale::Raw).unwrap();
            let full = coincidence_pattern(&biphoton_amplitude(&ga, &gb, &spdc()).unwrap(), &det, Scale::Raw)
                .unwrap();
            assert!(max_rel_diff(&fused, &full) < 1e-12);
        }
    }

    #[test]
    fn singles_match_mode_coherence_form() {
        let det = random_matrix(5, 3);
        let traced = random_matrix(11, 4);
        let got = singles_pattern(&det, &spdc(), &traced, Scale::Raw).unwrap();
        let f = spdc_mode_weights(&spdc(), &det.mode_axis).unwrap();
        let m = det.cols();
        let dp = det.mode_axis.spacing();
        let dy = traced.out_axis.spacing();
        for i in 0..det.rows() {
            let mut r = Complex64::new(0.0, 0.0);
            for j in 0..m {
                for k in 0..m {
                    let overlap: Complex64 = (0..traced.rows())
                        .map(|y| traced.entry(y, m - 1 - j) * traced.entry(y, m - 1 - k).conj())
                        .sum::<Complex64>()
                        * dy;
                    r += f[j] * f[k] * dp * dp * overlap * det.entry(i, j) * det.entry(i, k).conj();
                }
            }
            assert!((r.re - got.values[i]).abs() < 1e-12 * got.peak());
            assert!(r.im.abs() < 1e-12 * got.peak());
        }
    }

    #[test]
    fn classical_with_unit_arm_b_is_flat() {
        let ga = random_matrix(6, 5);
        let gb = TransferMatrix::unit(Axis::new(-1e-3, 1e-3, 13).unwrap(), modes());
        let ens = ClassicalEnsemble::new(1.0, 1e4, ModeProfile::Flat).unwrap();
        let p = classical_coincidence(&ens, &ga, &gb, &bucket(&ga, BucketMode::IntensitySum), Scale::Peak)
            .unwrap();
        assert!(p.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn classical_is_phase_blind_bitwise() {
        let ga = random_matrix(6, 6);
        let gb = random_matrix(8, 7);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ta: Vec<f64> = (0..ga.modulus().len()).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let tb: Vec<f64> = (0..gb.modulus().len()).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let ens = ClassicalEnsemble::new(1.0, 1e4, ModeProfile::Flat).unwrap();
        let det = bucket(&ga, BucketMode::IntensitySum);
        let before = classical_coincidence(&ens, &ga, &gb, &det, Scale::Raw).unwrap();
        let after = classical_coincidence(
            &ens,
            &ga.with_entry_phases(&ta).unwrap(),
            &gb.with_entry_phases(&tb).unwrap(),
            &det,
            Scale::Raw,
        )
        .unwrap();
        assert_eq!(before.values, after.values);

        let theta: Vec<f64> = (0..ga.cols()).map(|_| rng.random::<f64>() * 2.0 * PI).collect();
        let ff = classical_coincidence(&ens, &ga, &gb, &DetectorSpec::FarFieldPoint, Scale::Raw).unwrap();
        let ff2 = classical_coincidence(
            &ens,
            &ga.with_mode_phases(&theta).unwrap(),
            &gb,
            &DetectorSpec::FarFieldPoint,
            Scale::Raw,
        )
        .unwrap();
        assert_eq!(ff.values, ff2.values);
    }

    #[test]
    fn classical_rejects_amplitude_bucket_and_arrays() {
        let ga = random_matrix(4, 9);
        let ens = ClassicalEnsemble::new(1.0, 1e4, ModeProfile::Flat).unwrap();
        for det in [bucket(&ga, BucketMode::Amplitude), DetectorSpec::PointArray { axis: ga.out_axis }] {
            assert!(matches!(
                classical_coincidence(&ens, &ga, &ga, &det, Scale::Raw),
                Err(Error::UnsupportedDetector(_))
            ));
        }
    }

    #[test]
    fn frozen_single_realization_is_the_coherent_pattern() {
        let ga = random_matrix(5, 10);
        let gb = random_matrix(7, 11);
        let ens = RandomPhaseEnsemble { p_max: 1e4, profile: ModeProfile::Flat, seed: 3, phases: PhaseMode::Frozen };
        let det = bucket(&ga, BucketMode::IntensitySum);
        let mc = klyshko_mc(&ens, &ga, &gb, &det, 1, Scale::Peak).unwrap();
        let coherent = biphoton_pattern(&ga, &gb, &spdc(), &det, Scale::Peak).unwrap();
        assert!(max_rel_diff(&mc.pattern, &coherent) < 1e-12);
        assert!(mc.stderr.iter().all(|&e| e == 0.0));
    }

    #[test]
    fn monte_carlo_converges_to_closed_form() {
        let ga = random_matrix(5, 12);
        let gb = random_matrix(7, 13);
        let ens = RandomPhaseEnsemble { p_max: 1e4, profile: ModeProfile::Flat, seed: 5, phases: PhaseMode::Uniform };
        let det = DetectorSpec::FarFieldPoint;
        let mc = klyshko_mc(&ens, &ga, &gb, &det, 4000, Scale::Raw).unwrap();
        let exact = klyshko_closed_form(&ens, &ga, &gb, &det, Scale::Raw).unwrap();
        for i in 0..exact.values.len() {
            let z = (mc.pattern.values[i] - exact.values[i]) / mc.stderr[i];
            assert!(z.abs() < 5.0, "bin {i}: z = {z}");
        }
        let again = klyshko_mc(&ens, &ga, &gb, &det, 4000, Scale::Raw).unwrap();
        assert_eq!(mc.pattern.values, again.pattern.values);
    }

    #[test]
    fn spacing_and_visibility_of_cos_squared() {
        let axis = Axis::new(-5e-3, 5e-3, 2001).unwrap();
        let period = 1.3e-3;
        let p = Pattern::from_fn(axis, |x| (PI * x / period).cos().powi(2));
        assert!((fringe_spacing(&p).unwrap() - period).abs() < 0.5 * axis.spacing());
        assert!(visibility(&p) > 0.999);
        let flat = Pattern::from_fn(axis, |_| 2.0);
        assert_eq!(visibility(&flat), 0.0);
        assert!(matches!(fringe_spacing(&flat), Err(Error::NoFringes(0))));
        assert_eq!(image_error(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn magnification_fit_recovers_scale() {
        let axis = Axis::new(-3e-3, 3e-3, 301).unwrap();
        let r = |x: f64| (-(x / 4e-4).powi(2)).exp();
        let p = Pattern::from_fn(axis, |x| r(0.5 * x));
        assert!((fit_magnification(&p, r, 0.2, 2.0).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn csv_has_header_and_columns() {
        let p = Pattern::from_fn(Axis::new(0.0, 1.0, 3).unwrap(), |x| x);
        let mut out = Vec::new();
        p.write_csv(&mut out, &["grid n=3".into()], Some(&[0.1, 0.2, 0.3])).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# qimsim pattern v1");
        assert!(lines.contains(&"# grid n=3"));
        assert!(lines.iter().any(|l| l.starts_with("x_m,value,stderr")));
        assert_eq!(lines.iter().filter(|l| !l.starts_with('#')).count(), 4);
    }
}
