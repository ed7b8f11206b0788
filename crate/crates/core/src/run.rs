//! Bench resolution and the end-to-end pattern pipeline.

use std::path::Path;

use crate::bench::{ArmDecl, ArmId, BenchModel, DetectorDecl, ElementDecl, MaskDecl, SourceKind};
use crate::detection::{
    biphoton_pattern, classical_coincidence, fringe_spacing, image_error, klyshko_closed_form,
    klyshko_mc, singles_pattern, visibility, Pattern, Scale,
};
use crate::error::{Error, Result};
use crate::grid::{Axis, WaveContext};
use crate::optics::{
    arm_transfer, load_mask_file, ArmSpec, BucketMode, DetectorSpec, Element, MaskProfile, SimGrid,
};
use crate::sources::{BiphotonSource, ClassicalEnsemble, RandomPhaseEnsemble, SourceModel};

/// Realization count when neither the bench nor the caller sets one.
pub const DEFAULT_REALIZATIONS: usize = 1000;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunOverrides {
    pub grid_n: Option<usize>,
    pub p_max: Option<f64>,
    pub seed: Option<u64>,
    pub bucket: Option<BucketMode>,
    pub realizations: Option<usize>,
}

/// Applies command-line overrides to a parsed bench, validating ranges.
pub fn apply_overrides(model: &mut BenchModel, o: &RunOverrides) -> Result<()> {
    if let Some(n) = o.grid_n {
        if n < 64 || n % 2 != 0 {
            return Err(Error::InvalidArgument(format!("grid n must be an even integer >= 64, got {n}")));
        }
        model.grid.n = n;
    }
    if let Some(p) = o.p_max {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::InvalidArgument(format!("p_max must be positive, got {p}")));
        }
        model.grid.p_max = p;
    }
    if let Some(seed) = o.seed {
        model.source.seed = Some(seed);
    }
    if let Some(n) = o.realizations {
        if n == 0 {
            return Err(Error::InvalidArgument("realizations must be at least 1".into()));
        }
        model.source.realizations = Some(n);
    }
    if let Some(mode) = o.bucket {
        for arm in [&mut model.arm_a, &mut model.arm_b] {
            if let DetectorDecl::Bucket(m) = &mut arm.detector {
                *m = mode;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedBench {
    pub ctx: WaveContext,
    pub grid: SimGrid,
    pub source: SourceModel,
    pub arm_a: ArmSpec,
    pub arm_b: ArmSpec,
    pub realizations: usize,
    pub reference_scale: Option<f64>,
    pub singles: Option<(ArmId, Axis)>,
}

impl ResolvedBench {
    pub fn arm(&self, id: ArmId) -> &ArmSpec {
        match id {
            ArmId::A => &self.arm_a,
            ArmId::B => &self.arm_b,
        }
    }

    /// Last mask in arm A, the object being imaged.
    pub fn object_mask(&self) -> Option<&MaskProfile> {
        self.arm_a.elements.iter().rev().find_map(|e| match e {
            Element::Mask(m) => Some(m),
            _ => None,
        })
    }
}

fn resolve_arm(arm: &ArmDecl, grid: &SimGrid, base_dir: &Path) -> Result<ArmSpec> {
    let elements = arm
        .elements
        .iter()
        .map(|e| {
            Ok(match e {
                ElementDecl::Free { d } => Element::FreeSpace { d: *d },
                ElementDecl::Lens { f } => Element::ThinLens { f: *f },
                ElementDecl::Pupil { a } => Element::GaussianPupil { a: *a },
                ElementDecl::Mask(m) => Element::Mask(match m {
                    MaskDecl::DoubleSlit { d, a } => MaskProfile::DoubleSlit { separation: *d, width: *a },
                    MaskDecl::SingleSlit { a } => MaskProfile::SingleSlit { width: *a },
                    MaskDecl::Gaussian { w } => MaskProfile::Gaussian { width: *w },
                    MaskDecl::File(path) => MaskProfile::Table(load_mask_file(&base_dir.join(path))?),
                }),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let detector = match arm.detector {
        DetectorDecl::Array { min, max, n } => DetectorSpec::PointArray { axis: Axis::new(min, max, n)? },
        DetectorDecl::Bucket(mode) => DetectorSpec::Bucket { axis: grid.space, mode },
        DetectorDecl::FarFieldPoint => DetectorSpec::FarFieldPoint,
    };
    ArmSpec::new(elements, detector)
}

/// Builds the numeric objects for a bench; relative mask paths are taken
/// from `base_dir`.
pub fn resolve(model: &BenchModel, base_dir: &Path) -> Result<ResolvedBench> {
    let lambda_p = model.pump_wavelength_nm * 1e-9;
    let grid = SimGrid::new(model.grid.n, model.grid.extent, model.grid.p_max)?;
    let s = &model.source;
    let p_max = s.p_max.unwrap_or(model.grid.p_max);
    let spdc = BiphotonSource::from_pump_wavelength(lambda_p, p_max, s.profile)?;
    let ctx = spdc.degenerate_context();
    let source = match s.kind {
        SourceKind::Spdc => SourceModel::Spdc(spdc),
        SourceKind::Classical { epsilon } => SourceModel::Classical(ClassicalEnsemble::new(epsilon, p_max, s.profile)?),
        SourceKind::RandomPhase => SourceModel::RandomPhase(RandomPhaseEnsemble {
            p_max,
            profile: s.profile,
            seed: s.seed.unwrap_or(0),
            phases: s.phases,
        }),
    };
    let singles = match &model.singles {
        Some(sg) => Some((sg.arm, Axis::new(sg.min, sg.max, sg.n)?)),
        None => None,
    };
    Ok(ResolvedBench {
        ctx,
        grid,
        source,
        arm_a: resolve_arm(&model.arm_a, &grid, base_dir)?,
        arm_b: resolve_arm(&model.arm_b, &grid, base_dir)?,
        realizations: s.realizations.unwrap_or(DEFAULT_REALIZATIONS),
        reference_scale: model.reference_scale,
        singles,
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Metrics {
    pub fringe_spacing_m: Option<f64>,
    pub visibility: f64,
    pub image_error: Option<f64>,
    pub singles_visibility: Option<f64>,
    /// Monte-Carlo runs only: RMS deviation from the infinite-ensemble
    /// limit, as a fraction of that limit's peak.
    pub rms_vs_closed_form: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub pattern: Pattern,
    pub stderr: Option<Vec<f64>>,
    pub singles: Option<Pattern>,
    pub reference: Option<Pattern>,
    pub metrics: Metrics,
}

pub fn run(bench: &ResolvedBench, scale: Scale) -> Result<RunOutput> {
    let ga = arm_transfer(&bench.arm_a, &bench.ctx, &bench.grid)?;
    let gb = arm_transfer(&bench.arm_b, &bench.ctx, &bench.grid)?;
    let det_a = &bench.arm_a.detector;
    let mut metrics = Metrics::default();
    let mut stderr = None;
    let pattern = match &bench.source {
        SourceModel::Spdc(src) => biphoton_pattern(&ga, &gb, src, det_a, scale)?,
        SourceModel::Classical(ens) => classical_coincidence(ens, &ga, &gb, det_a, scale)?,
        SourceModel::RandomPhase(ens) => {
            let mc = klyshko_mc(ens, &ga, &gb, det_a, bench.realizations, Scale::Raw)?;
            let limit = klyshko_closed_form(ens, &ga, &gb, det_a, Scale::Raw)?;
            metrics.rms_vs_closed_form = Some(mc.pattern.rms_deviation(&limit)? / limit.peak());
            let peak = mc.pattern.peak();
            let mut err = mc.stderr;
            if scale == Scale::Peak {
                err.iter_mut().for_each(|e| *e /= peak);
            }
            stderr = Some(err);
            mc.pattern.scaled(scale)?
        }
    };
    metrics.fringe_spacing_m = fringe_spacing(&pattern).ok();
    metrics.visibility = visibility(&pattern);
    let reference = match bench.reference_scale {
        Some(s) => {
            let mask = bench.object_mask().ok_or_else(|| {
                Error::InvalidArgument("`reference` needs a mask in arm A".into())
            })?;
            let r = Pattern::from_fn(pattern.axis, |x| mask.intensity(s * x));
            metrics.image_error = Some(image_error(&pattern, &r)?);
            Some(r)
        }
        None => None,
    };
    let singles = match (&bench.singles, &bench.source) {
        (None, _) => None,
        (Some((id, axis)), SourceModel::Spdc(src)) => {
            let (shown, other) = match id {
                ArmId::A => (&bench.arm_a, &bench.arm_b),
                ArmId::B => (&bench.arm_b, &bench.arm_a),
            };
            let detected = ArmSpec { detector: DetectorSpec::PointArray { axis: *axis }, ..shown.clone() };
            let traced = ArmSpec {
                detector: DetectorSpec::Bucket { axis: bench.grid.space, mode: BucketMode::IntensitySum },
                ..other.clone()
            };
            let gd = arm_transfer(&detected, &bench.ctx, &bench.grid)?;
            let gt = arm_transfer(&traced, &bench.ctx, &bench.grid)?;
            let p = singles_pattern(&gd, src, &gt, scale)?;
            metrics.singles_visibility = Some(visibility(&p));
            Some(p)
        }
        (Some(_), _) => {
            return Err(Error::InvalidArgument("`singles` is defined for the spdc source only".into()))
        }
    };
    Ok(RunOutput { pattern, stderr, singles, reference, metrics })
}

/// Parses, resolves and runs bench text in one step.
pub fn run_text(text: &str, base_dir: &Path, overrides: &RunOverrides, scale: Scale) -> Result<RunOutput> {
    let mut model = crate::bench::parse(text)?;
    apply_overrides(&mut model, overrides)?;
    run(&resolve(&model, base_dir)?, scale)
}
