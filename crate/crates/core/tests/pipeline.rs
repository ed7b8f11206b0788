use std::fs;
use std::path::Path;

use proptest::prelude::*;
use qimsim::bench::{self, DetectorDecl};
use qimsim::detection::{classical_coincidence, Scale};
use qimsim::grid::WaveContext;
use qimsim::optics::{arm_transfer, ArmSpec, BucketMode, DetectorSpec, Element, MaskProfile, SimGrid};
use qimsim::run::{apply_overrides, resolve, run, run_text, RunOverrides};
use qimsim::sources::{ClassicalEnsemble, ModeProfile};
use qimsim::Error;

const SMALL: &str = "pump wavelength_nm=351
grid n=1024 extent=0.0128 p_max=3e4
source randomphase seed=9 realizations=200
arm A:
  free d=0.5
  mask double_slit d=5e-4 a=1e-4
  free d=0.1
  detector farfield_point
arm B:
  free d=0.5
  pupil A=7.6e-7
  lens f=0.4
  free d=0.4
  detector array min=-1.5e-3 max=1.5e-3 n=64
";

#[test]
fn overrides_are_validated() {
    let mut m = bench::parse(SMALL).unwrap();
    for bad in [
        RunOverrides { grid_n: Some(511), ..Default::default() },
        RunOverrides { grid_n: Some(32), ..Default::default() },
        RunOverrides { p_max: Some(-1.0), ..Default::default() },
        RunOverrides { realizations: Some(0), ..Default::default() },
    ] {
        assert!(matches!(apply_overrides(&mut m, &bad), Err(Error::InvalidArgument(_))));
    }
    let ok = RunOverrides { grid_n: Some(256), seed: Some(4), realizations: Some(10), ..Default::default() };
    apply_overrides(&mut m, &ok).unwrap();
    assert_eq!((m.grid.n, m.seed(), m.source.realizations), (256, Some(4), Some(10)));
}

#[test]
fn bucket_override_touches_only_buckets() {
    let mut m = bench::parse(&SMALL.replace("farfield_point", "bucket")).unwrap();
    apply_overrides(&mut m, &RunOverrides { bucket: Some(BucketMode::Amplitude), ..Default::default() }).unwrap();
    assert_eq!(m.arm_a.detector, DetectorDecl::Bucket(BucketMode::Amplitude));
    assert!(matches!(m.arm_b.detector, DetectorDecl::Array { .. }));
}

#[test]
fn seeds_reproduce_and_differ() {
    let here = Path::new(".");
    let o = |seed| run_text(SMALL, here, &RunOverrides { seed: Some(seed), ..Default::default() }, Scale::Raw).unwrap();
    let (a, b, c) = (o(1), o(1), o(2));
    assert_eq!(a.pattern.values, b.pattern.values);
    assert_eq!(a.stderr, b.stderr);
    assert_ne!(a.pattern.values, c.pattern.values);
}

#[test]
fn mask_files_resolve_against_the_bench_directory() {
    let dir = tempfile::tempdir().unwrap();
    let rows: String = (0..401)
        .map(|i| {
            let x = -2e-3 + i as f64 * 1e-5;
            format!("{x:e} {}\n", (-(x / 3e-4f64).powi(2)).exp())
        })
        .collect();
    fs::create_dir(dir.path().join("masks")).unwrap();
    fs::write(dir.path().join("masks/g.txt"), rows).unwrap();
    let text = SMALL.replace("mask double_slit d=5e-4 a=1e-4", "mask file=masks/g.txt");
    let m = bench::parse(&text).unwrap();
    let r = resolve(&m, dir.path()).unwrap();
    match r.object_mask() {
        Some(MaskProfile::Table(t)) => assert!((t.eval(0.0).re - 1.0).abs() < 1e-12),
        other => panic!("expected a table mask, got {other:?}"),
    }
    assert!(matches!(resolve(&m, Path::new("/nonexistent")), Err(Error::Io { .. })));
}

#[test]
fn declarations_the_source_cannot_serve_are_rejected() {
    let classical = SMALL.replace("randomphase seed=9 realizations=200", "classical epsilon=1");
    let with_singles = format!("{classical}singles A min=-1e-3 max=1e-3 n=16\n");
    let r = resolve(&bench::parse(&with_singles).unwrap(), Path::new(".")).unwrap();
    assert!(matches!(run(&r, Scale::Peak), Err(Error::InvalidArgument(_))));
    let no_mask = format!("{}reference scale=1\n", classical.replace("  mask double_slit d=5e-4 a=1e-4\n", ""));
    let r = resolve(&bench::parse(&no_mask).unwrap(), Path::new(".")).unwrap();
    assert!(matches!(run(&r, Scale::Peak), Err(Error::InvalidArgument(_))));
}

#[test]
fn oversized_band_is_a_numeric_guard() {
    let text = SMALL.replace("grid n=1024 extent=0.0128 p_max=3e4", "grid n=1024 extent=1e-5 p_max=5e6");
    let e = run_text(&text, Path::new("."), &RunOverrides::default(), Scale::Peak).unwrap_err();
    assert!(e.is_numeric_guard(), "{e}");
}

#[test]
fn monte_carlo_stderr_covers_the_closed_form_gap() {
    let out = run_text(SMALL, Path::new("."), &RunOverrides::default(), Scale::Raw).unwrap();
    let err = out.stderr.unwrap();
    assert!(err.iter().all(|e| e.is_finite() && *e >= 0.0));
    assert!(out.metrics.rms_vs_closed_form.unwrap() < 0.2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn classical_pattern_ignores_random_entry_phases(seed in any::<u64>(), d1 in 0.1f64..0.8) {
        use rand::{Rng, SeedableRng};
        let ctx = WaveContext::from_wavelength(702e-9).unwrap();
        let grid = SimGrid::new(256, 0.0128, 2e4).unwrap();
        let arm_a = ArmSpec::new(
            vec![Element::FreeSpace { d: d1 }, Element::Mask(MaskProfile::SingleSlit { width: 3e-4 })],
            DetectorSpec::Bucket { axis: grid.space, mode: BucketMode::IntensitySum },
        ).unwrap();
        let arm_b = ArmSpec::new(
            vec![Element::FreeSpace { d: 0.3 }],
            DetectorSpec::PointArray { axis: qimsim::grid::Axis::centered(2e-3, 32).unwrap() },
        ).unwrap();
        let ga = arm_transfer(&arm_a, &ctx, &grid).unwrap();
        let gb = arm_transfer(&arm_b, &ctx, &grid).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let ta: Vec<f64> = (0..ga.modulus().len()).map(|_| rng.random::<f64>() * 6.3).collect();
        let tb: Vec<f64> = (0..gb.modulus().len()).map(|_| rng.random::<f64>() * 6.3).collect();
        let ens = ClassicalEnsemble::new(1.0, 2e4, ModeProfile::Flat).unwrap();
        let det = arm_a.detector.clone();
        let before = classical_coincidence(&ens, &ga, &gb, &det, Scale::Raw).unwrap();
        let after = classical_coincidence(
            &ens,
            &ga.with_entry_phases(&ta).unwrap(),
            &gb.with_entry_phases(&tb).unwrap(),
            &det,
            Scale::Raw,
        ).unwrap();
        prop_assert_eq!(before.values, after.values);
    }
}
