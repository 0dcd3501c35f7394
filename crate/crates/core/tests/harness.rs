use std::f64::consts::PI;

use latrem_core::geometry::Rotation;
use latrem_core::harness::*;
use latrem_core::lattice::RemainderSample;

/// Asymptotic Kolmogorov p-value of a one-sample KS statistic.
fn ks_pvalue(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    let lam = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
    let p: f64 = (1..=100).map(|k| 2.0 * (-1f64).powi(k - 1) * (-2.0 * (k * k) as f64 * lam * lam).exp()).sum();
    p.clamp(0.0, 1.0)
}

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::parse(text).unwrap()
}

#[test]
fn haar_rotations_are_uniform() {
    let angles: Vec<f64> = (0..10_000)
        .map(|s| {
            let r = haar_rotation(s, 2).unwrap();
            r.entry(1, 0).atan2(r.entry(0, 0)).rem_euclid(2.0 * PI)
        })
        .collect();
    let p = ks_pvalue(angles, |a| a / (2.0 * PI));
    assert!(p > 0.01, "angle p = {p}");
    let rots: Vec<Rotation> = (0..10_000).map(|s| haar_rotation(1_000_000 + s, 3).unwrap()).collect();
    for i in 0..3 {
        // coordinates of a uniform point on S² are uniform on [-1, 1]
        let xs: Vec<f64> = rots.iter().map(|r| r.entry(i, 0)).collect();
        let p = ks_pvalue(xs, |x| (x + 1.0) / 2.0);
        assert!(p > 0.01, "coordinate {i}: p = {p}");
    }
    for r in rots.iter().take(100) {
        assert!((r.det() - 1.0).abs() < 1e-12);
        r.check(1e-12).unwrap();
    }
    assert_eq!(haar_rotation(77, 4).unwrap(), haar_rotation(77, 4).unwrap());
    assert!(haar_rotation(1, 1).is_err());
}

#[test]
fn ball_scan_within_trivial_bound() {
    let c = config("body = ball\nd = 2\nt_min = 10\nt_max = 1000\npoints = 64\n");
    let rows = remainder_scan(&c).unwrap();
    assert_eq!(rows.len(), 64);
    assert!((rows[0].sample.t - 10.0).abs() < 1e-12 && (rows[63].sample.t - 1000.0).abs() < 1e-9);
    for r in &rows {
        let s = &r.sample;
        assert!(s.remainder.abs() <= 8.0 * s.t, "t={} P={}", s.t, s.remainder);
        assert!((s.count as f64 - s.volume_term - s.remainder).abs() < 1e-6 * s.volume_term);
    }
}

#[test]
fn scans_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let text = "body = supersphere\nomega = 4\nd = 2\nseed = 9\nrotations = 3\nt_min = 2\nt_max = 300\npoints = 40\nfit_t_min = 2\n";
    let mut a = config(text);
    let mut b = config(text);
    a.out = Some(dir.path().join("a.csv"));
    b.out = Some(dir.path().join("b.csv"));
    let sa = experiment(&a).unwrap();
    let sb = experiment(&b).unwrap();
    let fa = std::fs::read(dir.path().join("a.csv")).unwrap();
    let fb = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(fa, fb);
    assert_eq!(sa.fits, sb.fits);
    assert!(summary_path(a.out.as_ref().unwrap()).exists());
    let rows = read_csv(&dir.path().join("a.csv")).unwrap();
    assert_eq!(rows.len(), 120);
    assert_eq!(rows, remainder_scan(&a).unwrap());
    let mut other = config(text);
    other.seed = 10;
    assert_ne!(remainder_scan(&other).unwrap(), rows);
}

#[test]
fn config_parsing() {
    let c = config("# comment\nbody = ellipsoid:1,2,0.5 # inline\nd=3\nrotations = 2\nidentity = yes\nt_max = 50\n");
    assert_eq!(c.d, 3);
    assert!(c.identity && c.rotation(0).unwrap().is_identity());
    assert!(!c.rotation(1).unwrap().is_identity());
    assert!(ExperimentConfig::parse("colour = red").is_err());
    assert!(ExperimentConfig::parse("t_min = 0.5").is_err());
    assert!(ExperimentConfig::parse("body = supersphere").is_err());
    assert!(ExperimentConfig::parse("points = many").is_err());
}

#[test]
fn exact_power_law_fit() {
    let theta = Rotation::identity(2);
    let samples: Vec<RemainderSample> = geometric_grid(1.0, 4096.0, 200)
        .into_iter()
        .map(|t| RemainderSample { theta: theta.clone(), t, count: 0, volume_term: 0.0, remainder: t.powf(0.6) })
        .collect();
    // block sups sit at the right end of each block, a constant factor off the center
    let fit = fit_exponent(&samples, FitWindow::default(), None).unwrap();
    assert!((fit.fitted_alpha - 0.6).abs() < 1e-3, "{}", fit.fitted_alpha);
    assert!(fit.within_trivial);
    let few: Vec<RemainderSample> = samples.iter().filter(|s| s.t < 12.0).cloned().collect();
    assert!(fit_exponent(&few, FitWindow::default(), None).is_err());
}

#[test]
fn reference_exponents() {
    let r = ReferenceExponents::new(2, Some(8));
    assert_eq!(r.trivial, 1.0);
    assert!((r.hlawka - 2.0 / 3.0).abs() < 1e-15);
    assert!((r.randol.unwrap() - 0.875).abs() < 1e-15);
    let r3 = ReferenceExponents::new(3, None);
    assert!(r3.randol.is_none());
    assert!(r3.theorem.unwrap() < r3.hlawka);
}

#[test]
fn disk_exponent_and_rotation_independence() {
    let c = config("body = ball\nd = 2\nrotations = 3\nt_min = 1\nt_max = 10000\npoints = 400\n");
    let s = experiment(&c).unwrap();
    let fits: Vec<_> = s.fits.iter().map(|f| f.fit.clone().unwrap()).collect();
    let a0 = fits[0].fitted_alpha;
    assert!((0.4..=0.7).contains(&a0), "disk exponent {a0}");
    for f in &fits {
        assert!((f.fitted_alpha - a0).abs() <= f.confidence_halfwidth + fits[0].confidence_halfwidth);
    }
}

#[test]
fn flat_rational_normals_inflate_the_remainder() {
    let top = |text: String| -> f64 {
        let rows = remainder_scan(&config(&text)).unwrap();
        let samples: Vec<RemainderSample> = rows.into_iter().map(|r| r.sample).collect();
        block_sups(&samples, FitWindow::default()).last().unwrap().sup
    };
    let base = "body = supersphere\nomega = 8\nd = 2\nt_min = 1024\nt_max = 4096\npoints = 96\n";
    let unrotated = top(format!("{base}identity = true\n"));
    let seeds = 20;
    let wins = (0..seeds).filter(|s| top(format!("{base}seed = {s}\n")) < unrotated).count();
    assert!(wins * 5 >= seeds * 4, "θ = I larger on {wins}/{seeds} seeds");
}
