use super::*;
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn amp2() -> f64 {
    (2.0 / (TAU * TAU)).sqrt()
}

/// P_N and its roots by plain recurrence and bisection.
fn legendre_roots(n: usize) -> Vec<f64> {
    let p = |x: f64| {
        let (mut a, mut b) = (1.0, x);
        for k in 1..n {
            let c = ((2 * k + 1) as f64 * x * b - k as f64 * a) / (k + 1) as f64;
            a = b;
            b = c;
        }
        b
    };
    let m = 20_000;
    let mut roots = Vec::new();
    for i in 0..m {
        let (mut lo, mut hi) = (-1.0 + 2.0 * i as f64 / m as f64, -1.0 + 2.0 * (i + 1) as f64 / m as f64);
        if p(lo).signum() == p(hi).signum() {
            continue;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if p(mid).signum() == p(lo).signum() {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots
}

fn record(index: u32, lambda: f64, l1: f64, grad: f64, measure: f64, weighted: f64) -> NormRecord {
    NormRecord {
        index,
        label: format!("row {index}"),
        resolution: 64,
        lambda,
        l1,
        l2: 1.0,
        lp: vec![],
        sup: 1.0,
        grad_sup: grad,
        grad_sup_nodal: grad,
        nodal_measure: measure,
        weighted_nodal_integral: weighted,
        identity_rel_residual: 0.0,
        flagged: false,
    }
}

#[test]
fn exact_power_law_fit() {
    let xs: Vec<f64> = (1..=8).map(|i| i as f64 * 1.7).collect();
    let ys: Vec<f64> = xs.iter().map(|x| 3.0 * x * x).collect();
    let f = fit_power_law(&xs, &ys).unwrap();
    assert!((f.slope - 2.0).abs() < 1e-12);
    assert!((f.intercept - 3f64.ln()).abs() < 1e-12);
    assert!(f.stderr >= 0.0 && f.stderr < 1e-12);
    assert!((f.r_squared - 1.0).abs() < 1e-12);
    assert_eq!(f.n_points, 8);
}

#[test]
fn fit_rejects_bad_input() {
    let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
    assert!(fit_power_law(&xs, &[1.0, 2.0, 0.0, 4.0, 5.0]).is_err());
    assert!(fit_power_law(&xs, &[1.0, 2.0, -3.0, 4.0, 5.0]).is_err());
    assert!(fit_power_law(&xs[..4], &[1.0, 2.0, 3.0, 4.0]).is_err());
    assert!(fit_power_law(&xs, &[1.0, 2.0]).is_err());
    assert!(fit_power_law(&[2.0; 5], &xs).is_err());
}

#[test]
fn noisy_fit_has_positive_stderr() {
    let xs: Vec<f64> = (1..=6).map(f64::from).collect();
    let ys: Vec<f64> = xs.iter().enumerate().map(|(i, x)| x.powf(1.5) * (1.0 + 0.05 * (-1f64).powi(i as i32))).collect();
    let f = fit_power_law(&xs, &ys).unwrap();
    assert!(f.stderr > 0.0 && f.r_squared < 1.0);
    assert!((f.slope - 1.5).abs() < 0.1);
}

#[test]
fn lp_norm_examples() {
    let t = Family::TorusAxis.mode(1).unwrap();
    let g = build_grid(t.manifold(), 64).unwrap();
    assert!((lp_norm(&t, 2.0, &g).unwrap() - 1.0).abs() < 1e-12);
    // A·∫₀^{2π}|sin x|dx·2π
    assert!((lp_norm(&t, 1.0, &g).unwrap() - amp2() * 4.0 * TAU).abs() < 1e-12);
    assert!((lp_norm(&t, f64::INFINITY, &g).unwrap() - amp2()).abs() < 1e-14);
    assert!(lp_norm(&t, 0.5, &g).is_err());
    assert!(lp_norm(&t, f64::NAN, &g).is_err());

    for m in [zonal_harmonic(7).unwrap(), sectoral_harmonic(12).unwrap(), circle_mode(5, 0.3).unwrap()] {
        let g = build_grid(m.manifold(), 64).unwrap();
        assert!((lp_norm(&m, 2.0, &g).unwrap() - 1.0).abs() < 1e-8, "{m}");
        let sup = lp_norm(&m, f64::INFINITY, &g).unwrap();
        assert!((sup - m.sup_abs()).abs() < 1e-10 * m.sup_abs(), "{m}: {sup}");
    }
    // zonal sup sits on the pole
    let z = zonal_harmonic(4).unwrap();
    let g = build_grid(z.manifold(), 16).unwrap();
    let sup = lp_norm(&z, f64::INFINITY, &g).unwrap();
    assert!((sup - (9.0 / (4.0 * PI)).sqrt()).abs() < 1e-12);
}

#[test]
fn grad_sup_examples() {
    let a = amp2();
    for (k, norm) in [([1, 0], 1.0), ([2, 3], 13f64.sqrt()), ([4, -1], 17f64.sqrt())] {
        let m = torus_mode(2, &k, 0.37).unwrap();
        let g = build_grid(m.manifold(), 48).unwrap();
        assert!((grad_sup(&m, &g) - a * norm).abs() < 1e-12, "{k:?}");
    }
    // zonal N=1: |∇φ| = √(3/4π)·sin θ, max on the equator
    let z = zonal_harmonic(1).unwrap();
    let g = build_grid(z.manifold(), 17).unwrap();
    assert!((grad_sup(&z, &g) - (3.0 / (4.0 * PI)).sqrt()).abs() < 1e-12);
}

#[test]
fn torus_axis_scan_closed_forms() {
    let t = scan_family(Family::TorusAxis, &[1, 2, 3, 4, 5, 6], &ScanConfig::default()).unwrap();
    let a = amp2();
    for (r, m) in t.records.iter().zip(1..) {
        assert_eq!(r.index, m);
        let mf = m as f64;
        assert!((r.nodal_measure - 4.0 * PI * mf).abs() < 1e-9 * mf, "{r:?}");
        assert!((r.weighted_nodal_integral / (mf * mf) - 4.0 * PI * a).abs() < 1e-9, "{r:?}");
        assert!((r.grad_sup - a * mf).abs() < 1e-12);
        assert!((r.l1 - 4.0 * 2f64.sqrt()).abs() < 1e-10);
        assert!(r.identity_rel_residual < 1e-10);
        assert!(!r.flagged);
    }
    let f = fit_exponent(&t, Column::Lambda, Column::NodalMeasure).unwrap();
    assert!((f.slope - 1.0).abs() < 1e-10);
    let rep = verify_bounds(&t, t.manifold()).unwrap();
    assert!(rep.passed, "{rep:?}");
    let w = rep.ratio("weighted_nodal_integral").unwrap();
    assert!(w.variation < 1e-9 && w.max <= TAU);
}

#[test]
fn circle_scan_closed_forms() {
    let t = scan_family(Family::Circle, &[1, 2, 3, 5, 8], &ScanConfig::default()).unwrap();
    for r in &t.records {
        let k = r.index as f64;
        assert_eq!(r.nodal_measure, 2.0 * k);
        assert!((r.l1 - 4.0 / PI.sqrt()).abs() < 1e-13);
        assert!((r.weighted_nodal_integral - 2.0 * k * k / PI.sqrt()).abs() < 1e-12 * k * k);
    }
    for (y, x, band) in default_bands(Family::Circle) {
        assert!(band.check(&t, x, y).unwrap().passed, "{}", y.name());
    }
    assert!(verify_bounds(&t, Manifold::circle()).unwrap().passed);
}

#[test]
fn zonal_scan_measures_latitude_circles() {
    let t = scan_family(Family::Zonal, &[2, 3, 4, 5, 6, 7], &ScanConfig::default()).unwrap();
    for r in &t.records {
        let expect: f64 = legendre_roots(r.index as usize).iter().map(|x| TAU * (1.0 - x * x).sqrt()).sum();
        assert!((r.nodal_measure - expect).abs() < 1e-3 * expect, "{r:?} vs {expect}");
        assert!(r.identity_rel_residual < 5e-3, "{r:?}");
    }
}

#[test]
fn scan_invariants_hold_on_every_family() {
    let cfg = ScanConfig { points_per_wavelength: 6.0, ..ScanConfig::default() };
    for fam in Family::ALL {
        let t = scan_family(fam, &[3, 4, 5, 6, 7], &cfg).unwrap();
        let vol = fam.manifold().volume();
        for r in &t.records {
            assert!((r.l2 - 1.0).abs() < 1e-8, "{fam} {r:?}");
            assert!(r.l1 <= vol.sqrt() * (1.0 + 1e-8));
            assert!(r.sup * vol.sqrt() >= 1.0 - 1e-8);
            assert!(r.sup * r.l1 >= 1.0 - 1e-8);
            assert!(r.grad_sup_nodal <= r.grad_sup * (1.0 + 1e-12), "{fam} {r:?}");
            assert_eq!(r.lp_value(2.0).map(|v| (v - r.l2).abs() < 1e-12), Some(true));
            // Hölder: Vol^{-1/p}·‖φ‖_p is nondecreasing in p
            let means: Vec<f64> = r.lp.iter().map(|(p, v)| v * vol.powf(-1.0 / p)).collect();
            assert!(means.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-12)), "{fam} {r:?}");
        }
    }
}

#[test]
fn scan_validation() {
    let cfg = ScanConfig::default();
    assert!(scan_family(Family::Zonal, &[1, 2, 3, 4], &cfg).is_err());
    assert!(scan_family(Family::Zonal, &[0, 1, 2, 3, 4], &cfg).is_err());
    let bad = ScanConfig { p_values: vec![0.5], ..ScanConfig::default() };
    assert!(scan_family(Family::Circle, &[1, 2, 3, 4, 5], &bad).is_err());
}

#[test]
fn resolution_grows_with_lambda() {
    let cfg = ScanConfig::default();
    assert_eq!(cfg.resolution_for(&zonal_harmonic(2).unwrap()), 64);
    let r = cfg.resolution_for(&zonal_harmonic(200).unwrap());
    assert!(r >= 800 && r % 8 == 0);
    assert_eq!(cfg.resolution_for(&Family::TorusAxis.mode(64).unwrap()), 512);
}

#[test]
fn verify_bounds_detects_broken_trends() {
    let rows = |l1: &dyn Fn(f64) -> f64| ScanTable {
        family: Family::TorusAxis,
        records: (1..=6).map(|m| {
            let lam = m as f64;
            record(m, lam, l1(lam), amp2() * lam, 4.0 * PI * lam, 4.0 * PI * amp2() * lam * lam)
        }).collect(),
    };
    let good = rows(&|_| 5.0);
    assert!(verify_bounds(&good, good.manifold()).unwrap().passed);
    let bad = rows(&|lam| 5.0 / lam);
    let rep = verify_bounds(&bad, bad.manifold()).unwrap();
    assert!(!rep.passed && !rep.ratio("l1").unwrap().passed);
    assert!(rep.ratio("grad_sup").unwrap().passed);

    assert!(verify_bounds(&good, Manifold::sphere()).is_err());
    let empty = ScanTable { family: Family::Zonal, records: vec![] };
    assert!(verify_bounds(&empty, Manifold::sphere()).is_err());
}

#[test]
fn csv_layout() {
    let t = scan_family(Family::Circle, &[1, 2, 3, 4, 5], &ScanConfig::default()).unwrap();
    let csv = t.to_csv().unwrap();
    assert!(!csv.contains('\r'));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6);
    assert!(lines[0].starts_with("family,index,label,resolution,lambda,l1,l2,lp_1,lp_2,lp_4,lp_6,sup"));
    assert!(lines[1].starts_with("circle,1,circle k=1,"));
    let mut rd = csv::Reader::from_reader(csv.as_bytes());
    let l1_col = rd.headers().unwrap().iter().position(|h| h == "l1").unwrap();
    for (rec, r) in rd.records().zip(&t.records) {
        let v: f64 = rec.unwrap()[l1_col].parse().unwrap();
        assert_eq!(v.to_bits(), r.l1.to_bits());
    }
    // missing optional values are empty cells
    let mut odd = t.clone();
    odd.records[0].lp.clear();
    let line = odd.to_csv().unwrap().lines().nth(1).unwrap().to_string();
    assert!(line.contains(",,,,"));
}

#[test]
fn parsing() {
    assert_eq!(IndexRange::parse("20:200:20").unwrap().indices().len(), 10);
    assert_eq!(IndexRange::parse("1:64").unwrap().indices().len(), 64);
    for bad in ["", "5", "0:4", "4:1", "1:5:0", "a:b"] {
        assert!(IndexRange::parse(bad).is_err(), "{bad}");
    }
    for f in Family::ALL {
        assert_eq!(Family::parse(f.name()).unwrap(), f);
    }
    assert!(Family::parse("torus").is_err());
    for c in ["lambda", "l1", "lp_4", "grad_sup", "nodal_measure", "weighted_over_lambda2", "index"] {
        assert_eq!(Column::parse(c).unwrap().name(), c);
    }
    assert!(Column::parse("lp_0.5").is_err());
    assert!(Column::parse("bogus").is_err());
}

proptest! {
    #[test]
    fn power_laws_are_recovered(
        slope in -3.0f64..3.0,
        scale in 0.01f64..100.0,
        x0 in 0.5f64..10.0,
        ratio in 1.1f64..3.0,
        n in 5usize..12,
    ) {
        let xs: Vec<f64> = (0..n).map(|i| x0 * ratio.powi(i as i32)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| scale * x.powf(slope)).collect();
        let f = fit_power_law(&xs, &ys).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-10);
        prop_assert!(f.stderr >= 0.0);
    }
}
