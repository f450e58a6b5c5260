use super::*;
use crate::spectra::{circle_mode, sectoral_harmonic, torus_mode, zonal_harmonic, EigenMode, ModeExpansion};
use proptest::prelude::*;
use std::f64::consts::{PI, TAU};

fn cfg(res: usize) -> ExtractionConfig {
    ExtractionConfig::with_resolution(res)
}

fn amp2() -> f64 {
    (2.0 / (TAU * TAU)).sqrt()
}

/// A field whose level sets are curved: sum of two plane waves of equal frequency.
fn curved_torus_field() -> ModeExpansion {
    ModeExpansion::new(Manifold::torus(2).unwrap())
        .with_term(1.0, torus_mode(2, &[3, 4], 0.3).unwrap())
        .unwrap()
        .with_term(0.7, torus_mode(2, &[5, 0], 1.1).unwrap())
        .unwrap()
}

#[test]
fn config_validation() {
    assert!(ExtractionConfig::with_resolution(7).validate().is_err());
    assert!(ExtractionConfig::with_resolution(8).validate().is_ok());
    let m = torus_mode(2, &[1, 0], 0.0).unwrap();
    assert!(matches!(extract(&m, 0.0, &cfg(4)), Err(Error::ResolutionTooSmall { .. })));
    assert_eq!(AmbiguityPolicy::parse("bilinear-decider").unwrap(), AmbiguityPolicy::BilinearDecider);
    assert!(AmbiguityPolicy::parse("nope").is_err());
}

#[test]
fn torus_axis_mode_nodal_lines() {
    let m = torus_mode(2, &[1, 0], 0.0).unwrap();
    let mesh = extract(&m, 0.0, &cfg(64)).unwrap();
    assert!((hausdorff_measure(&mesh) - 4.0 * PI).abs() < 1e-9);
    assert!((gradient_integral(&mesh) - 4.0 * PI * amp2()).abs() < 1e-9);
    assert!((weighted_gradient_integral(&mesh, |_| 1.0) - 4.0 * PI * amp2()).abs() < 1e-9);
    for v in &mesh.vertices {
        let d = v[0].min((v[0] - PI).abs()).min(TAU - v[0]);
        assert!(d < 1e-12, "vertex off the nodal lines: {v:?}");
    }
}

#[test]
fn above_sup_is_empty() {
    let modes: Vec<EigenMode> = vec![
        torus_mode(2, &[2, 3], 0.4).unwrap(),
        circle_mode(4, 0.0).unwrap(),
        zonal_harmonic(3).unwrap(),
        sectoral_harmonic(2).unwrap(),
        torus_mode(3, &[1, 1, 0], 0.0).unwrap(),
    ];
    for m in &modes {
        let mesh = extract(m, 1.1 * m.sup_abs(), &cfg(16)).unwrap();
        assert!(mesh.is_empty(), "{m}");
        assert_eq!(hausdorff_measure(&mesh), 0.0);
        assert_eq!(gradient_integral(&mesh), 0.0);
    }
}

#[test]
fn circle_zero_points() {
    let m = circle_mode(3, 0.0).unwrap();
    let mesh = extract(&m, 0.0, &cfg(64)).unwrap();
    assert_eq!(mesh.vertices.len(), 6);
    assert_eq!(hausdorff_measure(&mesh), 6.0);
    for v in &mesh.vertices {
        assert!(m.eval(v).abs() < 1e-14, "{v:?} {}", m.eval(v));
    }
    // each point carries |φ'| = 3/√π
    assert!((gradient_integral(&mesh) - 18.0 / PI.sqrt()).abs() < 1e-13);
}

#[test]
fn circle_finds_two_k_zeros() {
    for k in 1..=64 {
        for phase in [0.0, 0.37] {
            let m = circle_mode(k, phase).unwrap();
            let mesh = extract(&m, 0.0, &cfg(256)).unwrap();
            assert_eq!(mesh.vertices.len(), 2 * k as usize, "k={k} phase={phase}");
        }
    }
}

#[test]
fn diagonal_torus_length() {
    // {sin(2x+3y) = 0} is two closed geodesics with direction (3,−2), each of length 2π√13
    let m = torus_mode(2, &[2, 3], 0.0).unwrap();
    let mesh = extract(&m, 0.0, &cfg(512)).unwrap();
    let expect = 4.0 * PI * 13f64.sqrt();
    assert!((hausdorff_measure(&mesh) - expect).abs() < 1e-3 * expect);
}

#[test]
fn zonal_equator() {
    let m = zonal_harmonic(1).unwrap();
    let mesh = extract(&m, 0.0, &cfg(64)).unwrap();
    assert!((hausdorff_measure(&mesh) - TAU).abs() < 1e-3 * TAU);
    let expect = TAU * (3.0 / (4.0 * PI)).sqrt();
    assert!((gradient_integral(&mesh) - expect).abs() < 1e-3 * expect);
}

#[test]
fn zonal_four_latitude_circles() {
    // roots of P₄: x² = (15 ± 2√30)/35
    let r = 2.0 * 30f64.sqrt();
    let xs = [((15.0 - r) / 35.0).sqrt(), ((15.0 + r) / 35.0).sqrt()];
    let expect: f64 = xs.iter().map(|x| 2.0 * TAU * (1.0 - x * x).sqrt()).sum();
    let m = zonal_harmonic(4).unwrap();
    let mesh = extract(&m, 0.0, &cfg(128)).unwrap();
    assert!((hausdorff_measure(&mesh) - expect).abs() < 1e-4 * expect);
}

#[test]
fn sectoral_meridians_through_the_poles() {
    // sectoral N=1 vanishes on the great circle cos φ = 0, which crosses both poles,
    // where |∇φ| equals the normalisation constant everywhere on it
    let m = sectoral_harmonic(1).unwrap();
    let mesh = extract(&m, 0.0, &cfg(64)).unwrap();
    assert!((hausdorff_measure(&mesh) - TAU).abs() < 1e-3 * TAU);
    let expect = TAU * m.norm_const();
    assert!((gradient_integral(&mesh) - expect).abs() < 1e-3 * expect);
    assert!(mesh.stats.pole_ring_colatitude.unwrap() < PI / 64.0);
}

#[test]
fn level_circles_around_pole() {
    // zonal N=1 at c = b·cos θ₀ is one latitude circle of length 2π sin θ₀, even
    // when it falls inside the first Gauss ring
    let m = zonal_harmonic(1).unwrap();
    let b = m.norm_const();
    for th0 in [0.5, 0.1, 0.01] {
        let mesh = extract(&m, b * f64::cos(th0), &cfg(32)).unwrap();
        let expect = TAU * f64::sin(th0);
        assert!((hausdorff_measure(&mesh) - expect).abs() < 2e-3 * expect, "θ₀={th0}");
    }
}

#[test]
fn vanishing_and_disjoint_weights() {
    let m = torus_mode(2, &[2, 3], 0.0).unwrap();
    let mesh = extract(&m, 0.0, &cfg(128)).unwrap();
    assert!(weighted_gradient_integral(&mesh, |p| m.eval(p)).abs() < 1e-10);
    let k = torus_mode(2, &[1, 0], 0.0).unwrap();
    let mesh = extract(&k, 0.0, &cfg(128)).unwrap();
    let bump = crate::spectra::bump_test_function(k.manifold(), [PI / 2.0, 1.0, 0.0], 1.0).unwrap();
    assert_eq!(weighted_gradient_integral(&mesh, |p| bump.value(p)), 0.0);
}

#[test]
fn zonal_levels_shrink_to_nothing() {
    let m = zonal_harmonic(1).unwrap();
    let sup = m.sup_abs();
    let mut last = f64::INFINITY;
    for frac in [0.0, 0.3, 0.6, 0.9, 0.99, 0.999] {
        let mu = hausdorff_measure(&extract(&m, frac * sup, &cfg(32)).unwrap());
        assert!(mu < last, "measure not decreasing at {frac}");
        last = mu;
    }
    assert_eq!(hausdorff_measure(&extract(&m, 1.0001 * sup, &cfg(32)).unwrap()), 0.0);
}

#[test]
fn refinement_convergence_factor() {
    let f = curved_torus_field();
    for c in [0.0, 0.15] {
        let measures: Vec<f64> = [32, 64, 128, 256]
            .iter()
            .map(|&r| hausdorff_measure(&extract(&f, c, &cfg(r)).unwrap()))
            .collect();
        let diffs: Vec<f64> = measures.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for d in diffs.windows(2) {
            assert!(d[0] / d[1] >= 3.0, "c={c}: {measures:?}");
        }
    }
}

#[test]
fn vertices_lie_on_the_level_set() {
    let f = curved_torus_field();
    for c in [0.0, 0.1, -0.2] {
        let mesh = extract(&f, c, &cfg(64)).unwrap();
        for v in &mesh.vertices {
            assert!((f.value(v) - c).abs() < VERTEX_TOL * (1.0 + c.abs()));
        }
    }
    let z = zonal_harmonic(7).unwrap();
    let mesh = extract(&z, 0.05, &cfg(64)).unwrap();
    for v in &mesh.vertices {
        assert!((z.eval(v) - 0.05).abs() < VERTEX_TOL * 1.05);
    }
}

#[test]
fn saddle_policies_agree() {
    // sin x sin y + small level: saddles near every grid-offset crossing
    let a = 1.0 / amp2();
    let f = ModeExpansion::new(Manifold::torus(2).unwrap())
        .with_term(0.5 * a, torus_mode(2, &[1, -1], 0.5 * PI + 0.03).unwrap())
        .unwrap()
        .with_term(-0.5 * a, torus_mode(2, &[1, 1], 0.5 * PI + 0.07).unwrap())
        .unwrap();
    let mut measures = Vec::new();
    for policy in [AmbiguityPolicy::Subdivide, AmbiguityPolicy::BilinearDecider] {
        let cfg = ExtractionConfig { resolution: 64, ambiguity_policy: policy, ..Default::default() };
        let mesh = extract(&f, 1e-4, &cfg).unwrap();
        measures.push(hausdorff_measure(&mesh));
    }
    assert!((measures[0] - measures[1]).abs() < 1e-2 * measures[0], "{measures:?}");
}

#[test]
fn bilinear_decider_cases() {
    // inside corners c00, c11 with a strongly positive centre
    assert!(squares::bilinear_decider(&[1.0, -0.1, 1.0, -0.1], 0.0));
    // inside corners c00, c11 with a negative centre
    assert!(!squares::bilinear_decider(&[0.1, -1.0, 0.1, -1.0], 0.0));
}

#[test]
fn torus3_planes() {
    let m = torus_mode(3, &[1, 0, 0], 0.0).unwrap();
    let mesh = extract(&m, 0.0, &cfg(16)).unwrap();
    assert!((hausdorff_measure(&mesh) - 2.0 * TAU * TAU).abs() < 1e-9);
    let d = torus_mode(3, &[1, 1, 0], 0.2).unwrap();
    let mesh = extract(&d, 0.0, &cfg(24)).unwrap();
    // two planes x + y ≡ −0.2 (mod π), each of area 2π · 2π√2
    let expect = 2.0 * TAU * TAU * 2f64.sqrt();
    assert!((hausdorff_measure(&mesh) - expect).abs() < 1e-9 * expect);
}

#[test]
fn torus3_mesh_is_closed() {
    let f = ModeExpansion::new(Manifold::torus(3).unwrap())
        .with_term(1.0, torus_mode(3, &[1, 2, 2], 0.3).unwrap())
        .unwrap()
        .with_term(0.8, torus_mode(3, &[3, 0, 0], 1.3).unwrap())
        .unwrap();
    let mesh = extract(&f, 0.05, &cfg(24)).unwrap();
    let Elements::Triangles(tris) = &mesh.elements else { panic!("expected triangles") };
    assert!(!tris.is_empty());
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for t in tris {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort_unstable();
    let mut i = 0;
    while i < edges.len() {
        let mut j = i;
        while j < edges.len() && edges[j] == edges[i] {
            j += 1;
        }
        assert_eq!(j - i, 2, "edge {:?} used {} times", edges[i], j - i);
        i = j;
    }
}

#[test]
fn torus3_nodal_gradient_integral() {
    // ∫_N |∇φ| dS = (λ²/2) ∫|φ| = (λ²/2)·A·(2π)³·(2/π) for a plane wave
    let m = torus_mode(3, &[1, 2, 2], 0.0).unwrap();
    let mesh = extract(&m, 0.0, &cfg(48)).unwrap();
    let a = (2.0 / TAU.powi(3)).sqrt();
    let expect = 4.5 * a * TAU.powi(3) * 2.0 / PI;
    assert!((gradient_integral(&mesh) - expect).abs() < 1e-3 * expect);
}

#[test]
fn export_formats() {
    let m = torus_mode(2, &[1, 1], 0.0).unwrap();
    let mesh = extract(&m, 0.0, &cfg(16)).unwrap();
    let text = export::to_text(&mesh);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "# level-set dim=2 c=0.0000000000000000e0");
    let rest: Vec<&str> = lines.collect();
    assert_eq!(rest.len(), mesh.n_elements());
    for l in &rest {
        let cols: Vec<&str> = l.split(' ').collect();
        assert_eq!(cols[0], "S");
        assert_eq!(cols.len(), 7);
        let x: f64 = cols[1].parse().unwrap();
        assert!(x.is_finite());
    }
    let json = export::to_json(&mesh);
    assert_eq!(json["manifold"], "torus2");
    assert_eq!(json["elements"]["kind"], "segments");
    assert_eq!(json["vertices"].as_array().unwrap().len(), mesh.vertices.len());

    let c = circle_mode(2, 0.0).unwrap();
    let text = export::to_text(&extract(&c, 0.0, &cfg(16)).unwrap());
    assert_eq!(text.lines().filter(|l| l.starts_with("P ")).count(), 4);
    let t3 = torus_mode(3, &[1, 0, 0], 0.0).unwrap();
    let text = export::to_text(&extract(&t3, 0.0, &cfg(8)).unwrap());
    let first = text.lines().nth(1).unwrap();
    assert!(first.starts_with("T "));
    assert_eq!(first.split(' ').count(), 13);
}

#[test]
fn extraction_is_deterministic() {
    let f = curved_torus_field();
    let a = extract(&f, 0.1, &cfg(96)).unwrap();
    let b = extract(&f, 0.1, &cfg(96)).unwrap();
    assert_eq!(a, b);
}

fn arb_torus_mode() -> impl Strategy<Value = EigenMode> {
    (prop::collection::vec(-5i64..=5, 2), 0.0f64..TAU)
        .prop_filter("k != 0", |(k, _)| k.iter().any(|&c| c != 0))
        .prop_map(|(k, ph)| torus_mode(2, &k, ph).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn level_symmetry(m in arb_torus_mode(), frac in -0.95f64..0.95, res in 16usize..48) {
        let c = frac * m.sup_abs();
        let a = hausdorff_measure(&extract(&m, c, &cfg(res)).unwrap());
        let b = hausdorff_measure(&extract(&m.negated(), -c, &cfg(res)).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn sphere_level_symmetry(n in 1u32..12, sectoral in any::<bool>(), frac in -0.9f64..0.9) {
        let m = if sectoral { sectoral_harmonic(n).unwrap() } else { zonal_harmonic(n).unwrap() };
        let c = frac * m.sup_abs();
        let a = hausdorff_measure(&extract(&m, c, &cfg(24)).unwrap());
        let b = hausdorff_measure(&extract(&m.negated(), -c, &cfg(24)).unwrap());
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn newton_never_increases_residual(
        m in arb_torus_mode(),
        x in 0.0f64..TAU, y in 0.0f64..TAU,
        frac in -0.9f64..0.9,
        steps in 0usize..6,
    ) {
        let c = frac * m.sup_abs();
        let p = [x, y, 0.0];
        let before = (m.eval(&p) - c).abs();
        let (q, after) = newton_project(&m, &p, c, steps, 0.0, 0.2);
        prop_assert!(after <= before);
        prop_assert!(((m.eval(&q) - c).abs() - after).abs() == 0.0);
    }

    #[test]
    fn element_measures_nonnegative(m in arb_torus_mode(), frac in -0.9f64..0.9) {
        let mesh = extract(&m, frac * m.sup_abs(), &cfg(24)).unwrap();
        prop_assert!(mesh.grad_norms.iter().all(|g| *g >= 0.0 && g.is_finite()));
        prop_assert!(mesh.element_measures().iter().all(|e| *e >= 0.0 && e.is_finite()));
        // elements are local: no segment spans more than one cell diagonal
        let h = TAU / 24.0;
        prop_assert!(mesh.element_measures().iter().all(|e| *e <= 2.0 * h));
    }
}
