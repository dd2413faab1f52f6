use fmin_core::geometry::{
    arc_residuals, check_embedded, close_profile, profile_residual, revolve, ClosedProfile,
};
use fmin_core::shooting::{r0, DEFAULT_ON_AXIS_TOL};
use fmin_core::{
    find_torus, IntegratorOptions, ProblemParams, ProfileState, TorusSettings, WeightFunction,
};

fn torus(n: u32, weight: WeightFunction) -> (ProblemParams, f64, ClosedProfile) {
    let p = ProblemParams::new(n, weight).unwrap();
    let sol = find_torus(&p, &IntegratorOptions::default(), &TorusSettings::default()).unwrap();
    assert!(sol.closure_error <= 1e-8, "closure {}", sol.closure_error);
    assert_eq!(
        sol.boundary_switches().len(),
        1,
        "{:?}",
        sol.boundary_switches()
    );
    let cp = close_profile(&sol.half_profile, &p, 1024, DEFAULT_ON_AXIS_TOL).unwrap();
    (p, sol.r_star, cp)
}

#[test]
fn higher_dimensional_torus_sits_outside_the_sphere() {
    let (p, r_star, cp) = torus(3, WeightFunction::self_shrinker());
    assert!(r_star > p.sphere_radius(), "{r_star}");
    assert!(check_embedded(&cp).unwrap().embedded);
    assert!(profile_residual(&cp, &p).max <= 1e-5);
}

#[test]
fn saturating_torus_starts_above_the_comparison_curve() {
    let w = WeightFunction::saturating(1.0, 2.0, 1.0).unwrap();
    let (p, r_star, cp) = torus(2, w);
    assert!(r_star >= r0(&p).unwrap());
    assert!(cp.mirror_defect() <= 1e-8, "{}", cp.mirror_defect());
}

#[test]
fn closed_profile_turns_once_and_is_symmetric() {
    let (_, _, cp) = torus(2, WeightFunction::self_shrinker());
    assert!(cp.mirror_defect() <= 1e-8);
    let turning = cp.turning();
    assert!(
        (turning.abs() - std::f64::consts::TAU).abs() <= 1e-6,
        "{turning}"
    );
}

#[test]
fn mesh_vertices_lie_on_the_revolved_profile() {
    let (_, _, cp) = torus(2, WeightFunction::self_shrinker());
    let mesh = revolve(&cp, 32).unwrap();
    assert_eq!(mesh.euler_characteristic(), 0);
    assert!(mesh.is_closed_oriented());
    assert_eq!(mesh.vertices.len(), cp.len() * 32);
    for (k, v) in mesh.vertices.iter().enumerate() {
        let s = cp.points[k / mesh.segments];
        let radius = v[1].hypot(v[2]);
        assert!(
            (v[0] - s.x).abs() <= 1e-9 && (radius - s.r).abs() <= 1e-9,
            "{k}"
        );
    }
}

#[test]
fn shooting_is_deterministic() {
    let p = ProblemParams::new(2, WeightFunction::self_shrinker()).unwrap();
    let opts = IntegratorOptions::default();
    let a = find_torus(&p, &opts, &TorusSettings::default()).unwrap();
    let b = find_torus(&p, &opts, &TorusSettings::default()).unwrap();
    assert_eq!(a.r_star.to_bits(), b.r_star.to_bits());
    assert_eq!(a.history, b.history);
}

#[test]
fn exact_curves_have_small_residuals() {
    let p = ProblemParams::new(2, WeightFunction::self_shrinker()).unwrap();
    let radius = p.cylinder_radius();
    let line: Vec<_> = (0..50)
        .map(|i| ProfileState::new(0.1 * i as f64, -2.5 + 0.1 * i as f64, radius, 0.0))
        .collect();
    let cyl = arc_residuals(&line, 0.1, &p);
    assert!(cyl.max <= 1e-12, "{}", cyl.max);

    let sphere = p.sphere_radius();
    let h = 1e-3;
    let arc: Vec<_> = (0..2000)
        .map(|i| {
            let t = 0.3 + h * i as f64;
            let a = t / sphere;
            ProfileState::new(t, sphere * a.sin(), sphere * a.cos(), -a)
        })
        .collect();
    let report = arc_residuals(&arc, h, &p);
    assert!(report.max <= 1e-6, "{}", report.max);
}
