use vmperc::green::{max_displacement_bound, validate_kernel_bounds, BoundsConfig};

#[test]
fn closed_form_displacement_bound() {
    let b = max_displacement_bound(3, 25.0, 10.0);
    assert!((b - 6.0 / 2.2f64.powi(5)).abs() < 1e-12);
}

#[test]
fn nearest_neighbour_bounds_d3() {
    let cfg = BoundsConfig::new(3, 1);
    let rep = validate_kernel_bounds(&cfg).unwrap();
    for c in &rep.checks {
        eprintln!("{}: {} [{}]", c.name, c.pass, c.detail);
    }
    assert!(rep.all_pass());
    let ratio = rep.check("green_tail_ratio").unwrap();
    assert!(ratio.min.unwrap() > 0.0 && ratio.value.is_finite());
    assert_eq!(rep.ratios.len(), 969 * 5);
}

#[test]
fn low_dimensions_only_run_the_displacement_check() {
    let mut cfg = BoundsConfig::new(1, 1);
    cfg.mc_samples = 4000;
    let rep = validate_kernel_bounds(&cfg).unwrap();
    assert_eq!(rep.checks.len(), 1);
    assert!(rep.all_pass());
}
