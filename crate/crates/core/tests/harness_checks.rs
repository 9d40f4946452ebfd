use amfd::harness::{
    compute_reference, export_exercise_region, export_multipliers, run_experiment, temporal_error, ExperimentSpec,
    RunOptions, BUNDLED_SPECS,
};

#[test]
fn strike_sits_midway_for_every_bundled_mesh() {
    for (name, _) in BUNDLED_SPECS {
        let spec = ExperimentSpec::bundled(name).unwrap();
        let k = spec.strike();
        for nu in spec.nu_list.iter().copied().chain([1, 3, 5]) {
            let mesh = spec.mesh(nu).unwrap();
            let i = mesh.midway_index().unwrap();
            let p = mesh.points();
            let mid = 0.5 * (p[i] + p[i + 1]);
            assert!((mid - k).abs() <= 1e-10 * k, "{name} nu {nu}: {mid}");
            assert!(p[i] < k && k < p[i + 1]);
        }
    }
}

#[test]
fn doubling_reference_steps_barely_moves_the_put_reference() {
    let spec = ExperimentSpec::bundled("put1d").unwrap();
    let mut coarse = spec.clone();
    coarse.nu_list.truncate(1);
    let report = run_experiment(&coarse, &RunOptions::default()).unwrap();
    let floor = report.rows.iter().filter_map(|r| r.error).fold(f64::INFINITY, f64::min);
    let mut fine = spec.clone();
    fine.ref_multiplier = 2 * spec.ref_multiplier;
    for &nu in &spec.nu_list {
        let problem = spec.problem(nu).unwrap();
        let a = compute_reference(&spec, &problem, None).unwrap();
        let b = compute_reference(&fine, &problem, None).unwrap();
        let change = temporal_error(&a, &b, &problem.grid, problem.strike).unwrap();
        assert!(
            change < 0.1 * floor,
            "nu {nu}: change {change:e} vs coarsest error {floor:e}"
        );
    }
}

#[test]
fn reference_is_deterministic() {
    let spec = ExperimentSpec::bundled("minput2d").unwrap();
    let problem = spec.problem(7).unwrap();
    let a = compute_reference(&spec, &problem, None).unwrap();
    let b = compute_reference(&spec, &problem, None).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn put_multiplier_support_is_contiguous_from_zero() {
    let spec = ExperimentSpec::bundled("put1d").unwrap();
    let ex = export_multipliers(&spec, "BE-IT", spec.nu_for_m(100).unwrap()).unwrap();
    let mut times: Vec<f64> = ex.rows.iter().map(|r| r.0).collect();
    times.dedup();
    assert_eq!(times.len(), ex.m);
    for t in times {
        let slice = ex.slice(t);
        let flags: Vec<bool> = slice.iter().map(|&(_, l)| l > 0.0).collect();
        // once lambda vanishes it stays zero up to 3K/2
        let first_zero = flags.iter().position(|f| !f).unwrap_or(flags.len());
        assert!(flags[first_zero..].iter().all(|f| !f), "t = {t}");
        assert!(slice.iter().all(|&(s, l)| l == 0.0 || s < spec.strike()), "t = {t}");
    }
}

#[test]
fn min_put_region_lies_where_the_payoff_is_positive() {
    let spec = ExperimentSpec::bundled("minput2d").unwrap();
    let k = spec.strike();
    for method in ["BE-IT", "CN-P"] {
        let region = export_exercise_region(&spec, method, 29).unwrap();
        let flagged: Vec<(f64, f64)> = region.flagged().collect();
        assert!(!flagged.is_empty(), "{method}");
        assert!(flagged.iter().all(|&(s1, s2)| s1.min(s2) < k), "{method}");
        let s_max = region.rows.iter().map(|r| r.0).fold(0.0, f64::max);
        let corner = region.rows.iter().find(|r| r.0 == s_max && r.1 == s_max).unwrap();
        assert!(!corner.2, "{method}");
    }
}

#[test]
fn max_butterfly_region_crosses_both_strike_lines() {
    let spec = ExperimentSpec::bundled("butterfly2d").unwrap();
    let mesh = spec.mesh(29).unwrap();
    let i = mesh.midway_index().unwrap();
    let near = [mesh.points()[i], mesh.points()[i + 1]];
    let region = export_exercise_region(&spec, "BE-IT", 29).unwrap();
    let flagged: Vec<(f64, f64)> = region.flagged().collect();
    assert!(flagged.iter().any(|&(s1, _)| near.contains(&s1)));
    assert!(flagged.iter().any(|&(_, s2)| near.contains(&s2)));
}
