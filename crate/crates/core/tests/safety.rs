use acc_cutin::commands::synthetic_stable;
use acc_cutin::dde::ParamSet;
use acc_cutin::params::Population;
use acc_cutin::safety::{
    aggregate, aggregate_ttc, default_gamma_grid, high_risk_template, sweep, time_to_collision, trial_rng, Axis,
    AxisRange, SweepGrid, TtcResult,
};
use acc_cutin::scenario::{CutInProfile, InitialState, ScenarioConfig};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coasting(g0: f64, closing: f64) -> ScenarioConfig {
    let (p_f, v_f) = (0.0, 20.0);
    // follower travels v_f over the second before the cut-in
    let p_c = p_f + v_f + 3.0 + g0;
    ScenarioConfig {
        ufb: 0.0,
        profile: CutInProfile::default().flat(),
        initial: InitialState::Kinematics {
            p_l: p_c + 60.0,
            v_l: v_f,
            p_f,
            v_f,
            a_f: 0.0,
            p_c,
            v_c: v_f - closing,
        },
        ..high_risk_template()
    }
}

const NO_CONTROL: ParamSet = ParamSet { ks: 0.0, kv: 0.0, ka: 0.0, ..ParamSet::REFERENCE };

#[test]
fn constant_closing_speed_collides_at_gap_over_speed() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..20 {
        let closing = rng.random_range(0.5..5.0);
        let g0 = rng.random_range(1.0..(40.0f64).min(50.0 * closing));
        let cfg = coasting(g0, closing);
        let r = time_to_collision(&cfg, &NO_CONTROL).unwrap();
        let expect = g0 / closing;
        assert!((r.t_c_star - expect).abs() <= 2.0 * cfg.dt, "g0 {g0} Δv {closing}: {} vs {expect}", r.t_c_star);
        assert!((r.inverse - 1.0 / r.t_c_star).abs() < 1e-15);
    }
}

#[test]
fn equilibrium_never_collides() {
    let cfg = ScenarioConfig {
        initial: InitialState::equilibrium(20.0),
        profile: CutInProfile::default().flat(),
        ..high_risk_template()
    };
    for theta in [0.0, 0.3] {
        let r = time_to_collision(&ScenarioConfig { theta, ..cfg.clone() }, &ParamSet::REFERENCE).unwrap();
        assert!(r.t_c_star.is_infinite() && r.inverse == 0.0);
    }
}

#[test]
fn non_positive_initial_gap_is_rejected() {
    let e = time_to_collision(&coasting(-1.0, 1.0), &NO_CONTROL).unwrap_err();
    assert!(e.is_input_error(), "{e}");
}

#[test]
fn high_risk_collisions_happen_within_seconds() {
    let pop = synthetic_stable(20, 1).unwrap();
    let cfg = ScenarioConfig { theta: 0.3, ..high_risk_template() };
    let mut hits = 0;
    for p in pop.params() {
        let r = time_to_collision(&cfg, p).unwrap();
        if r.collides() {
            hits += 1;
            // plotting clock: the window opens one second before the cut-in
            let plot = r.t_c_star - cfg.tl_start;
            assert!((1.0..=8.0).contains(&plot), "{plot}");
        }
    }
    assert!(hits > 0);
}

#[test]
fn aggregate_arithmetic() {
    let a = aggregate_ttc(&[TtcResult::new(2.0, 0), TtcResult::new(f64::INFINITY, 1)], &default_gamma_grid()).unwrap();
    assert_eq!(a.m, 2);
    assert_eq!(a.expectation_inverse_ttc, 0.25);
    assert_eq!(a.collision_probability, 0.5);
    assert!(aggregate_ttc(&[], &default_gamma_grid()).is_err());
}

#[test]
fn cdf_is_monotone_and_closes_at_one() {
    let pop = synthetic_stable(30, 3).unwrap();
    for theta in [0.0, 0.3] {
        let a = aggregate(&pop, &ScenarioConfig { theta, ..high_risk_template() }, 3).unwrap();
        assert!(a.cdf.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1));
        assert_eq!(a.cdf.last().unwrap().1, 1.0);
        assert!((a.cdf[0].1 - (1.0 - a.collision_probability)).abs() < 1e-12);
    }
}

#[test]
fn delay_fattens_the_inverse_ttc_tail() {
    let pop = synthetic_stable(30, 5).unwrap();
    let at = |theta| aggregate(&pop, &ScenarioConfig { theta, ..high_risk_template() }, 5).unwrap();
    let (a, b) = (at(0.0), at(0.3));
    assert!(b.expectation_inverse_ttc > a.expectation_inverse_ttc);
    assert!(b.collision_probability >= a.collision_probability);
}

#[test]
fn rng_streams_are_keyed() {
    let draw = |s, c, p, t| trial_rng(s, c, p, t).next_u64();
    assert_eq!(draw(1, 2, 3, 4), draw(1, 2, 3, 4));
    let base = draw(1, 2, 3, 4);
    for other in [draw(2, 2, 3, 4), draw(1, 3, 3, 4), draw(1, 2, 4, 4), draw(1, 2, 3, 5)] {
        assert_ne!(base, other);
    }
}

#[test]
fn axis_values_include_both_ends() {
    assert_eq!(AxisRange::new(Axis::DsC, -5.0, -3.0, 1.0).unwrap().values(), vec![-5.0, -4.0, -3.0]);
    assert_eq!(AxisRange::new(Axis::Phi, 0.0, 1.0, 0.05).unwrap().values().len(), 21);
    assert_eq!(AxisRange::new(Axis::Theta, 0.0, 0.3, 0.1).unwrap().values(), vec![0.0, 0.1, 0.2, 0.3]);
    assert!(AxisRange::new(Axis::DsC, 1.0, 0.0, 1.0).is_err());
    assert!(AxisRange::new(Axis::DsC, 0.0, 1.0, 0.0).is_err());
    assert!(SweepGrid::new(vec![AxisRange::fixed(Axis::DsC, 0.0), AxisRange::fixed(Axis::DsC, 1.0)]).is_err());
}

#[test]
fn one_cell_sweep_equals_the_direct_aggregate() {
    let pop = synthetic_stable(10, 2).unwrap();
    let grid = SweepGrid::new(vec![AxisRange::fixed(Axis::Theta, 0.3)]).unwrap();
    let s = sweep(&grid, &high_risk_template(), &pop, 2).unwrap();
    let direct = aggregate(&pop, &ScenarioConfig { theta: 0.3, ..high_risk_template() }, 2).unwrap();
    let cell = s.cell(&[0.3]).unwrap();
    assert!(cell.errors.is_empty());
    assert_eq!(cell.aggregate.as_ref().unwrap(), &direct);
}

#[test]
fn sweep_is_independent_of_thread_count() {
    let pop = synthetic_stable(12, 4).unwrap();
    let grid = SweepGrid::new(vec![
        AxisRange::new(Axis::Theta, 0.0, 0.3, 0.1).unwrap(),
        AxisRange::new(Axis::Phi, 0.0, 0.6, 0.3).unwrap(),
    ])
    .unwrap();
    let template = ScenarioConfig { anticipation_success_prob: 0.7, ..high_risk_template() };
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let r = pool.install(|| sweep(&grid, &template, &pop, 11)).unwrap();
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        buf
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(String::from_utf8(one).unwrap().lines().count(), 1 + 4 * 3);
}

#[test]
fn failed_prediction_means_no_anticipation() {
    let pop = synthetic_stable(10, 6).unwrap();
    let base = ScenarioConfig { theta: 0.3, ..high_risk_template() };
    let never = aggregate(&pop, &ScenarioConfig { phi: 1.0, anticipation_success_prob: 0.0, ..base.clone() }, 1).unwrap();
    let none = aggregate(&pop, &base, 1).unwrap();
    assert_eq!(never, none);
}

#[test]
fn bad_sets_are_reported_per_cell() {
    let mut sets = synthetic_stable(3, 1).unwrap().sets;
    // actuation lag far outside the sampled range; branch solves may fail or not,
    // but either way every set is accounted for
    sets.push(("odd".to_string(), ParamSet { tl: 1e-3, ..ParamSet::REFERENCE }));
    let pop = Population::new(sets, acc_cutin::params::Provenance::File { path: "x".into() }).unwrap();
    let grid = SweepGrid::new(vec![AxisRange::fixed(Axis::Theta, 0.3)]).unwrap();
    let s = sweep(&grid, &high_risk_template(), &pop, 1).unwrap();
    let c = &s.cells[0];
    assert_eq!(c.aggregate.as_ref().map_or(0, |a| a.m) + c.errors.len(), 4);
}
