use ifp_core::game::{is_legal, GameState};
use ifp_core::moves::enumerate_actions_2way;
use ifp_core::projection::{brute_force_project, project_action, ProjectOptions, RealTable};
use ifp_core::tables::Table2;
use ifp_core::Error;
use proptest::prelude::*;

fn full(m: usize, n: usize, v: i64) -> Table2 {
    Table2::from_vec(m, n, vec![v; m * n]).unwrap()
}

fn as_real(t: &Table2) -> RealTable {
    let (m, n) = t.shape();
    RealTable::from_vec(m, n, t.as_slice().iter().map(|&v| v as f64).collect()).unwrap()
}

#[test]
fn legal_targets_project_to_themselves() {
    let state = full(3, 3, 1);
    for g in enumerate_actions_2way(3, 3) {
        for d in [1, 2] {
            let opts = ProjectOptions { d, ..Default::default() };
            let p = project_action(&state, &as_real(g.table()), &opts).unwrap();
            assert_eq!(p.action, g);
            assert_eq!(p.distance, 0.0);
        }
    }
}

#[test]
fn two_by_two_example() {
    let target = RealTable::from_rows(&[[0.9, -0.8], [-0.7, 0.6]]).unwrap();
    let p = project_action(&full(2, 2, 1), &target, &ProjectOptions::default()).unwrap();
    assert_eq!(p.action.table(), &Table2::from_rows(&[[1, -1], [-1, 1]]).unwrap());
    let expected = 0.1f64.powi(2) + 0.2f64.powi(2) + 0.3f64.powi(2) + 0.4f64.powi(2);
    assert!((p.distance - expected).abs() < 1e-12);
}

#[test]
fn state_zeros_block_negative_entries() {
    let target = RealTable::from_rows(&[[0.9, -0.8], [-0.7, 0.6]]).unwrap();
    let state = Table2::from_rows(&[[0, 2], [2, 0]]).unwrap();
    let p = project_action(&state, &target, &ProjectOptions::default()).unwrap();
    assert_eq!(p.action.table(), &Table2::from_rows(&[[1, -1], [-1, 1]]).unwrap());
    let state = Table2::from_rows(&[[2, 0], [0, 2]]).unwrap();
    let p = project_action(&state, &target, &ProjectOptions::default()).unwrap();
    assert_eq!(p.action.table(), &Table2::from_rows(&[[-1, 1], [1, -1]]).unwrap());
    let loose = ProjectOptions { respect_state: false, ..Default::default() };
    let p = project_action(&state, &target, &loose).unwrap();
    assert_eq!(p.action.table(), &Table2::from_rows(&[[1, -1], [-1, 1]]).unwrap());
}

#[test]
fn infeasible_constraints_are_reported() {
    let target = RealTable::from_rows(&[[0.0, 0.0], [0.0, 0.0]]).unwrap();
    let too_many = ProjectOptions { c1: Some(3), ..Default::default() };
    assert!(matches!(
        project_action(&full(2, 2, 1), &target, &too_many),
        Err(Error::ProjectionInfeasible(_))
    ));
    assert!(matches!(
        project_action(&Table2::zeros(2, 2), &target, &ProjectOptions::default()),
        Err(Error::ProjectionInfeasible(_))
    ));
    let crossed = ProjectOptions { c1: Some(3), c2: Some(2), ..Default::default() };
    assert!(project_action(&full(2, 2, 1), &target, &crossed).is_err());
    assert!(RealTable::from_rows(&[[f64::NAN, 0.0], [0.0, 0.0]]).is_err());
    assert!(matches!(
        brute_force_project(&full(5, 4, 1), &RealTable::from_vec(5, 4, vec![0.0; 20]).unwrap(), &Default::default()),
        Err(Error::TooLarge(_))
    ));
}

#[test]
fn twenty_by_twenty_is_tractable() {
    let data: Vec<f64> = (0..400).map(|k| ((k * 37 % 101) as f64 / 50.0) - 1.0).collect();
    let target = RealTable::from_vec(20, 20, data).unwrap();
    let state = Table2::from_vec(20, 20, (0..400).map(|k| k % 3).collect()).unwrap();
    let p = project_action(&state, &target, &ProjectOptions::default()).unwrap();
    assert!(is_legal(&GameState::new(state).unwrap(), p.action.table()));
}

#[test]
fn plus_count_bounds_hold() {
    let data: Vec<f64> = (0..36).map(|k| ((k * 53 % 29) as f64 / 14.0) - 1.0).collect();
    let target = RealTable::from_vec(6, 6, data).unwrap();
    let state = full(6, 6, 1);
    let free = project_action(&state, &target, &ProjectOptions::default()).unwrap();
    let plus = |p: &ifp_core::projection::Projection| p.action.table().as_slice().iter().filter(|&&v| v == 1).count();
    for (c1, c2) in [(1, 2), (2, 3), (4, 6)] {
        let opts = ProjectOptions { c1: Some(c1), c2: Some(c2), ..Default::default() };
        let p = project_action(&state, &target, &opts).unwrap();
        assert!((c1..=c2).contains(&plus(&p)));
        assert!(p.distance >= free.distance - 1e-9);
    }
}

fn problem(m: usize, n: usize) -> impl Strategy<Value = (Table2, RealTable, ProjectOptions)> {
    (
        prop::collection::vec(0i64..3, m * n),
        prop::collection::vec(-1.5f64..1.5, m * n),
        1u32..=2,
        prop::option::of(1usize..4),
        any::<bool>(),
    )
        .prop_map(move |(s, a, d, c2, respect_state)| {
            (
                Table2::from_vec(m, n, s).unwrap(),
                RealTable::from_vec(m, n, a).unwrap(),
                ProjectOptions { d, c1: None, c2, respect_state },
            )
        })
}

proptest! {
    #[test]
    fn matches_enumeration((state, target, opts) in problem(3, 3)) {
        let fast = project_action(&state, &target, &opts);
        let slow = brute_force_project(&state, &target, &opts);
        match (fast, slow) {
            (Ok(f), Ok(s)) => {
                prop_assert!((f.distance - s.distance).abs() < 1e-9);
                let direct: f64 = f
                    .action
                    .table()
                    .as_slice()
                    .iter()
                    .zip(target.as_slice())
                    .map(|(&v, &a)| (v as f64 - a).abs().powi(opts.d as i32))
                    .sum();
                prop_assert!((direct - f.distance).abs() < 1e-9);
                if opts.respect_state {
                    prop_assert!(is_legal(&GameState::new(state.clone()).unwrap(), f.action.table()));
                }
            }
            (Err(_), Err(_)) => {}
            (f, s) => prop_assert!(false, "disagree: {f:?} vs {s:?}"),
        }
    }

    #[test]
    fn sign_flip_is_symmetric((_, target, opts) in problem(3, 3)) {
        let state = full(3, 3, 1);
        let opts = ProjectOptions { c2: None, ..opts };
        let flipped = RealTable::from_vec(3, 3, target.as_slice().iter().map(|a| -a).collect()).unwrap();
        let a = project_action(&state, &target, &opts).unwrap();
        let b = project_action(&state, &flipped, &opts).unwrap();
        prop_assert!((a.distance - b.distance).abs() < 1e-9);
    }
}
