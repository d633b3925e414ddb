mod common;

use std::cmp::Ordering;

use ifp_core::encoder::{encode_plane_sum, full_encode, BoundChoice, RationalLinearSystem};
use ifp_core::moves::{
    conformal_decomposition, enumerate_actions_2way, enumerate_circuits_2way, enumerate_fiber_2way,
    enumerate_fiber_direct, ifp_solve, ifp_solve_with, liftings, lift_move, reduce_2way, reduce_to_sink,
    replay_certificate, slice_embed, solve_system, term_compare, Budget, Certificate, GroebnerMoves, IfpOutcome,
    LiftAxis, Move2, Move3, Order2, Policy, Strategy, TermOrder,
};
use ifp_core::tables::{Axes, Table2, Table3};
use ifp_core::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every nonzero `{-1,0,1}` table with zero line sums, by scanning all
/// `3^(mn)` candidates in lexicographic order.
fn actions_by_scan(m: usize, n: usize) -> Vec<Table2> {
    let cells = m * n;
    let mut out = Vec::new();
    for code in 0..3usize.pow(cells as u32) {
        let mut c = code;
        let mut v = vec![0i64; cells];
        for slot in v.iter_mut().rev() {
            *slot = (c % 3) as i64 - 1;
            c /= 3;
        }
        let t = Table2::from_vec(m, n, v).unwrap();
        if !t.is_zero() && t.row_sums().unwrap().iter().chain(&t.col_sums().unwrap()).all(|&s| s == 0) {
            out.push(t);
        }
    }
    out
}

#[test]
fn three_by_three_circuit_supports() {
    let circuits = enumerate_circuits_2way(3, 3);
    let four = circuits.iter().filter(|g| g.support_size() == 4).count() / 2;
    let six = circuits.iter().filter(|g| g.support_size() == 6).count() / 2;
    assert_eq!((four, six), (9, 6));
    for g in &circuits {
        assert!(circuits.contains(&g.negated()));
    }
}

#[test]
fn actions_match_a_full_scan() {
    for (m, n) in [(2, 2), (2, 3), (3, 2), (3, 3)] {
        let listed: Vec<Table2> = enumerate_actions_2way(m, n).into_iter().map(Move2::into_table).collect();
        assert_eq!(listed, actions_by_scan(m, n), "{m}x{n}");
    }
    assert_eq!(enumerate_actions_2way(2, 2).len(), 2);
}

#[test]
fn actions_decompose_into_circuits() {
    let circuits = enumerate_circuits_2way(3, 3);
    for a in enumerate_actions_2way(3, 3) {
        let parts = conformal_decomposition(a.table()).unwrap();
        let mut sum = Table2::zeros(3, 3);
        for (g, times) in &parts {
            assert!(circuits.contains(g));
            for _ in 0..*times {
                sum = sum.checked_add(g.table()).unwrap();
            }
        }
        assert_eq!(&sum, a.table());
    }
}

#[test]
fn slice_embedding() {
    let g = Move2::from_rows(&[[1, -1], [-1, 1]]).unwrap();
    let e = slice_embed(&g, 1, 2).unwrap();
    assert!(e.cells().iter().all(|&(_, _, k, _)| k == 1));
    assert!(slice_embed(&g, 2, 2).is_err());
    let basis = GroebnerMoves::new([2, 2, 3]);
    assert_eq!(basis.slice_moves().len(), 3 * enumerate_circuits_2way(2, 2).len());
}

#[test]
fn lifts_project_back() {
    let g = Move2::from_rows(&[[1, -1], [-1, 1]]).unwrap();
    let all = liftings(&g, LiftAxis::XZ, 3);
    assert!(!all.is_empty() && all.len() <= 9);
    for mv in &all {
        assert_eq!(mv.table().project(Axes::XZ).unwrap(), *g.table());
        Move3::new(mv.table().clone()).unwrap();
    }
    let same = lift_move(&g, LiftAxis::XZ, &[1, 1], 3).unwrap();
    assert!(same.cells().iter().all(|&(_, j, _, _)| j == 1));
    for mv in liftings(&g, LiftAxis::YZ, 2) {
        assert_eq!(mv.table().project(Axes::YZ).unwrap(), *g.table());
    }
}

fn all_fiber_tables(margins: &ifp_core::tables::Margins3) -> Vec<Table3> {
    let [l, m, n] = margins.dims();
    let mut out = Vec::new();
    let cells = l * m * n;
    let total: i64 = margins.x.iter().sum();
    let mut v = vec![0i64; cells];
    loop {
        let t = Table3::from_vec(l, m, n, v.clone()).unwrap();
        if t.margins().unwrap() == *margins {
            out.push(t);
        }
        let mut pos = 0;
        loop {
            if pos == cells {
                return out;
            }
            v[pos] += 1;
            if v[pos] <= total {
                break;
            }
            v[pos] = 0;
            pos += 1;
        }
    }
}

#[test]
fn term_order_is_a_total_order_on_a_fiber() {
    let enabled = vec![true, false, true, true, false, true, true, true];
    let order = TermOrder::from_enabled([2, 2, 2], &enabled).unwrap();
    let start = Table3::from_vec(2, 2, 2, vec![1, 0, 0, 1, 0, 1, 1, 0]).unwrap();
    let fiber = all_fiber_tables(&start.margins().unwrap());
    assert!(fiber.len() > 3);
    for a in &fiber {
        assert_eq!(term_compare(a, a, &order).unwrap(), Ordering::Equal);
        for b in &fiber {
            let ab = term_compare(a, b, &order).unwrap();
            assert_eq!(ab, term_compare(b, a, &order).unwrap().reverse());
            assert_eq!(ab == Ordering::Equal, a == b);
            for c in &fiber {
                if ab == Ordering::Greater && term_compare(b, c, &order).unwrap() == Ordering::Greater {
                    assert_eq!(term_compare(a, c, &order).unwrap(), Ordering::Greater);
                }
            }
        }
    }
}

#[test]
fn forbidden_projection_mass_dominates() {
    // (0, j, 1) entries are disabled, so xz cell (0, 1) is forbidden
    let enabled = vec![true, false, true, false, true, true, true, true];
    let order = TermOrder::from_enabled([2, 2, 2], &enabled).unwrap();
    let x = Table3::from_vec(2, 2, 2, vec![0, 1, 0, 0, 0, 0, 1, 0]).unwrap();
    let y = Table3::from_vec(2, 2, 2, vec![1, 0, 0, 0, 0, 0, 0, 1]).unwrap();
    assert_eq!(x.margins().unwrap(), y.margins().unwrap());
    assert_eq!(order.xz.weight(&y.project(Axes::XZ).unwrap()).unwrap(), 0);
    assert!(order.xz.weight(&x.project(Axes::XZ).unwrap()).unwrap() > 0);
    assert_eq!(term_compare(&x, &y, &order).unwrap(), Ordering::Greater);
}

fn random_instance(rng: &mut ChaCha8Rng) -> (Table3, TermOrder) {
    loop {
        let dims = [rng.gen_range(2..=3), rng.gen_range(2..=3), 2];
        let cells: usize = dims.iter().product();
        let enabled: Vec<bool> = (0..cells).map(|_| rng.gen_bool(0.6)).collect();
        let t = Table3::from_vec(dims[0], dims[1], dims[2], (0..cells).map(|_| rng.gen_range(0..=2)).collect())
            .unwrap();
        if let Ok(order) = TermOrder::from_enabled(dims, &enabled) {
            return (t, order);
        }
    }
}

#[test]
fn reductions_descend_and_stop_at_a_fixpoint() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..80 {
        let (t, order) = random_instance(&mut rng);
        let red = reduce_to_sink(&t, &order, Policy::Seeded(rng.gen()), 1_000_000).unwrap();
        assert_eq!(red.table.margins().unwrap(), t.margins().unwrap());
        let again = reduce_to_sink(&red.table, &order, Policy::Canonical, 1_000_000).unwrap();
        assert_eq!(again.table, red.table);
        assert!(again.moves.is_empty());
        // replay: every step stays nonnegative and never increases projection weight
        let mut cur = t.clone();
        let weight = |x: &Table3| {
            (
                order.xz.weight(&x.project(Axes::XZ).unwrap()).unwrap(),
                order.yz.weight(&x.project(Axes::YZ).unwrap()).unwrap(),
            )
        };
        let mut last = weight(&cur);
        for (mv, times) in &red.moves {
            let next = mv.apply(&cur, *times).expect("moves stay nonnegative");
            assert_ne!(term_compare(&next, &cur, &order).unwrap(), Ordering::Greater);
            let w = weight(&next);
            assert!(w.0 <= last.0, "xz weight went up");
            if w.0 == last.0 {
                assert!(w.1 <= last.1, "yz weight went up");
            }
            last = w;
            cur = next;
        }
        assert_eq!(cur, red.table);
    }
}

#[test]
fn two_way_reduction_reaches_the_lex_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..100 {
        let t = Table2::from_vec(3, 3, (0..9).map(|_| rng.gen_range(0..=3)).collect()).unwrap();
        let forbidden: Vec<bool> = (0..9).map(|_| rng.gen_bool(0.3)).collect();
        let order = Order2::elimination(3, 3, forbidden).unwrap();
        let sink = reduce_2way(&t, &order, Policy::Seeded(rng.gen()), 100_000).unwrap().table;
        let fiber = enumerate_fiber_direct(&t.margins().unwrap(), None, 100_000).unwrap();
        let min = fiber.iter().min_by(|a, b| order.compare(a, b)).unwrap();
        assert_eq!(&sink, min);
    }
}

#[test]
fn restricted_fibers_match_direct_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let (m, n) = (rng.gen_range(1..=3), rng.gen_range(1..=3));
        let enabled: Vec<bool> = (0..m * n).map(|_| rng.gen_bool(0.7)).collect();
        let anchor = Table2::from_vec(
            m,
            n,
            enabled.iter().map(|&on| if on { rng.gen_range(0..=2) } else { 0 }).collect(),
        )
        .unwrap();
        let walked = enumerate_fiber_2way(&anchor, &enabled, 100_000).unwrap();
        let direct = enumerate_fiber_direct(&anchor.margins().unwrap(), Some(&enabled), 100_000).unwrap();
        assert_eq!(walked, direct);
        for t in &walked {
            assert!(t.as_slice().iter().zip(&enabled).all(|(&v, &on)| on || v == 0));
        }
    }
}

#[test]
fn micro_instance_and_parity() {
    let sys = RationalLinearSystem::from_rows(vec![vec![1]], vec![2]).unwrap();
    let inst = encode_plane_sum(&sys, 2).unwrap();
    let IfpOutcome::Yes(cert) = ifp_solve(&inst, &Budget::default()).unwrap() else { panic!() };
    assert_eq!(replay_certificate(&inst, &cert).unwrap(), vec![2]);

    let parity = RationalLinearSystem::from_rows(vec![vec![2]], vec![1]).unwrap();
    let out = solve_system(&parity, BoundChoice::Fixed(1), &Budget::default(), Strategy::Pruned).unwrap();
    assert!(out.is_no(), "{out:?}");
}

#[test]
fn certificates_round_trip_and_detect_tampering() {
    let sys = RationalLinearSystem::from_rows(vec![vec![1, 2, 1], vec![1, -1, 0]], vec![6, 0]).unwrap();
    let inst = full_encode(&sys, BoundChoice::Vertex).unwrap();
    let IfpOutcome::Yes(cert) = ifp_solve(&inst, &Budget::default()).unwrap() else { panic!() };
    let y = replay_certificate(&inst, &cert).unwrap();
    assert!(sys.is_solution(&y));
    let parsed = Certificate::parse(&cert.to_text()).unwrap();
    assert_eq!(parsed, *cert);

    let mut wrong = parsed.clone();
    wrong.solution[0] += 1;
    assert!(matches!(replay_certificate(&inst, &wrong), Err(Error::InvalidWitness(_))));
    if let Some((mv, times)) = parsed.moves.first() {
        let mut doubled = parsed.clone();
        doubled.moves.insert(0, (mv.clone(), *times));
        assert!(replay_certificate(&inst, &doubled).is_err());
    }
}

#[test]
fn tiny_budgets_are_reported_not_answered() {
    let sys = RationalLinearSystem::from_rows(vec![vec![3, 2, -1], vec![1, 1, 1]], vec![4, 5]).unwrap();
    let out = solve_system(&sys, BoundChoice::Vertex, &Budget { fiber_cap: 1, step_cap: 1 }, Strategy::Exhaustive)
        .unwrap();
    assert!(matches!(out, IfpOutcome::BudgetExhausted(_)), "{out:?}");
}

#[test]
fn strategies_agree_on_tiny_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let mut compared = 0;
    for _ in 0..120 {
        let sys = common::random_bounded_system(&mut rng, 2, 3);
        let Ok(inst) = full_encode(&sys, BoundChoice::Vertex) else { continue };
        let budget = Budget { fiber_cap: 50_000, step_cap: 1_000_000 };
        let pruned = ifp_solve_with(&inst, &budget, Strategy::Pruned).unwrap();
        let exhaustive = ifp_solve_with(&inst, &budget, Strategy::Exhaustive).unwrap();
        if matches!(exhaustive, IfpOutcome::BudgetExhausted(_)) {
            continue;
        }
        compared += 1;
        assert_eq!(pruned.is_yes(), exhaustive.is_yes(), "{sys:?}");
        if let IfpOutcome::Yes(cert) = &exhaustive {
            replay_certificate(&inst, cert).unwrap();
        }
    }
    assert!(compared >= 20, "only {compared} comparisons");
}

proptest! {
    #[test]
    fn circuits_preserve_margins(data in prop::collection::vec(0i64..4, 12)) {
        let t = Table2::from_vec(3, 4, data).unwrap();
        let margins = t.margins().unwrap();
        for g in enumerate_circuits_2way(3, 4) {
            if let Some(next) = g.apply(&t, 1) {
                prop_assert_eq!(next.margins().unwrap(), margins.clone());
            }
        }
    }

    #[test]
    fn groebner_moves_preserve_margins(data in prop::collection::vec(0i64..3, 12)) {
        let t = Table3::from_vec(2, 3, 2, data).unwrap();
        let margins = t.margins().unwrap();
        for g in GroebnerMoves::new([2, 3, 2]).all() {
            if let Some(next) = g.apply(&t, 1) {
                prop_assert_eq!(next.margins().unwrap(), margins.clone());
            }
        }
    }
}
