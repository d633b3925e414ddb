use ifp_core::tables::{
    canonical_order_2, canonical_order_3, northwest_corner_2, northwest_corner_3, parse_table, AnyTable, Axes,
    Margins2, Margins3, Table2, Table3,
};
use proptest::prelude::*;

/// Equal-sum margin vectors of the given lengths, entries at most 50.
fn margins(lens: &[usize]) -> impl Strategy<Value = Vec<Vec<i64>>> {
    let lens = lens.to_vec();
    prop::collection::vec(0i64..=50, lens[0]).prop_flat_map(move |first| {
        let total: i64 = first.iter().sum();
        let rest: Vec<_> = lens[1..].iter().map(|&len| split(total, len)).collect();
        (Just(first), rest).prop_map(|(first, rest)| {
            let mut all = vec![first];
            all.extend(rest);
            all
        })
    })
}

/// A random composition of `total` into `len` parts.
fn split(total: i64, len: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(0..=total, len.saturating_sub(1)).prop_map(move |mut cuts| {
        cuts.push(0);
        cuts.push(total);
        cuts.sort_unstable();
        cuts.windows(2).map(|w| w[1] - w[0]).collect()
    })
}

fn dims3() -> impl Strategy<Value = Vec<Vec<i64>>> {
    (1usize..=6, 1usize..=6, 1usize..=6).prop_flat_map(|(l, m, n)| margins(&[l, m, n]))
}

proptest! {
    #[test]
    fn northwest_corner_3_is_margin_exact(ms in dims3(), shuffle in any::<u64>()) {
        let margins = Margins3::new(ms[0].clone(), ms[1].clone(), ms[2].clone());
        let [l, m, n] = margins.dims();
        let mut seq = canonical_order_3(l, m, n);
        // any sequence gives the same margins
        let len = seq.len();
        seq.rotate_left((shuffle as usize) % len);
        let t = northwest_corner_3(&margins, &seq).unwrap();
        prop_assert!(t.is_nonnegative());
        prop_assert_eq!(t.margins().unwrap(), margins.clone());
        let total: i64 = margins.x.iter().sum();
        for axes in [Axes::XZ, Axes::YZ] {
            prop_assert_eq!(t.project(axes).unwrap().total().unwrap(), total);
        }
    }

    #[test]
    fn northwest_corner_2_is_margin_exact(
        ms in (1usize..=6, 1usize..=6).prop_flat_map(|(m, n)| margins(&[m, n]))
    ) {
        let margins = Margins2::new(ms[0].clone(), ms[1].clone());
        let seq = canonical_order_2(ms[0].len(), ms[1].len());
        let t = northwest_corner_2(&margins, &seq).unwrap();
        prop_assert!(t.is_nonnegative());
        prop_assert_eq!(t.margins().unwrap(), margins);
        let mut rev = seq.clone();
        rev.reverse();
        let u = northwest_corner_2(&Margins2::new(ms[0].clone(), ms[1].clone()), &rev).unwrap();
        prop_assert_eq!(u.margins().unwrap(), t.margins().unwrap());
    }

    #[test]
    fn slices_sum_to_the_table(data in prop::collection::vec(0i64..10, 12)) {
        let t = Table3::from_vec(2, 3, 2, data).unwrap();
        let total = t.total().unwrap();
        let slices: i64 = (0..2).map(|k| t.project(Axes::Slice(k)).unwrap().total().unwrap()).sum();
        prop_assert_eq!(slices, total);
    }

    #[test]
    fn text_round_trips(data in prop::collection::vec(-5i64..50, 6)) {
        let t = Table2::from_vec(2, 3, data.clone()).unwrap();
        prop_assert_eq!(parse_table(&t.to_text()).unwrap(), AnyTable::Two(t));
        let u = Table3::from_vec(1, 2, 3, data).unwrap();
        prop_assert_eq!(parse_table(&u.to_text()).unwrap(), AnyTable::Three(u));
    }
}

#[test]
fn projection_of_a_single_row_table() {
    let t = Table3::from_vec(1, 1, 3, vec![4, 0, 2]).unwrap();
    assert_eq!(t.project(Axes::XZ).unwrap(), Table2::from_rows(&[[4, 0, 2]]).unwrap());
    assert!(Table3::zeros(2, 2, 2).project(Axes::YZ).unwrap().is_zero());
}

#[test]
fn infeasible_margins_are_refused() {
    let margins = Margins2::new(vec![1], vec![2]);
    assert!(!margins.check_real_feasibility().unwrap());
    assert!(northwest_corner_2(&margins, &canonical_order_2(1, 1)).is_err());
}
