use dropfee::pricing::social_cost_of;
use dropfee::{
    inconvenience_ustar, nearest_neighbor_distances, price_from_distances, price_v, price_w,
    safety_margin, social_cost, ConvexRegion, FleetState, Point, PriceKind,
};
use proptest::prelude::*;

fn fleet(k: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = FleetState> {
    prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), k)
        .prop_filter_map("coincident cars", |xy| {
            FleetState::new(xy.into_iter().map(|(x, y)| Point::new(x, y)).collect()).ok()
        })
}

/// The eight symmetries of the unit square.
fn dihedral(g: usize, p: Point) -> Point {
    let r = match g % 4 {
        0 => p,
        1 => Point::new(1.0 - p.y, p.x),
        2 => Point::new(1.0 - p.x, 1.0 - p.y),
        _ => Point::new(p.y, 1.0 - p.x),
    };
    if g >= 4 {
        Point::new(1.0 - r.x, r.y)
    } else {
        r
    }
}

#[test]
fn unit_square_examples() {
    let q = ConvexRegion::unit_square();
    let lone = FleetState::new(vec![Point::new(0.5, 0.5)]).unwrap();
    assert_eq!(social_cost(&lone, &q).get(), 2.0);
    let pair = FleetState::new(vec![Point::new(0.25, 0.5), Point::new(0.75, 0.5)]).unwrap();
    assert_eq!(social_cost(&pair, &q).get(), 4.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn cost_times_min_margin_is_one(state in fleet(2..=20)) {
        let q = ConvexRegion::unit_square();
        let min_sm = (0..state.len())
            .map(|u| safety_margin(&state, u, &q).unwrap())
            .fold(f64::INFINITY, f64::min);
        prop_assume!(min_sm > 0.0);
        let c = social_cost(&state, &q).get();
        prop_assert!((c * min_sm - 1.0).abs() <= 1e-9);
    }
}

proptest! {
    #[test]
    fn cost_ignores_labels(state in fleet(2..=12), seed in any::<u64>()) {
        let q = ConvexRegion::unit_square();
        let mut pts = state.positions().to_vec();
        let n = pts.len();
        let mut s = seed;
        for i in (1..n).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            pts.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(social_cost_of(&pts, &q), social_cost(&state, &q));
    }

    #[test]
    fn cost_has_square_symmetry(state in fleet(1..=12), g in 0usize..8) {
        let q = ConvexRegion::unit_square();
        let image: Vec<Point> = state.positions().iter().map(|&p| dihedral(g, p)).collect();
        let a = social_cost(&state, &q).get();
        let b = social_cost_of(&image, &q).get();
        prop_assume!(a.is_finite());
        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{a} vs {b}");
    }

    #[test]
    fn closing_in_never_lowers_inconvenience(state in fleet(2..=10), u_pick in any::<usize>(), t in 0.01f64..0.49) {
        let q = ConvexRegion::unit_square();
        let u = u_pick % state.len();
        let x = state.position(u);
        let v = (0..state.len())
            .filter(|&v| v != u)
            .min_by(|&a, &b| x.distance(state.position(a)).total_cmp(&x.distance(state.position(b))))
            .unwrap();
        let y = x + (state.position(v) - x) * t;
        prop_assume!(q.boundary_distance(y) <= q.boundary_distance(x));
        let moved = state.with_moved(u, y).unwrap();
        let before = inconvenience_ustar(&state, u, &q).unwrap();
        let after = inconvenience_ustar(&moved, u, &q).unwrap();
        prop_assert!(after >= before, "{before} -> {after}");
    }

    #[test]
    fn neighbourhood_prices_need_only_local_distances(state in fleet(2..=15), u_pick in any::<usize>(), m_pick in any::<usize>()) {
        let q = ConvexRegion::unit_square();
        let u = u_pick % state.len();
        let m = 1 + m_pick % (state.len() - 1);
        let b = q.boundary_distance(state.position(u));
        let d = nearest_neighbor_distances(&state, u, m).unwrap();
        prop_assert_eq!(d.len(), m);
        let v = price_from_distances(PriceKind::V, b, &d);
        let w = price_from_distances(PriceKind::W, b, &d);
        prop_assert_eq!(v.get().to_bits(), price_v(&state, u, &q, m).unwrap().get().to_bits());
        prop_assert_eq!(w.get().to_bits(), price_w(&state, u, &q, m).unwrap().get().to_bits());
    }

    #[test]
    fn w_never_exceeds_v_with_one_neighbour(state in fleet(2..=15)) {
        let q = ConvexRegion::unit_square();
        for u in 0..state.len() {
            let v = price_v(&state, u, &q, 1).unwrap();
            let w = price_w(&state, u, &q, 1).unwrap();
            prop_assert!(w <= v, "car {u}: W {w} > V {v}");
        }
    }
}
