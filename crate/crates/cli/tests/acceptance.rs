//! Acceptance suite. Prints one `[PASS]` or `[FAIL]` line per criterion and
//! exits non-zero if any criterion fails. Tolerances are fixed here and
//! must not be tuned to make a run pass.

use std::fs;
use std::time::{Duration, Instant};

use dropfee::dynamics::random_state;
use dropfee::{
    analytic_square_grid, analytic_square_optimum_cost, global_search_optimum, is_fixed_point,
    point_segment_distance, price, safety_margin, simulate, social_cost, voronoi_cell,
    ConvexRegion, FleetState, Mode, Objective, Point, PriceSpec, ScheduleKind, Segment, SimConfig,
    StepParams,
};
use dropfee_cli::commands::cmd_simulate;
use dropfee_cli::config::Overrides;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];
const C_STAR_K9: f64 = 6.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: &str, title: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = f();
    println!(
        "[{}] {id} {title}: {} ({:.1}s)",
        if o.pass { "PASS" } else { "FAIL" },
        o.detail,
        t.elapsed().as_secs_f64()
    );
    o.pass
}

fn square() -> ConvexRegion {
    ConvexRegion::unit_square()
}

fn base_config(seed: u64) -> SimConfig {
    let mut c = SimConfig::new(PriceSpec::USTAR, 9, square());
    c.seed = seed;
    c.schedule = ScheduleKind::Permuted;
    c.step = StepParams::new(0.05);
    c.steps = 100 * 9;
    c.record_every = u64::MAX;
    c
}

fn final_cost(c: &SimConfig) -> (f64, Duration) {
    let t = Instant::now();
    let cost = simulate(c).expect("run completes").final_cost();
    (cost, t.elapsed())
}

fn fmt_costs(v: &[f64]) -> String {
    v.iter()
        .map(|c| format!("{c:.4}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn ac1() -> Outcome {
    let q = square();
    let mut pass = true;
    let mut parts = Vec::new();
    for i in 1..=3usize {
        let t = Instant::now();
        let r = global_search_optimum(Objective::SocialMax, &q, i * i, 200_000, 0)
            .expect("search runs");
        let secs = t.elapsed().as_secs_f64();
        let reference = analytic_square_optimum_cost(i).get();
        let cost = r.cost.get();
        let ok = (cost - reference).abs() <= 0.02 * reference
            && cost >= reference - 1e-6
            && secs < 120.0;
        pass &= ok;
        parts.push(format!(
            "k={} cost={cost:.6} ref={reference} {secs:.1}s",
            i * i
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn ac2() -> Outcome {
    let mut finals = Vec::new();
    let mut slowest = Duration::ZERO;
    for seed in SEEDS {
        let (cost, dt) = final_cost(&base_config(seed));
        finals.push(cost);
        slowest = slowest.max(dt);
    }
    let limit = 1.1 * C_STAR_K9;
    let failing: Vec<u64> = SEEDS
        .iter()
        .zip(&finals)
        .filter(|(_, &c)| c > limit)
        .map(|(&s, _)| s)
        .collect();
    Outcome {
        pass: failing.is_empty() && slowest < Duration::from_secs(60),
        detail: format!(
            "final costs [{}] vs limit {limit:.2}; seeds over limit {failing:?}; slowest run {:.1}s",
            fmt_costs(&finals),
            slowest.as_secs_f64()
        ),
    }
}

fn ac3() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for seed in SEEDS {
        let mut costs = Vec::new();
        for sched in [
            ScheduleKind::Permuted,
            ScheduleKind::Iid,
            ScheduleKind::Cyclic,
        ] {
            let mut c = base_config(seed);
            c.schedule = sched;
            costs.push(final_cost(&c).0);
        }
        let mut c = base_config(seed);
        c.mode = Mode::Sync;
        c.steps = 100;
        costs.push(final_cost(&c).0);
        let lo = costs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = costs.iter().copied().fold(0.0, f64::max);
        let spread = hi / lo - 1.0;
        let ok = spread <= 0.05;
        pass &= ok;
        parts.push(format!(
            "seed {seed} p1/p2/p3/sync [{}] spread {:.1}%{}",
            fmt_costs(&costs),
            100.0 * spread,
            if ok { "" } else { " !" }
        ));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn ac4() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for seed in SEEDS {
        let mut u = base_config(seed);
        u.steps = 1000 * 9;
        let mut w = u.clone();
        w.price = PriceSpec::w(3);
        let cu = final_cost(&u).0;
        let cw = final_cost(&w).0;
        let ok = cw > cu && cw > 1.1 * C_STAR_K9;
        pass &= ok;
        parts.push(format!("seed {seed} U* {cu:.4} W {cw:.4e}"));
    }
    Outcome {
        pass,
        detail: parts.join("; "),
    }
}

fn random_fleet(rng: &mut ChaCha8Rng, k: usize) -> FleetState {
    random_state(&square(), k, rng)
}

fn ac5() -> Outcome {
    let q = square();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let mut n = 0;
    while n < 1000 {
        let k = rng.random_range(2..=20);
        let state = random_fleet(&mut rng, k);
        let min_sm = (0..k)
            .map(|u| safety_margin(&state, u, &q).unwrap())
            .fold(f64::INFINITY, f64::min);
        if min_sm <= 0.0 {
            continue;
        }
        n += 1;
        worst = worst.max((social_cost(&state, &q).get() * min_sm - 1.0).abs());
    }
    Outcome {
        pass: worst <= 1e-9,
        detail: format!("max |C·min sm − 1| = {worst:.3e} over {n} states"),
    }
}

fn ac6() -> Outcome {
    let q = square();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0.0f64;
    let mut cars = 0;
    for _ in 0..200 {
        let k = rng.random_range(2..=20);
        let state = random_fleet(&mut rng, k);
        for u in 0..k {
            let cell = voronoi_cell(state.positions(), u, &q).expect("distinct generators");
            let depth = cell.boundary_distance(state.position(u));
            let sm = safety_margin(&state, u, &q).unwrap();
            worst = worst.max((depth - sm).abs());
            cars += 1;
        }
    }
    Outcome {
        pass: worst <= 1e-7,
        detail: format!("max |cell depth − sm| = {worst:.3e} over 200 states, {cars} cars"),
    }
}

fn ac7() -> Outcome {
    let q = square();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let specs = [PriceSpec::USTAR, PriceSpec::v(2), PriceSpec::w(3)];
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_rise = f64::NEG_INFINITY;
    for _ in 0..10_000 {
        let k = rng.random_range(1..=12);
        let state = random_fleet(&mut rng, k);
        let u = rng.random_range(0..k);
        let spec = specs[rng.random_range(0..specs.len())];
        let s_max = rng.random_range(0.001..0.5);
        let d = dropfee::step(spec, &state, u, &q, &StepParams::new(s_max)).unwrap();
        worst_excess = worst_excess.max(d.norm() - s_max);

        let free = StepParams::new(f64::INFINITY);
        let d = dropfee::step(spec, &state, u, &q, &free).unwrap();
        let before = price(spec, &state, u, &q).unwrap().get();
        let after = match state.with_moved(u, state.position(u) + d) {
            Ok(s) => price(spec, &s, u, &q).unwrap().get(),
            Err(_) => f64::INFINITY,
        };
        worst_rise = worst_rise.max(after - before);
    }
    let tol = StepParams::new(1.0).solver.refine_tolerance;
    let grid = is_fixed_point(
        PriceSpec::USTAR,
        &analytic_square_grid(3),
        &q,
        &StepParams::new(0.05),
        1e-6,
    )
    .unwrap();
    Outcome {
        pass: worst_excess <= 1e-12 && worst_rise <= tol && grid,
        detail: format!(
            "max ||step|| − s_max = {worst_excess:.3e}; max unclipped price rise = {worst_rise:.3e}; grid fixed point = {grid}"
        ),
    }
}

fn ac8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pt = || Point::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (p, s) = (pt(), Segment::new(pt(), pt()));
        let n: usize = 10_000;
        let at = |t: f64| p.distance(s.a + (s.b - s.a) * t);
        let best = (0..=n)
            .min_by(|&i, &j| at(i as f64 / n as f64).total_cmp(&at(j as f64 / n as f64)))
            .unwrap();
        let lo = best.saturating_sub(1) as f64 / n as f64;
        let hi = (best + 1).min(n) as f64 / n as f64;
        let sampled = (0..=n)
            .map(|i| at(lo + (hi - lo) * i as f64 / n as f64))
            .fold(at(best as f64 / n as f64), f64::min);
        worst = worst.max((point_segment_distance(p, s) - sampled).abs());
    }
    let r = square().chebyshev_center().unwrap().radius;
    Outcome {
        pass: worst <= 1e-6 && (r - 0.5).abs() <= 1e-9,
        detail: format!("max segment-distance error {worst:.3e}; unit-square inradius {r:.12}"),
    }
}

fn ac9() -> Outcome {
    let dir = tempfile::tempdir().expect("temp dir");
    let runs: [(&str, Overrides); 4] = [
        (
            "default",
            Overrides {
                seed: Some(7),
                ..Overrides::default()
            },
        ),
        (
            "iid",
            Overrides {
                seed: Some(3),
                k: Some(6),
                schedule: Some("iid".into()),
                ..Overrides::default()
            },
        ),
        (
            "sync",
            Overrides {
                seed: Some(4),
                mode: Some("sync".into()),
                steps: Some(30),
                ..Overrides::default()
            },
        ),
        (
            "w3",
            Overrides {
                seed: Some(2),
                price: Some("w:3".into()),
                steps: Some(2000),
                ..Overrides::default()
            },
        ),
    ];
    let mut mismatches = Vec::new();
    for (name, ov) in &runs {
        let first = dir.path().join(name);
        cmd_simulate(None, ov, &first, false).expect("first run");
        let again = dir.path().join(format!("{name}-again"));
        cmd_simulate(
            Some(&first.join("manifest.toml")),
            &Overrides::default(),
            &again,
            false,
        )
        .expect("rerun");
        let a = fs::read(first.join("trace.csv")).unwrap();
        let b = fs::read(again.join("trace.csv")).unwrap();
        if a != b {
            mismatches.push(*name);
        }
    }
    Outcome {
        pass: mismatches.is_empty(),
        detail: format!(
            "{} manifests re-run; mismatching traces {mismatches:?}",
            runs.len()
        ),
    }
}

fn main() {
    let results = [
        check("AC1", "optimal grid reproduction", ac1),
        check("AC2", "async convergence under U*", ac2),
        check("AC3", "async/sync consistency", ac3),
        check("AC4", "W ends above U* and the optimum", ac4),
        check("AC5", "duality identity", ac5),
        check("AC6", "Voronoi depth equals safety margin", ac6),
        check("AC7", "best-response step contracts", ac7),
        check("AC8", "geometry oracles", ac8),
        check("AC9", "manifest determinism", ac9),
    ];
    let failed = results.iter().filter(|&&ok| !ok).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
