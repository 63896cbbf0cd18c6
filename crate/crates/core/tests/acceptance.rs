//! Acceptance gate. Runs without the libtest harness so every criterion
//! prints exactly one PASS/FAIL line; exits non-zero if any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::Rng;
use unitdist::gadgets::{
    angular_index_search, angular_rod, dimension_constants, moser_spindle, rod_multiply, rod_power, RodCertificate,
};
use unitdist::geom::dist;
use unitdist::graph::{classify_embedding, Embedding, SimpleGraph, ToleranceConfig, WeightedGraph};
use unitdist::oracle::{brute_force_3color, end_to_end_check, EndToEndConfig};
use unitdist::reduction::{
    apex_window_check, build_reduction, expand_to_unit, reduction_params, reduction_size, ReductionInstance,
};
use unitdist::solver::{
    energy, energy_gradient, rod_property_check, solve_with, InitStrategy, RodCheckConfig, SolveConfig, Verdict,
};
use unitdist::witness::{extract_coloring, rng_stream, witness_embedding};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn random_graph(n: usize, p: f64, rng: &mut impl Rng) -> SimpleGraph {
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                e.push((u, v));
            }
        }
    }
    SimpleGraph::new(n, &e).unwrap()
}

fn constants() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for d in 3..=8 {
        let c = dimension_constants(d).unwrap();
        worst = worst.max((c.chord(c.alpha) - 1.0).abs());
        worst = worst.max((c.big_d - 2.0 * c.r0 * c.alpha.sin()).abs());
        ok &= c.big_d > 2f64.sqrt();
    }
    let c = dimension_constants(3).unwrap();
    let expected = [0.8164966, 1.6329932, 0.8660254, 1.2309594];
    let got = [c.h, c.big_d, c.r0, c.alpha];
    let values_ok = got.iter().zip(expected).all(|(g, e)| (g - e).abs() < 1e-7);
    outcome(
        ok && worst < 1e-12 && values_ok,
        format!("max identity error {worst:.1e}; d=3 (h, D, r0, alpha) = {got:.7?}"),
    )
}

fn spindle_rod() -> Outcome {
    let rod = moser_spindle(3).unwrap();
    let cfg = SolveConfig {
        restarts: 400,
        stop_after: Some(20),
        seed: SEED,
        init: InitStrategy::UniformCube,
        ..SolveConfig::default()
    };
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    let r = solve_with(&rod.graph, 3, &cfg, |_, e, out| {
        worst = worst.max((dist(e.point(rod.u), e.point(rod.v)) - rod.length_value).abs());
        worst_residual = worst_residual.max(out);
    });
    outcome(
        r.successes >= 20 && worst <= 1e-6 && worst_residual < 1e-9,
        format!(
            "{} successes in {} uniform restarts, max residual {worst_residual:.1e}, max | |AB| - D | {worst:.1e}",
            r.successes,
            r.restarts.len()
        ),
    )
}

/// Minimal `N >= 2` whose angle `x_N` lies in the window
/// `(2 asin(a / 2r0), 2 asin(b / 2r0))`, stepping the angle by repeated
/// addition instead of a product.
fn scan_oracle(a: f64, b: f64, d: usize) -> (u64, f64) {
    let df = d as f64;
    let alpha = (1.0 / df).acos();
    let r0 = (df / (2.0 * (df - 1.0))).sqrt();
    let (lo, hi) = (2.0 * (a / (2.0 * r0)).asin(), 2.0 * (b / (2.0 * r0)).asin());
    let mut x = 0.0;
    let mut n = 1;
    loop {
        n += 1;
        x += alpha;
        if x >= 2.0 * PI {
            x -= 2.0 * PI;
        }
        if x > lo && x < hi {
            return (n, 2.0 * r0 * (x / 2.0).sin());
        }
    }
}

fn angular_search() -> Outcome {
    let mut rng = rng_stream(SEED, 3);
    let mut mismatches = Vec::new();
    let mut largest = 0;
    for _ in 0..50 {
        let w = rng.random_range(0.01..0.3);
        let a = rng.random_range(0.05..0.95 - w);
        let b = a + w;
        let (n, x) = angular_index_search(a, b, 3).unwrap();
        let chord = dimension_constants(3).unwrap().chord(x);
        let (m, _) = scan_oracle(a, b, 3);
        largest = largest.max(n);
        if n != m || !(chord > a && chord < b) {
            mismatches.push((a, b, n, m));
        }
    }
    let (n, x) = angular_index_search(0.3, 0.4, 3).unwrap();
    let chord = dimension_constants(3).unwrap().chord(x);
    // 0.395400 to the 6 decimals the reference value is rounded to
    let known = n == 32 && (chord - 0.3954).abs() < 5e-6;
    outcome(
        mismatches.is_empty() && known,
        format!(
            "50 intervals agree with the scan oracle (largest N {largest}), mismatches {mismatches:?}; (0.3, 0.4) -> N = {n}, chord {chord:.9}"
        ),
    )
}

fn rod_suite() -> Outcome {
    let angular = angular_rod(0.3, 0.4, 3).unwrap();
    let counts_ok = angular.graph.vertex_count() == 244 && angular.graph.edge_count() == 666;
    let params = reduction_params(3).unwrap();
    let mut rods: Vec<(String, Arc<RodCertificate>)> = vec![
        ("angular(0.3, 0.4)".into(), Arc::new(angular)),
        ("power 1".into(), Arc::new(rod_power(3, 1).unwrap())),
        ("power 2".into(), Arc::new(rod_power(3, 2).unwrap())),
    ];
    for (class, l) in params.all() {
        rods.push((format!("{class:?} a"), l.rod_a.clone()));
        rods.push((format!("{class:?} b"), l.rod_b.clone()));
    }
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for (name, rod) in &rods {
        match rod_property_check(rod, &RodCheckConfig::default()) {
            Ok(r) if r.passed => worst = worst.max(r.max_deviation),
            Ok(r) => failures.push(format!("{name}: deviation {:.1e}", r.max_deviation)),
            Err(e) => failures.push(format!("{name}: {e}")),
        }
    }
    let spindle = Arc::new(moser_spindle(3).unwrap());
    let mut product_ok = true;
    for (a, b) in [(&spindle, &spindle), (&rods[0].1, &spindle), (&spindle, &rods[0].1)] {
        let p = rod_multiply(a, b).unwrap();
        let (va, ea) = (a.graph.vertex_count(), a.graph.edge_count());
        let (vb, eb) = (b.graph.vertex_count(), b.graph.edge_count());
        product_ok &= p.graph.vertex_count() == va + ea * (vb - 2) && p.graph.edge_count() == ea * eb;
    }
    outcome(
        counts_ok && failures.is_empty() && product_ok,
        format!(
            "{} rods checked, 20 solves each, max terminal deviation {worst:.1e}; angular 244/666 {counts_ok}; product counts {product_ok}; failures {failures:?}",
            rods.len()
        ),
    )
}

fn apex_windows() -> Outcome {
    let params = reduction_params(3).unwrap();
    let mut margins = Vec::new();
    let mut ok = true;
    for (class, l) in params.all() {
        let w = &l.window;
        ok &= apex_window_check(w.l, w.big_l, w.big_r, w.r, l.a, l.b);
        ok &= w.big_l <= w.big_r;
        let m = w.chain_margin(l.a, l.b);
        ok &= m > 1e-9;
        margins.push(format!("{class:?} {m:.3e}"));
    }
    outcome(ok, format!("chain margins {}", margins.join(", ")))
}

fn reduction_counts() -> Outcome {
    let count = |g: &SimpleGraph| {
        let h = build_reduction(g, 3).unwrap().h;
        (h.vertex_count(), h.edge_count())
    };
    let k3 = count(&SimpleGraph::complete(3));
    let single = count(&SimpleGraph::new(1, &[]).unwrap());
    let empty = count(&SimpleGraph::new(0, &[]).unwrap());
    let mut rng = rng_stream(SEED, 6);
    let mut bad = 0;
    for _ in 0..100 {
        let n = rng.random_range(0..=12);
        let p = rng.random_range(0.0..1.0);
        let g = random_graph(n, p, &mut rng);
        if count(&g) != reduction_size(n, g.edge_count(), 3) {
            bad += 1;
        }
    }
    outcome(
        k3 == (23, 43) && single == (12, 21) && empty == (8, 13) && bad == 0,
        format!("K3 {k3:?}, single vertex {single:?}, empty {empty:?}; formula mismatches {bad}/100"),
    )
}

fn witness_round_trip() -> Outcome {
    let tol = ToleranceConfig::default();
    let (mut graphs, mut colorable, mut failures) = (0, 0, Vec::new());
    let mut worst: f64 = 0.0;
    for n in 1..=5usize {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        for mask in 0u32..1 << pairs.len() {
            let edges: Vec<_> = pairs.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1).map(|(_, &e)| e).collect();
            let g = SimpleGraph::new(n, &edges).unwrap();
            if !g.is_connected() {
                continue;
            }
            graphs += 1;
            let Some(c) = brute_force_3color(&g).unwrap().witness else { continue };
            colorable += 1;
            let inst = build_reduction(&g, 3).unwrap();
            let result = witness_embedding(&inst, &c, SEED ^ mask as u64, &tol).and_then(|e| {
                let v = classify_embedding(&inst.h, &e, &tol)?;
                let back = extract_coloring(&inst, &e, &tol)?;
                Ok((v, back))
            });
            match result {
                Ok((v, back)) => {
                    worst = worst.max(v.residual);
                    let pass = v.residual < 1e-9 && v.is_non_critical && !v.pairs_sampled && back == c;
                    if !pass {
                        failures.push(format!("n={n} mask={mask}"));
                    }
                }
                Err(e) => failures.push(format!("n={n} mask={mask}: {e}")),
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{colorable} of {graphs} connected labelled graphs are 3-colorable; all round-trip: max residual {worst:.1e}; failures {failures:?}"
        ),
    )
}

fn negative_instances() -> Outcome {
    let mut rng = rng_stream(SEED, 8);
    let mut graphs = vec![SimpleGraph::complete(4)];
    while graphs.len() < 11 {
        let n = rng.random_range(5..=10);
        let g = random_graph(n, rng.random_range(0.45..0.8), &mut rng);
        if !brute_force_3color(&g).unwrap().colorable {
            graphs.push(g);
        }
    }
    let cfg = EndToEndConfig {
        seed: SEED,
        solve: SolveConfig { restarts: 200, ..SolveConfig::default() },
        ..EndToEndConfig::default()
    };
    let mut ok = true;
    let mut lines = Vec::new();
    let mut note = String::new();
    for g in &graphs {
        let r = end_to_end_check(g, 3, &cfg).unwrap();
        let rej = r.rejections.as_ref().unwrap();
        let s = r.solver.as_ref().unwrap();
        ok &= r.consistent() && rej.rejected == rej.candidates && !rej.sampled;
        ok &= s.verdict == Verdict::NoEmbeddingFoundHeuristic && s.restarts >= 200 && s.min_energy > 1e-6;
        note.clone_from(&s.note);
        lines.push(format!("({}, {}) min E {:.3e}", g.vertex_count(), g.edge_count(), s.min_energy));
    }
    outcome(ok, format!("{}; {note}", lines.join(", ")))
}

fn gradient_check() -> Outcome {
    let mut rng = rng_stream(SEED, 9);
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let d = 3 + i % 3;
        let n = rng.random_range(4..12);
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.random_bool(0.4) {
                    edges.push((u, v, rng.random_range(0.2..2.0)));
                }
            }
        }
        let g = WeightedGraph::build(n, &edges).unwrap();
        let x: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.5..1.5)).collect();
        let grad = energy_gradient(&g, &Embedding::new(d, x.clone()).unwrap());
        let h = 1e-6;
        let mut err = 0.0;
        for k in 0..x.len() {
            let mut y = x.clone();
            y[k] += h;
            let up = energy(&g, &Embedding::new(d, y.clone()).unwrap());
            y[k] -= 2.0 * h;
            let down = energy(&g, &Embedding::new(d, y).unwrap());
            err += ((up - down) / (2.0 * h) - grad[k]).powi(2);
        }
        let scale = grad.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(err.sqrt() / scale);
    }
    outcome(worst < 1e-5, format!("max relative error {worst:.2e} over 20 graphs, d in {{3, 4, 5}}"))
}

/// `|V|` of the unit-distance expansion, counted from the rods that replace
/// each non-unit edge.
fn expanded_vertices(inst: &ReductionInstance) -> usize {
    let rods: Vec<_> = inst.params.all().iter().flat_map(|(_, l)| [l.rod_a.clone(), l.rod_b.clone()]).collect();
    let interior: usize = inst
        .h
        .edges()
        .iter()
        .filter(|e| e.len != 1.0)
        .map(|e| rods.iter().find(|r| r.length_value == e.len).unwrap().graph.vertex_count() - 2)
        .sum();
    inst.h.vertex_count() + interior
}

fn linear_size() -> Outcome {
    let small = build_reduction(&SimpleGraph::complete(3), 3).unwrap();
    let counted_ok = expand_to_unit(&small).unwrap().graph.vertex_count() == expanded_vertices(&small);
    let mut rng = rng_stream(SEED, 10);
    let mut ratios = Vec::new();
    for _ in 0..20 {
        let n = rng.random_range(4..=12);
        // random graph with exactly n edges
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
        let mut chosen = rand::seq::index::sample(&mut rng, pairs.len(), n).into_vec();
        chosen.sort_unstable();
        let edges: Vec<_> = chosen.iter().map(|&i| pairs[i]).collect();
        let g = SimpleGraph::new(n, &edges).unwrap();
        let inst = build_reduction(&g, 3).unwrap();
        ratios.push(expanded_vertices(&inst) as f64 / (n + g.edge_count() + 1) as f64);
    }
    let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().copied().fold(0.0, f64::max);
    let spread = (hi - lo) / lo;
    outcome(
        counted_ok && spread < 0.05,
        format!(
            "|V_H'| / (|V| + |E| + 1) in [{lo:.1}, {hi:.1}] over 20 graphs with |E| = |V|, spread {:.2}%; count matches full expansion of K3: {counted_ok}",
            spread * 100.0
        ),
    )
}

fn main() -> ExitCode {
    // optional criterion number to run alone
    let only: Option<usize> = std::env::args().nth(1).and_then(|a| a.parse().ok());
    let criteria: [(&str, u64, fn() -> Outcome); 10] = [
        ("constants identities", 1, constants),
        ("spindle rod property", 30, spindle_rod),
        ("angular search vs scan oracle", 10, angular_search),
        ("rod construction suite", 300, rod_suite),
        ("apex window chain", 1, apex_windows),
        ("reduction counts", 5, reduction_counts),
        ("witness/extract round trip", 600, witness_round_trip),
        ("negative-instance consistency", 900, negative_instances),
        ("gradient check", 10, gradient_check),
        ("linear size", 120, linear_size),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.iter().enumerate() {
        if only.is_some_and(|k| k != i + 1) {
            continue;
        }
        let start = Instant::now();
        let o = run();
        let t = start.elapsed();
        let pass = o.pass && t <= Duration::from_secs(*budget);
        if !pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {name}: {} [{:.2}s / {budget}s]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            o.detail,
            t.as_secs_f64()
        );
    }
    println!("acceptance: {failed} failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
