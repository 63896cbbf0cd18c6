use unitdist::graph::{classify_embedding, SimpleGraph, ToleranceConfig};
use unitdist::io::{read_embedding, read_instance, to_json, EmbeddingJson, InstanceJson};
use unitdist::oracle::{brute_force_3color, end_to_end_check, EndToEndConfig};
use unitdist::reduction::{build_reduction, expand_to_unit, Provenance};
use unitdist::solver::Verdict;
use unitdist::witness::{extract_coloring, witness_embedding, witness_embedding_expanded};
use unitdist::Error;

fn petersen() -> SimpleGraph {
    let mut e = Vec::new();
    for i in 0..5 {
        e.push((i, (i + 1) % 5));
        e.push((i, i + 5));
        e.push((5 + i, 5 + (i + 2) % 5));
    }
    SimpleGraph::new(10, &e).unwrap()
}

#[test]
fn every_triangle_coloring_round_trips() {
    let inst = build_reduction(&SimpleGraph::complete(3), 3).unwrap();
    let tol = ToleranceConfig::default();
    for c in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
        let e = witness_embedding(&inst, &c, 11, &tol).unwrap();
        let v = classify_embedding(&inst.h, &e, &tol).unwrap();
        assert!(v.is_embedding && v.is_non_critical, "{c:?}: {:?}", v.counts);
        assert_eq!(extract_coloring(&inst, &e, &tol).unwrap(), c);
    }
    let err = witness_embedding(&inst, &[0, 0, 1], 11, &tol).unwrap_err();
    assert!(matches!(err, Error::InvalidColoring(_)));
}

#[test]
fn petersen_round_trip_in_several_dimensions() {
    let g = petersen();
    let c = brute_force_3color(&g).unwrap().witness.unwrap();
    let tol = ToleranceConfig::default();
    for d in [3, 4, 5] {
        let inst = build_reduction(&g, d).unwrap();
        let e = witness_embedding(&inst, &c, 3, &tol).unwrap();
        let v = classify_embedding(&inst.h, &e, &tol).unwrap();
        assert!(v.residual < 1e-9 && v.is_non_critical, "d={d}");
        assert_eq!(extract_coloring(&inst, &e, &tol).unwrap(), c);
    }
}

#[test]
fn instance_and_embedding_survive_serialization() {
    let g = petersen();
    let c = brute_force_3color(&g).unwrap().witness.unwrap();
    let inst = build_reduction(&g, 3).unwrap();
    let tol = ToleranceConfig::default();
    let e = witness_embedding(&inst, &c, 5, &tol).unwrap();
    let back = read_instance(&to_json(&InstanceJson::new(&inst))).unwrap();
    assert_eq!(back.h, inst.h);
    let e2 = read_embedding(&to_json(&EmbeddingJson::new(&e))).unwrap();
    assert_eq!(e2, e);
    let v = classify_embedding(&back.h, &e2, &tol).unwrap();
    assert!(v.residual < 1e-12);
}

#[test]
fn expanded_triangle_witness() {
    let inst = build_reduction(&SimpleGraph::complete(3), 3).unwrap();
    let x = expand_to_unit(&inst).unwrap();
    assert!(x.graph.is_unit());
    assert_eq!(x.host_vertices, 23);
    let interior: usize = x.substitutions.iter().map(|(_, r)| r.graph.vertex_count() - 2).sum();
    assert_eq!(x.graph.vertex_count(), 23 + interior);
    assert!(x.provenance[..23].iter().all(|p| matches!(p, Provenance::Host { .. })));

    let tol = ToleranceConfig::default();
    let e = witness_embedding_expanded(&inst, &x, &[0, 1, 2], 1, &tol).unwrap();
    let v = classify_embedding(&x.graph, &e, &tol).unwrap();
    println!(
        "expanded K3: {} vertices, residual {:.2e}, injective {}, pairs sampled {}, near-unit non-adjacent pairs {}",
        x.graph.vertex_count(),
        v.residual,
        v.is_injective,
        v.pairs_sampled,
        v.counts.unit_non_adjacent
    );
    assert!(v.is_embedding, "residual {}", v.residual);
    assert!(v.is_injective);
    assert_eq!(extract_coloring(&inst, &e, &tol).unwrap(), vec![0, 1, 2]);
}

#[test]
fn k4_is_reported_negative_with_heuristic_evidence() {
    let cfg = EndToEndConfig { seed: 4, ..EndToEndConfig::default() };
    let r = end_to_end_check(&SimpleGraph::complete(4), 3, &cfg).unwrap();
    assert!(r.consistent(), "{:?}", r.inconsistencies);
    assert!(!r.oracle.colorable);
    let rej = r.rejections.unwrap();
    assert_eq!((rej.candidates, rej.rejected), (81, 81));
    let s = r.solver.unwrap();
    assert_eq!(s.verdict, Verdict::NoEmbeddingFoundHeuristic);
    assert!(s.min_energy > 1e-6);
    assert!(s.note.contains("heuristic"));
}
