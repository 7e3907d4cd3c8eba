//! Graph primitives against independent oracles: all-pairs shortest paths on
//! small explicit graphs, flood fill for components, and the window
//! consistency properties.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coarsegrid_core::generators::GeneratorSpec;
use coarsegrid_core::graph::{GraphHandle, Window};
use coarsegrid_core::vertex::VertexId;

const INF: u32 = u32::MAX / 4;

/// Independent all-pairs oracle: Floyd-Warshall over the raw edge list.
fn apsp(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<u32>> {
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k].saturating_add(d[k][j]);
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn named(i: usize) -> VertexId {
    VertexId::Named(format!("n{i:02}"))
}

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    // random spanning tree to keep most of it connected, plus extras
    for i in 1..n {
        let j = rng.gen_range(0..i);
        edges.push((j, i));
    }
    let extra = rng.gen_range(0..n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        if a != b {
            edges.push((a.min(b), a.max(b)));
        }
    }
    edges.sort();
    edges.dedup();
    edges
}

fn handle_for(n: usize, edges: &[(usize, usize)]) -> GraphHandle {
    let list: Vec<(VertexId, VertexId)> =
        edges.iter().map(|&(a, b)| (named(a), named(b))).collect();
    GraphHandle::instantiate(
        GeneratorSpec::explicit(&list),
        Window { basepoint: named(0), radius: 3 * n as u32 },
    )
    .unwrap()
}

#[test]
fn distance_matches_apsp_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _round in 0..40 {
        let n = rng.gen_range(2..=40);
        let edges = random_graph(&mut rng, n);
        let g = handle_for(n, &edges);
        let oracle = apsp(n, &edges);
        for _ in 0..30 {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            let d = g.distance(&[named(a)], &[named(b)]).unwrap();
            let expect = oracle[a][b];
            if expect >= INF {
                assert_eq!(d.window_dist, None);
                assert!(d.exact);
            } else {
                assert_eq!(d.exact_value(), Some(expect), "pair {a} {b}");
            }
        }
        // symmetry in the set arguments
        let a = rng.gen_range(0..n);
        let b = rng.gen_range(0..n);
        let d1 = g.distance(&[named(a)], &[named(b)]).unwrap();
        let d2 = g.distance(&[named(b)], &[named(a)]).unwrap();
        assert_eq!(d1.window_dist, d2.window_dist);
    }
}

#[test]
fn triangle_inequality_on_explicit() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 30;
    let edges = random_graph(&mut rng, n);
    let g = handle_for(n, &edges);
    let oracle = apsp(n, &edges);
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                if oracle[u][v] < INF && oracle[v][w] < INF {
                    assert!(oracle[u][w] <= oracle[u][v] + oracle[v][w]);
                }
            }
        }
    }
    // spot-check the handle agrees on a few triples
    for _ in 0..20 {
        let u = rng.gen_range(0..n);
        let v = rng.gen_range(0..n);
        let duv = g.distance(&[named(u)], &[named(v)]).unwrap();
        assert_eq!(duv.window_dist, (oracle[u][v] < INF).then_some(oracle[u][v]));
    }
}

#[test]
fn ball_equals_distance_sublevel() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let n = 25;
    let edges = random_graph(&mut rng, n);
    let g = handle_for(n, &edges);
    let oracle = apsp(n, &edges);
    for r in 0..6u32 {
        let ball = g.ball(&[named(3)], r).unwrap();
        assert!(ball.exact);
        let expect: Vec<VertexId> = (0..n)
            .filter(|&i| oracle[3][i] <= r)
            .map(named)
            .collect();
        let mut got = ball.vertices.clone();
        got.sort();
        let mut expect = expect;
        expect.sort();
        assert_eq!(got, expect, "radius {r}");
    }
}

#[test]
fn components_match_flood_fill() {
    // spoked cycle: removing the cycle leaves one component per spoke
    let g = GraphHandle::instantiate(
        GeneratorSpec::parse_compact("cycle_spokes:n=24").unwrap(),
        Window { basepoint: VertexId::Cycle { i: 0 }, radius: 14 },
    )
    .unwrap();
    let cycle: Vec<VertexId> = (0..24).map(|i| VertexId::Cycle { i }).collect();
    let comps = g.components_avoiding(&cycle).unwrap();
    assert_eq!(comps.len(), 24);
    for c in &comps {
        assert_eq!(c.contacts.len(), 1); // the spoke foot touches its cycle vertex only
    }
}

#[test]
fn example42_degree_and_connector_facts() {
    let g = GraphHandle::instantiate(
        GeneratorSpec::parse_compact("example42:K=3").unwrap(),
        Window { basepoint: VertexId::Tee { i: 0 }, radius: 14 },
    )
    .unwrap();
    // d(t_{i+j}, r_i^j) = K-1 = 2
    let d = g
        .distance(&[VertexId::Tee { i: 5 }], &[VertexId::RayV { j: 3, i: 2 }])
        .unwrap();
    assert_eq!(d.exact_value(), Some(2));
    // d(R^i, R^j) = 2K-2 = 4 through the spine
    let ri: Vec<VertexId> = (0..4).map(|i| VertexId::RayV { j: 1, i }).collect();
    let rj: Vec<VertexId> = (0..4).map(|i| VertexId::RayV { j: 2, i }).collect();
    let d = g.distance(&ri, &rj).unwrap();
    assert_eq!(d.exact_value(), Some(4));
    // neighborhood of t_5 agrees with a brute-force scan over the window
    let t5 = VertexId::Tee { i: 5 };
    let nbrs = g.neighbors(&t5).unwrap();
    let mut brute = Vec::new();
    for v in g.vertices() {
        if v != &t5 && g.distance(&[v.clone()], &[t5.clone()]).unwrap().exact_value() == Some(1) {
            brute.push(v.clone());
        }
    }
    brute.sort();
    let mut nbrs = nbrs;
    nbrs.sort();
    assert_eq!(nbrs, brute);
}

#[test]
fn example42_ray_distance_2k_minus_2() {
    // distance between side rays is exactly 2K-2 whenever both nearest
    // connectors fit in the window
    for k in [2u64, 3, 4] {
        let g = GraphHandle::instantiate(
            GeneratorSpec::Example42 { k },
            Window { basepoint: VertexId::Tee { i: 0 }, radius: 20 },
        )
        .unwrap();
        let ra: Vec<VertexId> = (0..3)
            .map(|i| VertexId::RayV { j: 1, i })
            .filter(|v| g.contains(v))
            .collect();
        let rb: Vec<VertexId> = (0..3)
            .map(|i| VertexId::RayV { j: 3, i })
            .filter(|v| g.contains(v))
            .collect();
        let d = g.distance(&ra, &rb).unwrap();
        assert_eq!(d.exact_value(), Some(2 * k as u32 - 2));
    }
}

#[test]
fn example41_local_facts() {
    let n = 6u64;
    let g = GraphHandle::instantiate(
        GeneratorSpec::Example41 { n },
        Window { basepoint: VertexId::Clique { i: 0 }, radius: 16 },
    )
    .unwrap();
    // clique has diameter 1
    let d = g
        .distance(&[VertexId::Clique { i: 0 }], &[VertexId::Clique { i: 5 }])
        .unwrap();
    assert_eq!(d.exact_value(), Some(1));
    // d(R_a, R_b) = a + b: rays R_K, R_{K+1}, ... are pairwise 2K apart
    for a in 1..n {
        for b in a + 1..n {
            let ra: Vec<VertexId> = (0..3).map(|i| VertexId::RayV { j: a, i }).collect();
            let rb: Vec<VertexId> = (0..3).map(|i| VertexId::RayV { j: b, i }).collect();
            let d = g.distance(&ra, &rb).unwrap().exact_value().unwrap();
            assert_eq!(d as u64, a + b);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn neighbor_symmetry(gen_pick in 0usize..5, radius in 1u32..7) {
        let spec = match gen_pick {
            0 => GeneratorSpec::Grid2d,
            1 => GeneratorSpec::HalfGrid,
            2 => GeneratorSpec::HexHalfGrid,
            3 => GeneratorSpec::Example42 { k: 3 },
            _ => GeneratorSpec::CycleSpokes { n: 9 },
        };
        let base = spec.default_basepoint();
        let g = GraphHandle::instantiate(spec, Window { basepoint: base, radius }).unwrap();
        for v in g.vertices() {
            if !g.has_full_horizon(v).unwrap() { continue; }
            for w in g.neighbors(v).unwrap() {
                prop_assert!(g.neighbors(&w).unwrap().contains(v), "asymmetry {v} {w}");
            }
        }
    }

    #[test]
    fn ball_monotone_and_window_stable(radius in 3u32..8, r in 0u32..4) {
        let g = GraphHandle::instantiate(
            GeneratorSpec::Grid2d,
            Window { basepoint: VertexId::pair(0, 0), radius },
        ).unwrap();
        let a = vec![VertexId::pair(1, 0)];
        let b1 = g.ball(&a, r).unwrap();
        let b2 = g.ball(&a, r + 1).unwrap();
        let s1: std::collections::BTreeSet<_> = b1.vertices.iter().cloned().collect();
        let s2: std::collections::BTreeSet<_> = b2.vertices.iter().cloned().collect();
        prop_assert!(s1.is_subset(&s2));
        // window extension never changes an exact result
        if b1.exact {
            let big = GraphHandle::instantiate(
                GeneratorSpec::Grid2d,
                Window { basepoint: VertexId::pair(0, 0), radius: radius + 3 },
            ).unwrap();
            let b1big = big.ball(&a, r).unwrap();
            let sbig: std::collections::BTreeSet<_> = b1big.vertices.iter().cloned().collect();
            prop_assert_eq!(s1, sbig);
        }
    }

    #[test]
    fn exact_distance_stable_under_extension(x in -3i64..3, y in -3i64..3, radius in 4u32..7) {
        let g = GraphHandle::instantiate(
            GeneratorSpec::Grid2d,
            Window { basepoint: VertexId::pair(0, 0), radius },
        ).unwrap();
        prop_assume!(x.abs() + y.abs() <= radius as i64);
        let a = vec![VertexId::pair(0, 0)];
        let b = vec![VertexId::pair(x, y)];
        let d = g.distance(&a, &b).unwrap();
        if d.exact {
            let big = GraphHandle::instantiate(
                GeneratorSpec::Grid2d,
                Window { basepoint: VertexId::pair(0, 0), radius: radius + 4 },
            ).unwrap();
            let dbig = big.distance(&a, &b).unwrap();
            prop_assert_eq!(d.exact_value(), dbig.exact_value());
        }
    }
}
