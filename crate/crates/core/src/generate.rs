//! Deterministic generators for planar test graphs.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::UndirectedGraph;

fn build(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> UndirectedGraph {
    UndirectedGraph::new(n, edges).expect("generator emits a simple graph")
}

pub fn complete(n: usize) -> UndirectedGraph {
    build(n, (0..n).flat_map(|u| ((u + 1)..n).map(move |v| (u, v))))
}

pub fn path(n: usize) -> UndirectedGraph {
    build(n, (1..n).map(|v| (v - 1, v)))
}

pub fn cycle(n: usize) -> UndirectedGraph {
    assert!(n >= 3, "a cycle needs three nodes");
    build(n, (0..n).map(|v| (v, (v + 1) % n)))
}

/// Center 0 joined to leaves `1..=leaves`.
pub fn star(leaves: usize) -> UndirectedGraph {
    build(leaves + 1, (1..=leaves).map(|v| (0, v)))
}

/// Hub 0 joined to every node of the rim cycle `1..=rim`.
pub fn wheel(rim: usize) -> UndirectedGraph {
    assert!(rim >= 3, "a wheel needs a rim of three");
    let spokes = (1..=rim).map(|v| (0, v));
    let rim_edges = (0..rim).map(|i| (1 + i, 1 + (i + 1) % rim));
    build(rim + 1, spokes.chain(rim_edges))
}

/// `rows x cols` grid, row-major numbering.
pub fn grid(rows: usize, cols: usize) -> UndirectedGraph {
    let id = |r: usize, c: usize| r * cols + c;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
            }
        }
    }
    build(rows * cols, edges)
}

/// Maximal outerplanar graph: an `n`-cycle triangulated by random
/// non-crossing chords (recursive polygon splitting).
pub fn outerplanar(n: usize, seed: u64) -> UndirectedGraph {
    assert!(n >= 3);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges: BTreeSet<(usize, usize)> = (0..n).map(|v| (v.min((v + 1) % n), v.max((v + 1) % n))).collect();
    let mut polygons = vec![(0..n).collect::<Vec<_>>()];
    while let Some(poly) = polygons.pop() {
        if poly.len() <= 3 {
            continue;
        }
        // split along a chord between two non-adjacent polygon corners
        let k = poly.len();
        let i = rng.random_range(0..k);
        let j = (i + rng.random_range(2..k - 1)) % k;
        let (a, b) = (poly[i].min(poly[j]), poly[i].max(poly[j]));
        edges.insert((a, b));
        let (lo, hi) = (i.min(j), i.max(j));
        polygons.push(poly[lo..=hi].to_vec());
        let mut rest = poly[hi..].to_vec();
        rest.extend_from_slice(&poly[..=lo]);
        polygons.push(rest);
    }
    build(n, edges)
}

fn relabel(n: usize, edges: &BTreeSet<(usize, usize)>, rng: &mut ChaCha8Rng) -> UndirectedGraph {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(rng);
    build(n, edges.iter().map(|&(u, v)| (perm[u], perm[v])))
}

/// Random planar triangulation with `3n - 6` edges (`n >= 3`).
///
/// Built by repeatedly inserting a node into a random triangular face of a
/// sphere triangulation, then applying random diagonal flips (which keep the
/// graph a simple triangulation), then relabelling nodes at random.
pub fn random_triangulation(n: usize, seed: u64) -> UndirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (edges, _) = triangulation_faces(n, &mut rng);
    relabel(n, &edges, &mut rng)
}

fn norm(u: usize, v: usize) -> (usize, usize) {
    (u.min(v), u.max(v))
}

fn triangulation_faces(n: usize, rng: &mut ChaCha8Rng) -> (BTreeSet<(usize, usize)>, Vec<[usize; 3]>) {
    assert!(n >= 3, "a triangulation needs three nodes");
    // oriented faces; the outer face of the first triangle is (0, 2, 1)
    let mut faces: Vec<[usize; 3]> = vec![[0, 1, 2], [0, 2, 1]];
    let mut edges: BTreeSet<(usize, usize)> = [(0, 1), (1, 2), (0, 2)].into_iter().collect();
    for v in 3..n {
        let f = rng.random_range(0..faces.len());
        let [a, b, c] = faces.swap_remove(f);
        faces.extend([[a, b, v], [b, c, v], [c, a, v]]);
        edges.extend([norm(a, v), norm(b, v), norm(c, v)]);
    }
    let mut degree = vec![0usize; n];
    for &(u, v) in &edges {
        degree[u] += 1;
        degree[v] += 1;
    }
    for _ in 0..(3 * n) {
        let list: Vec<(usize, usize)> = edges.iter().copied().collect();
        let (a, b) = list[rng.random_range(0..list.len())];
        // the two faces on either side of {a, b}
        let sides: Vec<(usize, usize)> = faces
            .iter()
            .enumerate()
            .filter_map(|(i, f)| {
                (0..3).find_map(|k| {
                    let (x, y, z) = (f[k], f[(k + 1) % 3], f[(k + 2) % 3]);
                    ((x == a && y == b) || (x == b && y == a)).then_some((i, z))
                })
            })
            .collect();
        let [(f1, c), (f2, d)] = sides[..] else { continue };
        if c == d || edges.contains(&norm(c, d)) || degree[a] <= 3 || degree[b] <= 3 {
            continue;
        }
        // orient so that f1 = (p, q, c) and f2 = (q, p, d)
        let (p, q) = {
            let f = faces[f1];
            let k = (0..3).find(|&k| f[(k + 2) % 3] == c).unwrap();
            (f[k], f[(k + 1) % 3])
        };
        faces[f1] = [p, d, c];
        faces[f2] = [d, q, c];
        edges.remove(&norm(a, b));
        edges.insert(norm(c, d));
        degree[a] -= 1;
        degree[b] -= 1;
        degree[c] += 1;
        degree[d] += 1;
    }
    (edges, faces)
}

/// Random triangulation with each edge independently dropped with
/// probability `drop`. Planar, possibly disconnected.
pub fn random_planar(n: usize, drop: f64, seed: u64) -> UndirectedGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (edges, _) = triangulation_faces(n, &mut rng);
    let kept: BTreeSet<_> = edges.into_iter().filter(|_| !rng.random_bool(drop)).collect();
    relabel(n, &kept, &mut rng)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapes_have_expected_sizes() {
        assert_eq!(complete(4).edge_count(), 6);
        assert_eq!(path(5).edge_count(), 4);
        assert_eq!(cycle(6).edge_count(), 6);
        assert_eq!(star(5).edge_count(), 5);
        assert_eq!(wheel(6).edge_count(), 12);
        assert_eq!(grid(3, 4).edge_count(), 17);
        for seed in 0..5 {
            // maximal outerplanar: 2n - 3 edges
            assert_eq!(outerplanar(9, seed).edge_count(), 15);
        }
    }

    #[test]
    fn triangulations_have_3n_minus_6_edges() {
        for n in 3..=30 {
            for seed in 0..3 {
                assert_eq!(random_triangulation(n, seed).edge_count(), 3 * n - 6, "n={n} seed={seed}");
            }
        }
    }

    #[test]
    fn euler_characteristic_holds_after_flips() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (edges, faces) = triangulation_faces(20, &mut rng);
        // V - E + F = 2 on the sphere
        assert_eq!(20 + faces.len(), edges.len() + 2);
        for f in &faces {
            assert!(edges.contains(&norm(f[0], f[1])));
            assert!(edges.contains(&norm(f[1], f[2])));
            assert!(edges.contains(&norm(f[2], f[0])));
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(random_triangulation(12, 4), random_triangulation(12, 4));
        assert_eq!(random_planar(12, 0.3, 4), random_planar(12, 0.3, 4));
        assert_ne!(random_triangulation(12, 4), random_triangulation(12, 5));
    }
}
