//! Deterministic node jiggling for verification grids.

use std::collections::HashSet;

use nalgebra::Vector2;

use super::split::FractureEdge;
use crate::scalar::{lit, Scalar};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

fn unit_interval(bits: u64) -> f64 {
    (bits >> 11) as f64 / (1u64 << 53) as f64
}

/// Moves interior lattice nodes that are not part of a fracture by a
/// deterministic pseudo-random offset of `amplitude * h` per coordinate.
pub fn perturb_lattice_nodes<F: Scalar>(
    nodes: &mut [Vector2<F>],
    nx: usize,
    ny: usize,
    h: Vector2<F>,
    fracture_edges: &[FractureEdge],
    amplitude: F,
    seed: u64,
) {
    let mut pinned: HashSet<usize> = HashSet::new();
    for fe in fracture_edges {
        pinned.insert(fe.a);
        pinned.insert(fe.b);
    }
    for j in 1..ny {
        for i in 1..nx {
            let id = j * (nx + 1) + i;
            if pinned.contains(&id) {
                continue;
            }
            let ux = unit_interval(splitmix64(seed ^ (id as u64) << 1));
            let uy = unit_interval(splitmix64(seed ^ ((id as u64) << 1 | 1)));
            let two = lit::<F>(2.0);
            nodes[id].x += amplitude * h.x * (two * lit::<F>(ux) - F::one());
            nodes[id].y += amplitude * h.y * (two * lit::<F>(uy) - F::one());
        }
    }
}

/// Public hook used by tests: perturbs the nodes of a freestanding
/// triangulation (no fractures) away from the bounding box edges.
pub fn perturb_nodes<F: Scalar>(
    nodes: &mut [Vector2<F>],
    min: Vector2<F>,
    max: Vector2<F>,
    amplitude: F,
    seed: u64,
) {
    let tol = (max - min).norm() * lit::<F>(1e-12);
    for (id, p) in nodes.iter_mut().enumerate() {
        let on_boundary = (p.x - min.x).abs() < tol
            || (p.x - max.x).abs() < tol
            || (p.y - min.y).abs() < tol
            || (p.y - max.y).abs() < tol;
        if on_boundary {
            continue;
        }
        let ux = unit_interval(splitmix64(seed ^ (id as u64) << 1));
        let uy = unit_interval(splitmix64(seed ^ ((id as u64) << 1 | 1)));
        let two = lit::<F>(2.0);
        p.x += amplitude * (two * lit::<F>(ux) - F::one());
        p.y += amplitude * (two * lit::<F>(uy) - F::one());
    }
}
