//! Generic construction of a mixed-dimensional grid from a conforming
//! triangulation and a set of fracture edges.
//!
//! The pipeline slits the matrix topology along fractures: nodes interior to
//! a fracture are duplicated per side (the incident triangles are
//! two-coloured through non-fracture edges), and each fracture edge produces
//! one face per adjacent triangle instead of a shared face. Fracture tips
//! keep a single node, so interaction regions wrap around tips as they
//! should. Intersection nodes split into one copy per quadrant and spawn a
//! 0D subdomain.

use std::collections::HashMap;

use nalgebra::Vector2;

use super::grid::{BoxSide, FaceTag, Side, SubdomainGrid};
use super::interface::{FractureIntersectionInterface, MatrixFractureInterface};
use super::network::DomainBox;
use super::{GridError, MixedDimGrid};
use crate::scalar::{lit, Scalar};

#[derive(Debug, Clone)]
pub struct TriMesh<F> {
    pub nodes: Vec<Vector2<F>>,
    pub tris: Vec<[usize; 3]>,
}

/// A triangulation edge that lies on a fracture; `tag` groups edges that
/// belong to the same input segment (or MSH physical group).
#[derive(Debug, Clone, Copy)]
pub struct FractureEdge {
    pub a: usize,
    pub b: usize,
    pub tag: usize,
}

fn sorted_pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

struct Branch {
    /// Fracture-edge indices in path order; entry i is 1D cell i.
    cells: Vec<usize>,
    /// Original mesh node ids along the path (cells.len() + 1 entries).
    path: Vec<usize>,
}

pub fn assemble_mixed_grid<F: Scalar>(
    mut mesh: TriMesh<F>,
    fracture_edges: Vec<FractureEdge>,
    domain: DomainBox<F>,
) -> Result<MixedDimGrid<F>, GridError> {
    orient_ccw(&mut mesh);
    let n_orig_nodes = mesh.nodes.len();

    // fracture edge lookup by original sorted node pair
    let mut edge_lookup: HashMap<(usize, usize), usize> = HashMap::new();
    for (e, fe) in fracture_edges.iter().enumerate() {
        if fe.a == fe.b {
            return Err(GridError::DegenerateGeometry(
                "fracture edge with identical endpoints".into(),
            ));
        }
        if edge_lookup.insert(sorted_pair(fe.a, fe.b), e).is_some() {
            return Err(GridError::DegenerateGeometry(
                "duplicate fracture edge (overlapping segments?)".into(),
            ));
        }
    }

    // node -> incident fracture edges
    let mut node_frac_edges: Vec<Vec<usize>> = vec![Vec::new(); n_orig_nodes];
    for (e, fe) in fracture_edges.iter().enumerate() {
        node_frac_edges[fe.a].push(e);
        node_frac_edges[fe.b].push(e);
    }

    // intersection nodes: >= 3 incident fracture edges, or edges from >= 2 tags
    let mut isx_of_node: HashMap<usize, usize> = HashMap::new();
    for n in 0..n_orig_nodes {
        let edges = &node_frac_edges[n];
        if edges.len() < 2 {
            continue;
        }
        let first_tag = fracture_edges[edges[0]].tag;
        let mixed_tags = edges.iter().any(|&e| fracture_edges[e].tag != first_tag);
        if edges.len() >= 3 || mixed_tags {
            let next = isx_of_node.len();
            isx_of_node.insert(n, next);
        }
    }
    // deterministic 0D ordering by ascending node id
    {
        let mut keys: Vec<usize> = isx_of_node.keys().copied().collect();
        keys.sort_unstable();
        for (i, k) in keys.iter().enumerate() {
            *isx_of_node.get_mut(k).unwrap() = i;
        }
    }

    let branches = build_branches(&mesh, &fracture_edges, &isx_of_node)?;
    // map original edge pair -> (branch, cell)
    let mut branch_cell_of_edge: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
    for (b, branch) in branches.iter().enumerate() {
        for (c, &e) in branch.cells.iter().enumerate() {
            let fe = &fracture_edges[e];
            branch_cell_of_edge.insert(sorted_pair(fe.a, fe.b), (b, c));
        }
    }

    // --- node duplication along the slits -------------------------------
    let mut orig_of: Vec<usize> = (0..n_orig_nodes).collect();
    let mut node_tris: Vec<Vec<usize>> = vec![Vec::new(); n_orig_nodes];
    for (t, tri) in mesh.tris.iter().enumerate() {
        for &n in tri {
            node_tris[n].push(t);
        }
    }
    for n in 0..n_orig_nodes {
        if node_frac_edges[n].is_empty() {
            continue;
        }
        let tris_n = &node_tris[n];
        // group incident triangles by the incident edge (n, m)
        let mut edge_tris: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for &t in tris_n {
            for &m_cur in &mesh.tris[t] {
                let m = orig_of[m_cur];
                if m == n {
                    continue;
                }
                // only edges of this triangle that contain node n
                if !tri_has_edge(&mesh.tris[t], &orig_of, n, m) {
                    continue;
                }
                edge_tris.entry(sorted_pair(n, m)).or_default().push(t);
            }
        }
        // union-find over incident triangles through non-fracture edges
        let index_of: HashMap<usize, usize> =
            tris_n.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut uf = UnionFind::new(tris_n.len());
        for (pair, ts) in &edge_tris {
            if edge_lookup.contains_key(pair) {
                continue;
            }
            for w in ts.windows(2) {
                uf.union(index_of[&w[0]], index_of[&w[1]]);
            }
        }
        // components ordered by smallest triangle id
        let mut comp_repr: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, &t) in tris_n.iter().enumerate() {
            comp_repr.entry(uf.find(i)).or_default().push(t);
        }
        let mut comps: Vec<Vec<usize>> = comp_repr.into_values().collect();
        comps.sort_by_key(|c| *c.iter().min().unwrap());
        for comp in comps.iter().skip(1) {
            let new_id = mesh.nodes.len();
            let coords = mesh.nodes[n];
            mesh.nodes.push(coords);
            orig_of.push(n);
            for &t in comp {
                for slot in mesh.tris[t].iter_mut() {
                    if *slot == n {
                        *slot = new_id;
                    }
                }
            }
        }
    }

    // --- face construction ----------------------------------------------
    let n_cells = mesh.tris.len();
    let mut face_nodes: Vec<Vec<usize>> = Vec::new();
    let mut face_cells: Vec<[Option<usize>; 2]> = Vec::new();
    let mut face_normals: Vec<Vector2<F>> = Vec::new();
    let mut face_tags: Vec<FaceTag> = Vec::new();
    let mut cell_faces: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n_cells];
    let mut open_faces: HashMap<(usize, usize), usize> = HashMap::new();
    let mut frac_face_count: HashMap<(usize, usize), usize> = HashMap::new();

    for (t, tri) in mesh.tris.iter().enumerate() {
        for k in 0..3 {
            let a = tri[k];
            let b = tri[(k + 1) % 3];
            let orig_pair = sorted_pair(orig_of[a], orig_of[b]);
            let d = mesh.nodes[b] - mesh.nodes[a];
            let outward = Vector2::new(d.y, -d.x); // CCW edge -> outward normal
            if edge_lookup.contains_key(&orig_pair) {
                let (branch, cell) = branch_cell_of_edge[&orig_pair];
                let f = face_nodes.len();
                face_nodes.push(vec![a, b]);
                face_cells.push([Some(t), None]);
                face_normals.push(outward);
                // side resolved below once cell centers exist
                face_tags.push(FaceTag::Fracture {
                    branch,
                    cell,
                    side: Side::Plus,
                });
                cell_faces[t].push((f, 1));
                *frac_face_count.entry(orig_pair).or_insert(0) += 1;
            } else {
                let key = sorted_pair(a, b);
                if let Some(&f) = open_faces.get(&key) {
                    if face_cells[f][1].is_some() {
                        return Err(GridError::NonConformingMesh(format!(
                            "edge shared by more than two triangles near node {}",
                            orig_pair.0
                        )));
                    }
                    face_cells[f][1] = Some(t);
                    face_tags[f] = FaceTag::Interior;
                    cell_faces[t].push((f, -1));
                } else {
                    let f = face_nodes.len();
                    face_nodes.push(vec![a, b]);
                    face_cells.push([Some(t), None]);
                    face_normals.push(outward);
                    face_tags.push(FaceTag::Boundary(BoxSide::Left)); // refined below
                    cell_faces[t].push((f, 1));
                    open_faces.insert(key, f);
                }
            }
        }
    }
    for (pair, count) in &frac_face_count {
        if *count != 2 {
            return Err(GridError::NonConformingMesh(format!(
                "fracture edge ({}, {}) is adjacent to {} triangles (expected 2)",
                pair.0, pair.1, count
            )));
        }
    }
    for e in edge_lookup.keys() {
        if !frac_face_count.contains_key(e) {
            return Err(GridError::NonConformingMesh(format!(
                "fracture edge ({}, {}) does not coincide with any triangle edge",
                e.0, e.1
            )));
        }
    }

    // cell geometry
    let third = lit::<F>(1.0 / 3.0);
    let half = lit::<F>(0.5);
    let mut cell_centers = Vec::with_capacity(n_cells);
    let mut cell_volumes = Vec::with_capacity(n_cells);
    for tri in &mesh.tris {
        let [a, b, c] = *tri;
        let (pa, pb, pc) = (mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]);
        cell_centers.push((pa + pb + pc) * third);
        let area = ((pb - pa).x * (pc - pa).y - (pb - pa).y * (pc - pa).x) * half;
        if area <= F::zero() {
            return Err(GridError::DegenerateGeometry(
                "triangle with non-positive area".into(),
            ));
        }
        cell_volumes.push(area);
    }
    let face_centers: Vec<Vector2<F>> = face_nodes
        .iter()
        .map(|fnodes| (mesh.nodes[fnodes[0]] + mesh.nodes[fnodes[1]]) * half)
        .collect();

    // branch reference frames
    let frames: Vec<(Vector2<F>, Vector2<F>)> = branches
        .iter()
        .map(|br| {
            let p0 = mesh.nodes[br.path[0]];
            let p1 = mesh.nodes[*br.path.last().unwrap()];
            let t = (p1 - p0).normalize();
            (Vector2::new(-t.y, t.x), t) // (ref_normal, tangent)
        })
        .collect();

    // resolve fracture face sides and boundary tags
    let box_tol = domain.diagonal() * lit::<F>(1e-9);
    for f in 0..face_nodes.len() {
        match face_tags[f] {
            FaceTag::Fracture { branch, cell, .. } => {
                let c = face_cells[f][0].unwrap();
                let d = cell_centers[c] - face_centers[f];
                let side = if d.dot(&frames[branch].0) > F::zero() {
                    Side::Plus
                } else {
                    Side::Minus
                };
                face_tags[f] = FaceTag::Fracture { branch, cell, side };
            }
            FaceTag::Boundary(_) => {
                face_tags[f] = FaceTag::Boundary(nearest_box_side(&face_centers[f], &domain, box_tol));
            }
            _ => {}
        }
    }

    let matrix = SubdomainGrid {
        dim: 2,
        nodes: mesh.nodes.clone(),
        cell_nodes: mesh.tris.iter().map(|t| t.to_vec()).collect(),
        cell_centers,
        cell_volumes,
        face_nodes,
        face_centers,
        face_normals,
        face_cells,
        cell_faces,
        face_tags,
    };

    // matrix-fracture interfaces: collect the duplicated faces per branch cell
    let mut mf_interfaces = Vec::with_capacity(branches.len());
    for (b, branch) in branches.iter().enumerate() {
        let n = branch.cells.len();
        let mut plus: Vec<Option<usize>> = vec![None; n];
        let mut minus: Vec<Option<usize>> = vec![None; n];
        for f in 0..matrix.num_faces() {
            if let FaceTag::Fracture { branch, cell, side } = matrix.face_tags[f] {
                if branch != b {
                    continue;
                }
                let slot = match side {
                    Side::Plus => &mut plus[cell],
                    Side::Minus => &mut minus[cell],
                };
                if slot.is_some() {
                    return Err(GridError::OrientationError(format!(
                        "branch {b} cell {cell}: both duplicated faces on the {side:?} side"
                    )));
                }
                *slot = Some(f);
            }
        }
        let faces_plus: Vec<usize> = plus
            .into_iter()
            .enumerate()
            .map(|(c, s)| {
                s.ok_or_else(|| {
                    GridError::OrientationError(format!("branch {b} cell {c}: missing plus face"))
                })
            })
            .collect::<Result<_, _>>()?;
        let faces_minus: Vec<usize> = minus
            .into_iter()
            .enumerate()
            .map(|(c, s)| {
                s.ok_or_else(|| {
                    GridError::OrientationError(format!("branch {b} cell {c}: missing minus face"))
                })
            })
            .collect::<Result<_, _>>()?;
        mf_interfaces.push(MatrixFractureInterface {
            branch: b,
            faces_plus,
            faces_minus,
            ref_normal: frames[b].0,
            ref_tangent: frames[b].1,
        });
    }

    // 1D branch grids
    let mut fractures = Vec::with_capacity(branches.len());
    for (b, branch) in branches.iter().enumerate() {
        fractures.push(build_branch_grid(&mesh, branch, &isx_of_node, b)?);
    }

    // 0D intersection grids, ordered by originating node
    let mut isx_nodes: Vec<(usize, usize)> = isx_of_node.iter().map(|(&n, &i)| (i, n)).collect();
    isx_nodes.sort_unstable();
    let intersections: Vec<SubdomainGrid<F>> = isx_nodes
        .iter()
        .map(|&(_, n)| SubdomainGrid {
            dim: 0,
            nodes: vec![mesh.nodes[n]],
            cell_nodes: vec![vec![0]],
            cell_centers: vec![mesh.nodes[n]],
            cell_volumes: vec![F::one()],
            face_nodes: Vec::new(),
            face_centers: Vec::new(),
            face_normals: Vec::new(),
            face_cells: Vec::new(),
            cell_faces: vec![Vec::new()],
            face_tags: Vec::new(),
        })
        .collect();

    // fracture-intersection interfaces ordered by (isx, branch)
    let mut fx_interfaces = Vec::new();
    for (isx, _) in isx_nodes.iter().map(|&(i, n)| (i, n)) {
        for (b, frac) in fractures.iter().enumerate() {
            for f in 0..frac.num_faces() {
                if let FaceTag::IntersectionEnd { isx: fi } = frac.face_tags[f] {
                    if fi == isx {
                        let cell = frac.face_cells[f][0].unwrap();
                        fx_interfaces.push(FractureIntersectionInterface {
                            isx,
                            branch: b,
                            branch_face: f,
                            branch_cell: cell,
                        });
                    }
                }
            }
        }
    }

    let grid = MixedDimGrid {
        matrix,
        fractures,
        intersections,
        mf_interfaces,
        fx_interfaces,
        domain,
    };
    check_conformity(&grid)?;
    Ok(grid)
}

fn tri_has_edge(tri: &[usize; 3], orig_of: &[usize], n: usize, m: usize) -> bool {
    for k in 0..3 {
        let a = orig_of[tri[k]];
        let b = orig_of[tri[(k + 1) % 3]];
        if (a == n && b == m) || (a == m && b == n) {
            return true;
        }
    }
    false
}

fn orient_ccw<F: Scalar>(mesh: &mut TriMesh<F>) {
    for tri in mesh.tris.iter_mut() {
        let (pa, pb, pc) = (mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]);
        let area2 = (pb - pa).x * (pc - pa).y - (pb - pa).y * (pc - pa).x;
        if area2 < F::zero() {
            tri.swap(1, 2);
        }
    }
}

fn nearest_box_side<F: Scalar>(p: &Vector2<F>, domain: &DomainBox<F>, _tol: F) -> BoxSide {
    let dl = (p.x - domain.min.x).abs();
    let dr = (p.x - domain.max.x).abs();
    let db = (p.y - domain.min.y).abs();
    let dt = (p.y - domain.max.y).abs();
    let mut best = (dl, BoxSide::Left);
    for cand in [(dr, BoxSide::Right), (db, BoxSide::Bottom), (dt, BoxSide::Top)] {
        if cand.0 < best.0 {
            best = cand;
        }
    }
    best.1
}

fn build_branches<F: Scalar>(
    mesh: &TriMesh<F>,
    fracture_edges: &[FractureEdge],
    isx_of_node: &HashMap<usize, usize>,
) -> Result<Vec<Branch>, GridError> {
    let n_edges = fracture_edges.len();
    let mut uf = UnionFind::new(n_edges);
    // connect edges of the same tag through non-intersection nodes
    let mut node_edges: HashMap<usize, Vec<usize>> = HashMap::new();
    for (e, fe) in fracture_edges.iter().enumerate() {
        node_edges.entry(fe.a).or_default().push(e);
        node_edges.entry(fe.b).or_default().push(e);
    }
    for (node, edges) in &node_edges {
        if isx_of_node.contains_key(node) {
            continue;
        }
        for w in edges.windows(2) {
            if fracture_edges[w[0]].tag == fracture_edges[w[1]].tag {
                uf.union(w[0], w[1]);
            }
        }
    }
    let mut comp_edges: HashMap<usize, Vec<usize>> = HashMap::new();
    for e in 0..n_edges {
        comp_edges.entry(uf.find(e)).or_default().push(e);
    }
    let mut comps: Vec<Vec<usize>> = comp_edges.into_values().collect();
    comps.sort_by_key(|c| *c.iter().min().unwrap());

    let mut branches = Vec::with_capacity(comps.len());
    for comp in comps {
        branches.push(order_branch(mesh, fracture_edges, comp)?);
    }
    Ok(branches)
}

/// Orders the edges of one branch into a path, starting from the endpoint
/// with lexicographically smallest coordinates.
fn order_branch<F: Scalar>(
    mesh: &TriMesh<F>,
    fracture_edges: &[FractureEdge],
    comp: Vec<usize>,
) -> Result<Branch, GridError> {
    let mut degree: HashMap<usize, Vec<usize>> = HashMap::new();
    for &e in &comp {
        let fe = &fracture_edges[e];
        degree.entry(fe.a).or_default().push(e);
        degree.entry(fe.b).or_default().push(e);
    }
    let mut endpoints: Vec<usize> = degree
        .iter()
        .filter(|(_, es)| es.len() == 1)
        .map(|(&n, _)| n)
        .collect();
    if endpoints.len() != 2 {
        return Err(GridError::DegenerateGeometry(
            "fracture branch is not a simple path (loop or bifurcation)".into(),
        ));
    }
    endpoints.sort_by(|&a, &b| {
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        pa.x.partial_cmp(&pb.x)
            .unwrap()
            .then(pa.y.partial_cmp(&pb.y).unwrap())
            .then(a.cmp(&b))
    });
    let start = endpoints[0];
    let mut path = vec![start];
    let mut cells = Vec::with_capacity(comp.len());
    let mut used = vec![false; fracture_edges.len()];
    let mut current = start;
    for _ in 0..comp.len() {
        let next_edge = degree[&current]
            .iter()
            .copied()
            .find(|&e| !used[e])
            .ok_or_else(|| GridError::DegenerateGeometry("broken fracture path".into()))?;
        used[next_edge] = true;
        let fe = &fracture_edges[next_edge];
        let next_node = if fe.a == current { fe.b } else { fe.a };
        cells.push(next_edge);
        path.push(next_node);
        current = next_node;
    }
    Ok(Branch { cells, path })
}

fn build_branch_grid<F: Scalar>(
    mesh: &TriMesh<F>,
    branch: &Branch,
    isx_of_node: &HashMap<usize, usize>,
    _branch_id: usize,
) -> Result<SubdomainGrid<F>, GridError> {
    let n = branch.cells.len();
    let half = lit::<F>(0.5);
    let nodes: Vec<Vector2<F>> = branch.path.iter().map(|&p| mesh.nodes[p]).collect();
    let mut cell_centers = Vec::with_capacity(n);
    let mut cell_volumes = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (nodes[i], nodes[i + 1]);
        cell_centers.push((a + b) * half);
        let len = (b - a).norm();
        if len <= F::zero() {
            return Err(GridError::DegenerateGeometry(
                "zero-length fracture cell".into(),
            ));
        }
        cell_volumes.push(len);
    }
    let mut face_centers = Vec::with_capacity(n + 1);
    let mut face_normals = Vec::with_capacity(n + 1);
    let mut face_cells = Vec::with_capacity(n + 1);
    let mut face_tags = Vec::with_capacity(n + 1);
    let mut cell_faces: Vec<Vec<(usize, i8)>> = vec![Vec::new(); n];
    for i in 0..=n {
        face_centers.push(nodes[i]);
        let tangent = if i == 0 {
            (nodes[1] - nodes[0]).normalize()
        } else {
            (nodes[i] - nodes[i - 1]).normalize()
        };
        let end_tag = |node: usize| match isx_of_node.get(&node) {
            Some(&isx) => FaceTag::IntersectionEnd { isx },
            None => FaceTag::Tip,
        };
        if i == 0 {
            face_normals.push(-tangent);
            face_cells.push([Some(0), None]);
            face_tags.push(end_tag(branch.path[0]));
            cell_faces[0].push((0, 1));
        } else if i == n {
            face_normals.push(tangent);
            face_cells.push([Some(n - 1), None]);
            face_tags.push(end_tag(branch.path[n]));
            cell_faces[n - 1].push((i, 1));
        } else {
            face_normals.push(tangent);
            face_cells.push([Some(i - 1), Some(i)]);
            face_tags.push(FaceTag::Interior);
            cell_faces[i - 1].push((i, 1));
            cell_faces[i].push((i, -1));
        }
    }
    Ok(SubdomainGrid {
        dim: 1,
        nodes,
        cell_nodes: (0..n).map(|i| vec![i, i + 1]).collect(),
        cell_centers,
        cell_volumes,
        face_nodes: (0..=n).map(|i| vec![i]).collect(),
        face_centers,
        face_normals,
        face_cells,
        cell_faces,
        face_tags,
    })
}

fn check_conformity<F: Scalar>(grid: &MixedDimGrid<F>) -> Result<(), GridError> {
    let tol = grid.domain.diagonal() * lit::<F>(1e-10);
    for iface in &grid.mf_interfaces {
        let frac = &grid.fractures[iface.branch];
        for (c, (&fp, &fm)) in iface
            .faces_plus
            .iter()
            .zip(iface.faces_minus.iter())
            .enumerate()
        {
            for f in [fp, fm] {
                let d = (grid.matrix.face_centers[f] - frac.cell_centers[c]).norm();
                if d > tol {
                    return Err(GridError::NonConformingMesh(format!(
                        "matrix face {f} centre does not match fracture cell {c}"
                    )));
                }
                let measure_gap =
                    (grid.matrix.face_area(f) - frac.cell_volumes[c]).abs();
                if measure_gap > tol.max(frac.cell_volumes[c] * lit::<F>(1e-10)) {
                    return Err(GridError::NonConformingMesh(format!(
                        "matrix face {f} measure does not match fracture cell {c}"
                    )));
                }
            }
        }
    }
    Ok(())
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}
