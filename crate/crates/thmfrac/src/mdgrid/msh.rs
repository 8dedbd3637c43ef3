//! MSH 2.2 ASCII importer. Triangles become matrix cells; line elements
//! whose physical tag is listed in `fracture_tags` become fracture edges and
//! must conform to triangle edges.

use std::collections::HashMap;

use nalgebra::Vector2;

use super::network::DomainBox;
use super::split::{assemble_mixed_grid, FractureEdge, TriMesh};
use super::{GridError, MixedDimGrid};
use crate::scalar::Scalar;

pub fn import_msh<F: Scalar>(
    text: &str,
    fracture_tags: &[usize],
) -> Result<MixedDimGrid<F>, GridError> {
    let parse_err = |line: usize, message: &str| GridError::ParseError {
        line: line + 1,
        message: message.to_string(),
    };
    let lines: Vec<&str> = text.lines().collect();
    let mut i = 0usize;
    let mut node_map: HashMap<u64, usize> = HashMap::new();
    let mut nodes: Vec<Vector2<F>> = Vec::new();
    let mut tris: Vec<[usize; 3]> = Vec::new();
    let mut fracture_edges: Vec<FractureEdge> = Vec::new();
    let mut saw_format = false;

    while i < lines.len() {
        let line = lines[i].trim();
        match line {
            "$MeshFormat" => {
                let header = lines
                    .get(i + 1)
                    .ok_or_else(|| parse_err(i, "truncated $MeshFormat"))?;
                let version = header
                    .split_whitespace()
                    .next()
                    .ok_or_else(|| parse_err(i + 1, "empty format line"))?;
                if !version.starts_with("2.2") {
                    return Err(parse_err(i + 1, "only MSH format 2.2 is supported"));
                }
                saw_format = true;
                i = skip_to_end(&lines, i, "$EndMeshFormat")
                    .ok_or_else(|| parse_err(i, "missing $EndMeshFormat"))?;
            }
            "$Nodes" => {
                let count: usize = lines
                    .get(i + 1)
                    .and_then(|l| l.trim().parse().ok())
                    .ok_or_else(|| parse_err(i + 1, "invalid node count"))?;
                for k in 0..count {
                    let row = i + 2 + k;
                    let l = lines.get(row).ok_or_else(|| parse_err(row, "truncated $Nodes"))?;
                    let mut it = l.split_whitespace();
                    let id: u64 = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(row, "invalid node id"))?;
                    let x: f64 = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(row, "invalid node x"))?;
                    let y: f64 = it
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(row, "invalid node y"))?;
                    node_map.insert(id, nodes.len());
                    nodes.push(Vector2::new(
                        F::from_f64(x).unwrap(),
                        F::from_f64(y).unwrap(),
                    ));
                }
                let end = i + 2 + count;
                if lines.get(end).map(|l| l.trim()) != Some("$EndNodes") {
                    return Err(parse_err(end.min(lines.len() - 1), "missing $EndNodes"));
                }
                i = end;
            }
            "$Elements" => {
                let count: usize = lines
                    .get(i + 1)
                    .and_then(|l| l.trim().parse().ok())
                    .ok_or_else(|| parse_err(i + 1, "invalid element count"))?;
                for k in 0..count {
                    let row = i + 2 + k;
                    let l = lines
                        .get(row)
                        .ok_or_else(|| parse_err(row, "truncated $Elements"))?;
                    let fields: Vec<u64> = l
                        .split_whitespace()
                        .map(|t| t.parse::<u64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| parse_err(row, "invalid element line"))?;
                    if fields.len() < 3 {
                        return Err(parse_err(row, "element line too short"));
                    }
                    let etype = fields[1];
                    let ntags = fields[2] as usize;
                    let tag = if ntags > 0 { fields[3] as usize } else { 0 };
                    let conn = &fields[3 + ntags..];
                    let lookup = |id: u64| {
                        node_map
                            .get(&id)
                            .copied()
                            .ok_or_else(|| parse_err(row, "element references unknown node"))
                    };
                    match etype {
                        1 => {
                            if conn.len() != 2 {
                                return Err(parse_err(row, "line element needs 2 nodes"));
                            }
                            if fracture_tags.contains(&tag) {
                                fracture_edges.push(FractureEdge {
                                    a: lookup(conn[0])?,
                                    b: lookup(conn[1])?,
                                    tag,
                                });
                            }
                        }
                        2 => {
                            if conn.len() != 3 {
                                return Err(parse_err(row, "triangle element needs 3 nodes"));
                            }
                            tris.push([lookup(conn[0])?, lookup(conn[1])?, lookup(conn[2])?]);
                        }
                        _ => {} // points and higher-dimensional elements ignored
                    }
                }
                let end = i + 2 + count;
                if lines.get(end).map(|l| l.trim()) != Some("$EndElements") {
                    return Err(parse_err(end.min(lines.len() - 1), "missing $EndElements"));
                }
                i = end;
            }
            _ => {}
        }
        i += 1;
    }
    if !saw_format {
        return Err(GridError::ParseError {
            line: 1,
            message: "missing $MeshFormat section".into(),
        });
    }
    if tris.is_empty() {
        return Err(GridError::ParseError {
            line: 1,
            message: "mesh contains no triangles".into(),
        });
    }
    let domain = bounding_box(&nodes);
    assemble_mixed_grid(TriMesh { nodes, tris }, fracture_edges, domain)
}

fn skip_to_end(lines: &[&str], from: usize, end_marker: &str) -> Option<usize> {
    (from..lines.len()).find(|&k| lines[k].trim() == end_marker)
}

fn bounding_box<F: Scalar>(nodes: &[Vector2<F>]) -> DomainBox<F> {
    let mut min = nodes[0];
    let mut max = nodes[0];
    for p in nodes {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    DomainBox::new(min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_TRIANGLES: &str = "\
$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 1 1 0
4 0 1 0
$EndNodes
$Elements
ELEMENTS
$EndElements
";

    fn with_elements(elements: &[&str]) -> String {
        let body = format!("{}\n{}", elements.len(), elements.join("\n"));
        TWO_TRIANGLES.replace("ELEMENTS", &body)
    }

    #[test]
    fn minimal_mesh_without_fractures() {
        let text = with_elements(&["1 2 2 0 1 1 2 3", "2 2 2 0 1 1 3 4"]);
        let g = import_msh::<f64>(&text, &[]).unwrap();
        assert_eq!(g.matrix.num_cells(), 2);
        assert!(g.fractures.is_empty());
    }

    #[test]
    fn tagged_diagonal_becomes_fracture() {
        let text = with_elements(&["1 2 2 0 1 1 2 3", "2 2 2 0 1 1 3 4", "3 1 2 7 1 1 3"]);
        let g = import_msh::<f64>(&text, &[7]).unwrap();
        assert_eq!(g.fractures.len(), 1);
        assert_eq!(g.fractures[0].num_cells(), 1);
        assert_eq!(g.mf_interfaces.len(), 1);
        // both endpoints are tips: the single 1D cell still has two distinct
        // duplicated matrix faces
        assert_ne!(
            g.mf_interfaces[0].faces_plus[0],
            g.mf_interfaces[0].faces_minus[0]
        );
    }

    #[test]
    fn non_conforming_tagged_line_rejected() {
        let text = with_elements(&["1 2 2 0 1 1 2 3", "2 2 2 0 1 1 3 4", "3 1 2 7 1 2 4"]);
        let err = import_msh::<f64>(&text, &[7]).unwrap_err();
        assert!(matches!(err, GridError::NonConformingMesh(_)));
    }

    #[test]
    fn malformed_file_is_parse_error() {
        let err = import_msh::<f64>("$Nodes\nnope\n", &[]).unwrap_err();
        assert!(matches!(err, GridError::ParseError { .. }));
    }
}
