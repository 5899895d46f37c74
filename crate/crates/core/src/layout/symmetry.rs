//! Symmetric layouts: a layout of one half is mirrored onto the full mesh,
//! the symmetry plane becomes a seam, and that seam is then reduced by the
//! removal and dart passes.

use std::collections::HashSet;

use super::check::PatchChecker;
use super::darts::{create_darts, DartRecord};
use super::remove::remove_redundant;
use super::{Layout, PathOrigin};
use crate::mesh::{SymmetrySplit, TriMesh, Vec3};

/// Full-mesh edges between faces on opposite sides of the plane.
pub fn plane_edges(split: &SymmetrySplit, mesh: &TriMesh) -> Vec<usize> {
    (0..mesh.num_edges())
        .filter(|&e| match mesh.edge_faces(e) {
            [Some(f), Some(g)] => split.face_side[f] != split.face_side[g],
            _ => false,
        })
        .collect()
}

/// Vertex chains of an edge set, split at branch points and boundary
/// vertices; cycles come last.
fn chains(mesh: &TriMesh, edges: &[usize]) -> Vec<Vec<usize>> {
    let nv = mesh.num_vertices();
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); nv];
    for &e in edges {
        let [a, b] = mesh.edges()[e];
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    let stop = |v: usize| adj[v].len() != 2 || mesh.is_boundary_vertex(v);
    let mut used = HashSet::new();
    let mut out = Vec::new();
    let walk = |start: usize, first: (usize, usize), used: &mut HashSet<usize>| {
        let mut verts = vec![start];
        let mut step = first;
        loop {
            used.insert(step.1);
            verts.push(step.0);
            if stop(step.0) || step.0 == start {
                break;
            }
            match adj[step.0].iter().find(|(_, e)| !used.contains(e)) {
                Some(&s) => step = s,
                None => break,
            }
        }
        verts
    };
    for pass in 0..2 {
        for v in 0..nv {
            if pass == 0 && !stop(v) {
                continue;
            }
            for i in 0..adj[v].len() {
                let s = adj[v][i];
                if !used.contains(&s.1) {
                    out.push(walk(v, s, &mut used));
                }
            }
        }
    }
    out
}

/// Mirrors a layout of `split.half` onto `full`. Half path `i` becomes full
/// paths `2i` (as is) and `2i + 1` (reflected); the plane seam is added
/// last as symmetry paths.
pub fn mirror_merge(half: &Layout, split: &SymmetrySplit, full: &TriMesh, poses: Vec<Vec<Vec3>>) -> Layout {
    let orig = &split.half_to_orig_vertex;
    let mirror = |v: usize| split.mirror_vertex[orig[v]];
    let mut out = Layout::new(full.clone(), poses);
    for p in &half.paths {
        let a: Vec<usize> = p.vertices.iter().map(|&v| orig[v]).collect();
        let b: Vec<usize> = p.vertices.iter().map(|&v| mirror(v)).collect();
        out.insert_path(a, p.closed, p.origin);
        out.insert_path(b, p.closed, PathOrigin::Mirror);
    }
    // the exact cut state of the half, not a re-insertion
    for e in 0..full.num_edges() {
        out.set_cut(e, None);
    }
    let hm = &half.mesh;
    for e in half.cut_edges() {
        let [a, b] = hm.edges()[e];
        let owner = half.owner(e).unwrap();
        if let Some(fe) = full.edge_between(orig[a], orig[b]) {
            out.set_cut(fe, Some(2 * owner));
        }
        if let Some(fe) = full.edge_between(mirror(a), mirror(b)) {
            out.set_cut(fe, Some(2 * owner + 1));
        }
    }
    for c in chains(full, &plane_edges(split, full)) {
        let closed = c.len() > 2 && c[0] == c[c.len() - 1];
        out.insert_path(c, closed, PathOrigin::Symmetry);
    }
    out.symmetry = Some(split.plane);
    out
}

/// Re-runs removal and darts on plane-seam segments only.
pub fn reduce_symmetry_seam(layout: &mut Layout, checker: &mut PatchChecker) -> (usize, Vec<DartRecord>) {
    let on_plane: Vec<bool> = layout.paths.iter().map(|p| p.origin == PathOrigin::Symmetry).collect();
    let removed = remove_redundant(layout, checker, |s| on_plane[s.path]);
    let darts = create_darts(layout, checker, |s| on_plane[s.path]);
    (removed, darts)
}
