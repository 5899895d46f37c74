//! Reverse-order removal of segments that are no longer needed.

use std::collections::{BTreeSet, HashSet};

use super::check::PatchChecker;
use super::{group_labels, Layout, Segment};

/// Patches (after the current cut state) touching any of `edges`.
pub(crate) fn affected_patches(layout: &Layout, edges: &[usize]) -> Vec<Vec<usize>> {
    let labels = layout.patch_labels();
    let wanted: BTreeSet<usize> = edges
        .iter()
        .flat_map(|&e| layout.mesh.edge_faces(e))
        .flatten()
        .map(|f| labels[f])
        .collect();
    let all = group_labels(&labels);
    wanted.into_iter().map(|l| all[l].clone()).collect()
}

/// Removes segments, last inserted first, whenever the fused patches still
/// pass. A removal that would leave another cut ending in mid-surface (a
/// T-junction stem) is skipped; the dart pass deals with those. After each
/// removal segments are recomputed, since chains may fuse.
pub fn remove_redundant(layout: &mut Layout, checker: &mut PatchChecker, filter: impl Fn(&Segment) -> bool) -> usize {
    let mut tried: HashSet<Vec<usize>> = HashSet::new();
    let mut removed = 0;
    'pass: loop {
        let segments = layout.segments();
        for seg in segments.iter().rev() {
            if !filter(seg) {
                continue;
            }
            let mut key = seg.edges.clone();
            key.sort_unstable();
            if !tried.insert(key) {
                continue;
            }
            let ends = [seg.vertices[0], *seg.vertices.last().unwrap()];
            let saved = layout.uncut(&seg.edges);
            if ends.iter().any(|&v| layout.is_dangling(v)) {
                layout.restore(&saved);
                continue;
            }
            let patches = affected_patches(layout, &seg.edges);
            if checker.check_many(layout, &patches).iter().all(|c| c.passes()) {
                removed += 1;
                continue 'pass;
            }
            layout.restore(&saved);
        }
        return removed;
    }
}
