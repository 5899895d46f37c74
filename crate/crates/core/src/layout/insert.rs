//! Greedy insertion: keep cutting failing patches with the candidate
//! farthest (in stratified distance) from everything inserted so far.
//! Equally far candidates go to the one passing closest to the worst
//! stretched face.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::candidates::{dedup_candidates, local_candidates, Candidate};
use super::check::PatchChecker;
use super::{group_labels, Layout, LayoutContext};
use crate::error::LayoutError;
use crate::mesh::Vec3;
use crate::param::measure;
use crate::trace::{node, stratified_distances, tangential_intersection, TracePath};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct InsertReport {
    pub inserted: usize,
    pub mandatory: usize,
    /// Refinement rounds that traced per-patch candidates.
    pub rounds: usize,
    pub candidates: usize,
}

fn distance_field(ctx: &LayoutContext, p: &TracePath) -> Vec<f64> {
    let seeds: Vec<usize> = p
        .vertices
        .iter()
        .zip(&p.dirs)
        .flat_map(|(&v, &k)| [node(v, k), node(v, k + 2)])
        .collect();
    stratified_distances(&ctx.graph, &seeds)
}

/// Some uncut interior edge of the path has both faces in one patch whose
/// label is in `failing`.
fn splits_failing(layout: &Layout, labels: &[usize], failing: &HashSet<usize>, p: &TracePath) -> bool {
    let mesh = &layout.mesh;
    p.steps().any(|(a, b)| {
        let Some(e) = mesh.edge_between(a, b) else { return false };
        if layout.is_cut(e) {
            return false;
        }
        match mesh.edge_faces(e) {
            [Some(f), Some(g)] => labels[f] == labels[g] && failing.contains(&labels[f]),
            _ => false,
        }
    })
}

/// Inserts mandatory candidates, then greedily more until every patch
/// passes. When no candidate helps, failing patches are re-sampled on
/// their own (up to `max_depth` rounds).
pub fn insert_until_goals(
    layout: &mut Layout,
    ctx: &LayoutContext,
    candidates: Vec<Candidate>,
    checker: &mut PatchChecker,
) -> Result<InsertReport, LayoutError> {
    let cap = ctx.graph.diagonal();
    let mut pool = candidates;
    let mut used = vec![false; pool.len()];
    let mut inserted: Vec<TracePath> = Vec::new();
    let mut fields: Vec<Vec<f64>> = Vec::new();
    let mut report = InsertReport {
        candidates: pool.len(),
        ..Default::default()
    };
    let insert = |layout: &mut Layout, c: &Candidate, inserted: &mut Vec<TracePath>, fields: &mut Vec<Vec<f64>>| {
        layout.insert_path(c.path.vertices.clone(), c.path.closed, c.origin);
        fields.push(distance_field(ctx, &c.path));
        inserted.push(c.path.clone());
    };
    for i in 0..pool.len() {
        if pool[i].mandatory {
            used[i] = true;
            report.mandatory += 1;
            insert(layout, &pool[i], &mut inserted, &mut fields);
        }
    }
    loop {
        let labels = layout.patch_labels();
        let patches = group_labels(&labels);
        let checks = checker.check_many(layout, &patches);
        let failing: HashSet<usize> = (0..patches.len()).filter(|&i| !checks[i].passes()).collect();
        if failing.is_empty() {
            return Ok(report);
        }
        // worst-stretched face of each flattened failing patch, for breaking ties
        let hot: Vec<Vec3> = failing
            .iter()
            .filter_map(|&i| {
                let chart = checks[i].chart.as_ref()?;
                let m = measure(chart, &ctx.options.weights);
                Some(layout.mesh.centroid(chart.source_face[m.max_face]))
            })
            .collect();
        let near_hot = |p: &TracePath| {
            let pos = layout.mesh.vertices();
            p.vertices
                .iter()
                .flat_map(|&v| hot.iter().map(move |h| (pos[v] - h).norm()))
                .fold(f64::INFINITY, f64::min)
        };
        let tie = 1e-9 * cap;
        let mut best: Option<(f64, f64, usize)> = None;
        for (i, c) in pool.iter().enumerate() {
            if used[i] || !splits_failing(layout, &labels, &failing, &c.path) {
                continue;
            }
            if inserted.iter().any(|p| tangential_intersection(&c.path, p)) {
                continue;
            }
            let nodes = c.path.nodes();
            let score = fields
                .iter()
                .map(|d| nodes.iter().map(|&n| d[n].min(cap)).sum::<f64>() / nodes.len() as f64)
                .fold(cap, f64::min);
            match best {
                Some((s, _, _)) if score < s - tie => {}
                Some((s, d, _)) if score <= s + tie => {
                    let dn = near_hot(&c.path);
                    if dn < d {
                        best = Some((score.max(s), dn, i));
                    }
                }
                _ => best = Some((score, near_hot(&c.path), i)),
            }
        }
        if let Some((_, _, i)) = best {
            used[i] = true;
            report.inserted += 1;
            let c = pool[i].clone();
            insert(layout, &c, &mut inserted, &mut fields);
            continue;
        }
        let mut failing_list: Vec<usize> = failing.iter().copied().collect();
        failing_list.sort_unstable();
        let describe = || LayoutError::Unsatisfiable {
            patches: failing_list
                .iter()
                .map(|&i| {
                    let why = checks[i].failure.as_ref().map(|f| f.to_string()).unwrap_or_default();
                    format!("patch {i} ({} faces): {why}", patches[i].len())
                })
                .collect(),
        };
        if report.rounds >= ctx.options.max_depth {
            return Err(describe());
        }
        report.rounds += 1;
        let before = pool.len();
        let mut fresh = Vec::new();
        for &i in &failing_list {
            let seed = ctx.options.seed.wrapping_add(1000 * report.rounds as u64 + i as u64);
            fresh.extend(local_candidates(layout, ctx, &patches[i], seed));
        }
        // keep only those not already covered by the pool
        let all = dedup_candidates(pool.iter().cloned().chain(fresh).collect(), ctx.options.dedup_overlap);
        let mut added = 0;
        for c in all {
            if !pool.contains(&c) {
                pool.push(c);
                used.push(false);
                added += 1;
            }
        }
        report.candidates += added;
        if pool.len() == before {
            return Err(describe());
        }
    }
}
