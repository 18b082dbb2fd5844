//! Track groups: connected components of pairwise-matched detections
//! within the filter memory, plus presence inference and the mode-filtered
//! group location.

use std::collections::BTreeMap;

use crate::error::FilterError;
use crate::span::Span;

/// One member detection of a track group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupMember {
    pub frame: u64,
    pub span: Span,
    pub lot_id: u32,
}

/// Detections matched, transitively, as the same vehicle.
///
/// Members are frame-ordered; two members may share a frame when duplicate
/// detections of one vehicle match each other.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackGroup {
    pub id: usize,
    members: Vec<GroupMember>,
}

impl TrackGroup {
    pub(crate) fn new(id: usize, members: Vec<GroupMember>) -> Self {
        debug_assert!(!members.is_empty());
        debug_assert!(members.windows(2).all(|w| w[0].frame <= w[1].frame));
        TrackGroup { id, members }
    }

    pub fn members(&self) -> &[GroupMember] {
        &self.members
    }

    pub fn first_frame(&self) -> u64 {
        self.members.first().map(|m| m.frame).unwrap_or(0)
    }

    pub fn last_frame(&self) -> u64 {
        self.members.last().map(|m| m.frame).unwrap_or(0)
    }

    /// Majority lot over members; ties go to the smaller lot id.
    pub fn lot_id(&self) -> u32 {
        let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
        for m in &self.members {
            *counts.entry(m.lot_id).or_insert(0) += 1;
        }
        counts
            .iter()
            .max_by_key(|&(id, c)| (*c, std::cmp::Reverse(*id)))
            .map(|(id, _)| *id)
            .expect("group has members")
    }
}

/// Whether the group supports presence at `evaluated_frame`: a member at or
/// before it and a member at or after it. A single member exactly at the
/// evaluated frame satisfies both sides.
pub fn infer_presence(group: &TrackGroup, evaluated_frame: u64) -> bool {
    !group.members.is_empty()
        && group.first_frame() <= evaluated_frame
        && group.last_frame() >= evaluated_frame
}

/// Mode of the group's member spans after integer-pixel rounding.
///
/// Ties between equally frequent spans are broken by the member closest in
/// time to `evaluated_frame`, then by the smaller span.
pub fn group_location(group: &TrackGroup, evaluated_frame: u64) -> Result<(i64, i64), FilterError> {
    if group.members.is_empty() {
        return Err(FilterError::EmptyGroup);
    }
    let mut tally: BTreeMap<(i64, i64), (usize, u64)> = BTreeMap::new();
    for m in &group.members {
        let key = m.span.rounded();
        let dist = m.frame.abs_diff(evaluated_frame);
        let entry = tally.entry(key).or_insert((0, u64::MAX));
        entry.0 += 1;
        entry.1 = entry.1.min(dist);
    }
    let mut best: Option<((i64, i64), (usize, u64))> = None;
    for (span, &(count, dist)) in &tally {
        let better = match &best {
            None => true,
            Some((_, (bc, bd))) => count > *bc || (count == *bc && dist < *bd),
        };
        if better {
            best = Some((*span, (count, dist)));
        }
    }
    Ok(best.expect("non-empty tally").0)
}

/// Union-find over dense indices with path halving and union by size.
pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(count: usize) -> Self {
        UnionFind { parent: (0..count).collect(), size: vec![1; count] }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}
