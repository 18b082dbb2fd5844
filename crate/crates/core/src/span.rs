//! Horizontal pixel spans and interval arithmetic.
//!
//! A [`Span`] is the horizontal extent `[left, right]` of a vehicle in image
//! coordinates. All occupancy math in this crate is one-dimensional, so this
//! small type carries most of it: clipping, union length, and interval IoU.

use serde::{Deserialize, Serialize};

/// Ordered horizontal extent in pixels. `right >= left` always holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "(f64, f64)", into = "(f64, f64)")]
pub struct Span {
    left: f64,
    right: f64,
}

impl Span {
    pub fn new(left: f64, right: f64) -> Result<Self, String> {
        if !left.is_finite() || !right.is_finite() {
            return Err(format!("span bounds must be finite, got [{left}, {right}]"));
        }
        if right < left {
            return Err(format!("span right ({right}) < left ({left})"));
        }
        Ok(Span { left, right })
    }

    pub fn left(&self) -> f64 {
        self.left
    }

    pub fn right(&self) -> f64 {
        self.right
    }

    pub fn width(&self) -> f64 {
        self.right - self.left
    }

    /// Intersection with `[lo, hi]`, or `None` when disjoint.
    pub fn clip(&self, lo: f64, hi: f64) -> Option<Span> {
        let left = self.left.max(lo);
        let right = self.right.min(hi);
        if right <= left {
            None
        } else {
            Some(Span { left, right })
        }
    }

    /// Both bounds rounded to the nearest integer pixel.
    pub fn rounded(&self) -> (i64, i64) {
        let left = self.left.round() as i64;
        let mut right = self.right.round() as i64;
        if right < left {
            right = left;
        }
        (left, right)
    }

    /// Horizontal intersection-over-union. Disjoint spans score 0.
    pub fn iou(&self, other: &Span) -> f64 {
        let inter = (self.right.min(other.right) - self.left.max(other.left)).max(0.0);
        let union = self.width() + other.width() - inter;
        if union <= 0.0 {
            // Both spans degenerate; count them equal only at the same point.
            if (self.left - other.left).abs() == 0.0 {
                1.0
            } else {
                0.0
            }
        } else {
            inter / union
        }
    }
}

impl TryFrom<(f64, f64)> for Span {
    type Error = String;

    fn try_from((left, right): (f64, f64)) -> Result<Self, Self::Error> {
        Span::new(left, right)
    }
}

impl From<Span> for (f64, f64) {
    fn from(s: Span) -> (f64, f64) {
        (s.left, s.right)
    }
}

/// Total length covered by the union of `spans`. Overlaps count once.
pub fn union_length(spans: &[Span]) -> f64 {
    if spans.is_empty() {
        return 0.0;
    }
    let mut sorted: Vec<Span> = spans.to_vec();
    sorted.sort_by(|a, b| a.left.total_cmp(&b.left));
    let mut total = 0.0;
    let mut cur_left = sorted[0].left;
    let mut cur_right = sorted[0].right;
    for s in &sorted[1..] {
        if s.left <= cur_right {
            cur_right = cur_right.max(s.right);
        } else {
            total += cur_right - cur_left;
            cur_left = s.left;
            cur_right = s.right;
        }
    }
    total + (cur_right - cur_left)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn span(l: f64, r: f64) -> Span {
        Span::new(l, r).unwrap()
    }

    #[test]
    fn rejects_inverted() {
        assert!(Span::new(10.0, 5.0).is_err());
        assert!(Span::new(f64::NAN, 5.0).is_err());
    }

    #[test]
    fn union_merges_overlaps() {
        let spans = [span(0.0, 10.0), span(5.0, 20.0), span(30.0, 40.0)];
        assert_eq!(union_length(&spans), 30.0);
    }

    #[test]
    fn iou_basic() {
        assert_eq!(span(0.0, 10.0).iou(&span(0.0, 10.0)), 1.0);
        assert_eq!(span(0.0, 10.0).iou(&span(20.0, 30.0)), 0.0);
        let v = span(0.0, 10.0).iou(&span(5.0, 15.0));
        assert!((v - 5.0 / 15.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn union_is_permutation_invariant(mut xs in proptest::collection::vec((0.0f64..1000.0, 0.0f64..200.0), 0..12)) {
            let spans: Vec<Span> = xs.iter().map(|&(l, w)| span(l, l + w)).collect();
            let forward = union_length(&spans);
            xs.reverse();
            let spans_rev: Vec<Span> = xs.iter().map(|&(l, w)| span(l, l + w)).collect();
            let backward = union_length(&spans_rev);
            prop_assert!((forward - backward).abs() < 1e-9);
        }

        #[test]
        fn union_monotone_under_insertion(xs in proptest::collection::vec((0.0f64..1000.0, 0.0f64..200.0), 1..12)) {
            let spans: Vec<Span> = xs.iter().map(|&(l, w)| span(l, l + w)).collect();
            let all = union_length(&spans);
            let fewer = union_length(&spans[1..]);
            prop_assert!(all >= fewer - 1e-9);
        }

        #[test]
        fn union_invariant_under_split(l in 0.0f64..500.0, w in 1.0f64..100.0, cut in 0.1f64..0.9) {
            let whole = span(l, l + w);
            let mid = l + w * cut;
            let parts = [span(l, mid), span(mid, l + w)];
            prop_assert!((union_length(&[whole]) - union_length(&parts)).abs() < 1e-9);
        }
    }
}
