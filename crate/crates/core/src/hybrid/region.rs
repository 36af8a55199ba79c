use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::segment::{Scale, Segment};
use crate::error::{Error, Result};

/// Axis-aligned box `[lo − margin, hi + margin]` in state space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FastRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub label: String,
    pub margin: Vec<f64>,
}

impl FastRegion {
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .enumerate()
            .all(|(k, v)| *v >= self.lo[k] - self.margin[k] && *v <= self.hi[k] + self.margin[k])
    }

    /// Closed padded boxes touch or overlap.
    pub fn overlaps(&self, other: &FastRegion) -> bool {
        (0..self.lo.len()).all(|k| {
            self.lo[k] - self.margin[k] <= other.hi[k] + other.margin[k]
                && other.lo[k] - other.margin[k] <= self.hi[k] + self.margin[k]
        })
    }

    fn union(&self, other: &FastRegion) -> FastRegion {
        let zip = |a: &[f64], b: &[f64], f: fn(f64, f64) -> f64| -> Vec<f64> {
            a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()
        };
        FastRegion {
            lo: zip(&self.lo, &other.lo, f64::min),
            hi: zip(&self.hi, &other.hi, f64::max),
            label: self.label.clone(),
            margin: zip(&self.margin, &other.margin, f64::max),
        }
    }

    /// Componentwise bounding box of the given rows.
    pub fn bounding(states: &DMatrix<f64>, rows: impl IntoIterator<Item = usize>, margin: &[f64], label: String) -> Option<Self> {
        let d = states.ncols();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut any = false;
        for r in rows {
            any = true;
            for k in 0..d {
                lo[k] = lo[k].min(states[(r, k)]);
                hi[k] = hi[k].max(states[(r, k)]);
            }
        }
        any.then(|| FastRegion {
            lo,
            hi,
            label,
            margin: margin.to_vec(),
        })
    }
}

/// `fraction` of each column's range.
pub fn default_margin(states: &DMatrix<f64>, fraction: f64) -> Vec<f64> {
    states
        .column_iter()
        .map(|c| fraction * (c.max() - c.min()))
        .collect()
}

/// Merged boxes together with the input segments each one absorbed.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionSet {
    pub regions: Vec<FastRegion>,
    /// `members[k]` lists indices into the segment slice merged into region
    /// `k`, ascending.
    pub members: Vec<Vec<usize>>,
}

/// Boxes the fast segments and merges overlapping boxes until none
/// overlap. Regions are ordered by their earliest sample and labelled
/// `fast_1`, `fast_2`, ...
pub fn merge_fast_regions(states: &DMatrix<f64>, segments: &[Segment], margin: &[f64]) -> Result<RegionSet> {
    if margin.len() != states.ncols() {
        return Err(Error::Dimension {
            context: "region margin",
            expected: states.ncols(),
            got: margin.len(),
        });
    }
    if margin.iter().any(|m| !(*m >= 0.0)) {
        return Err(Error::invalid("region margins must be non-negative"));
    }
    let mut boxes: Vec<(FastRegion, Vec<usize>)> = segments
        .iter()
        .enumerate()
        .filter(|(_, s)| s.scale == Scale::Fast && !s.is_empty())
        .filter_map(|(i, s)| {
            FastRegion::bounding(states, s.start..s.end, margin, String::new()).map(|b| (b, vec![i]))
        })
        .collect();
    'merge: loop {
        for i in 0..boxes.len() {
            for j in (i + 1)..boxes.len() {
                if boxes[i].0.overlaps(&boxes[j].0) {
                    let (bj, mj) = boxes.remove(j);
                    boxes[i].0 = boxes[i].0.union(&bj);
                    boxes[i].1.extend(mj);
                    continue 'merge;
                }
            }
        }
        break;
    }
    for b in &mut boxes {
        b.1.sort_unstable();
    }
    boxes.sort_by_key(|(_, m)| m.iter().map(|&i| segments[i].start).min());
    let (mut regions, members): (Vec<FastRegion>, Vec<Vec<usize>>) = boxes.into_iter().unzip();
    for (k, r) in regions.iter_mut().enumerate() {
        r.label = format!("fast_{}", k + 1);
    }
    Ok(RegionSet { regions, members })
}

/// Fast-scale regions of a segmented trajectory.
pub fn build_fast_regions(states: &DMatrix<f64>, segments: &[Segment], margin: &[f64]) -> Result<Vec<FastRegion>> {
    Ok(merge_fast_regions(states, segments, margin)?.regions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(start: usize, end: usize) -> Segment {
        Segment {
            scale: Scale::Fast,
            start,
            end,
        }
    }

    #[test]
    fn single_segment_exact_box() {
        let x = DMatrix::from_row_slice(3, 2, &[0.0, 1.0, 2.0, -1.0, 1.0, 0.5]);
        let r = build_fast_regions(&x, &[seg(0, 3)], &[0.0, 0.0]).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].lo, vec![0.0, -1.0]);
        assert_eq!(r[0].hi, vec![2.0, 1.0]);
        assert_eq!(r[0].label, "fast_1");
    }

    #[test]
    fn margin_triggers_merge() {
        let x = DMatrix::from_row_slice(4, 1, &[0.0, 1.0, 1.1, 2.0]);
        let segs = [seg(0, 2), seg(2, 4)];
        assert_eq!(build_fast_regions(&x, &segs, &[0.0]).unwrap().len(), 2);
        let merged = build_fast_regions(&x, &segs, &[0.06]).unwrap();
        assert_eq!(merged.len(), 1);
        assert_eq!((merged[0].lo[0], merged[0].hi[0]), (0.0, 2.0));
    }

    #[test]
    fn transitive_merge_through_union() {
        // Boxes A and C are disjoint, B overlaps both.
        let x = DMatrix::from_row_slice(6, 2, &[0.0, 0.0, 1.0, 1.0, 0.5, 0.5, 2.5, 0.8, 2.0, 0.2, 3.0, 0.9]);
        let segs = [seg(0, 2), seg(4, 6), seg(2, 4)];
        let set = merge_fast_regions(&x, &segs, &[0.0, 0.0]).unwrap();
        assert_eq!(set.regions.len(), 1);
        assert_eq!(set.members, vec![vec![0, 1, 2]]);
    }
}
