use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sindy::TrimResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    Slow,
    Fast,
}

/// Maximal run of same-scale samples, `start..end` (end exclusive).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub scale: Scale,
    pub start: usize,
    pub end: usize,
}

impl Segment {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

fn runs(fast: &[bool]) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::new();
    for (i, &f) in fast.iter().enumerate() {
        let scale = if f { Scale::Fast } else { Scale::Slow };
        match out.last_mut() {
            Some(s) if s.scale == scale => s.end = i + 1,
            _ => out.push(Segment {
                scale,
                start: i,
                end: i + 1,
            }),
        }
    }
    out
}

/// Splits a trimmed trajectory into alternating slow and fast runs.
///
/// Runs shorter than `min_run` are relabelled to match their neighbours,
/// shortest (then earliest) first, until every run is long enough or a
/// single run remains.
pub fn segment_trajectory(sample_count: usize, trim: &TrimResult, min_run: usize) -> Result<Vec<Segment>> {
    if trim.len() != sample_count {
        return Err(Error::Dimension {
            context: "trim mask length vs samples",
            expected: sample_count,
            got: trim.len(),
        });
    }
    let mut fast = trim.trim_mask.clone();
    loop {
        let segs = runs(&fast);
        if segs.len() <= 1 {
            return Ok(segs);
        }
        let shortest = segs
            .iter()
            .enumerate()
            .filter(|(_, s)| s.len() < min_run)
            .min_by_key(|(i, s)| (s.len(), *i));
        match shortest {
            None => return Ok(segs),
            Some((_, s)) => {
                for f in &mut fast[s.start..s.end] {
                    *f = !*f;
                }
            }
        }
    }
}

/// Per-sample scale implied by a segmentation.
pub fn segment_mask(segments: &[Segment], sample_count: usize) -> Vec<bool> {
    let mut fast = vec![false; sample_count];
    for s in segments.iter().filter(|s| s.scale == Scale::Fast) {
        fast[s.start..s.end].iter_mut().for_each(|f| *f = true);
    }
    fast
}
