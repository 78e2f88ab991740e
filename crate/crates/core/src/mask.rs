//! Binary masks stored as row-major run-length counts.
//!
//! The canonical form starts with a run of unset pixels (possibly of length
//! zero) and then alternates set/unset runs, none of which is empty. Pixel
//! `(row, col)` lives at linear index `row * width + col`.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MaskError {
    #[error("run lengths sum to {actual}, expected {expected} ({width}x{height})")]
    RunSumMismatch {
        width: u32,
        height: u32,
        expected: u64,
        actual: u64,
    },
    #[error("mask dimensions must be positive, got {width}x{height}")]
    EmptyGrid { width: u32, height: u32 },
    #[error("dimension mismatch: {a_width}x{a_height} vs {b_width}x{b_height}")]
    DimensionMismatch {
        a_width: u32,
        a_height: u32,
        b_width: u32,
        b_height: u32,
    },
    #[error(
        "patch grid {grid_w}x{grid_h} of size {patch_size} does not cover a {width}x{height} mask"
    )]
    GridTooSmall {
        patch_size: u32,
        grid_w: u32,
        grid_h: u32,
        width: u32,
        height: u32,
    },
}

/// Dense row-major bit grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitGrid {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BitGrid {
    pub fn new(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width as usize * height as usize],
        }
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Self {
        assert_eq!(
            bits.len(),
            width as usize * height as usize,
            "bit count must equal width * height"
        );
        Self {
            width,
            height,
            bits,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, row: u32, col: u32) -> bool {
        self.bits[(row * self.width + col) as usize]
    }

    pub fn set(&mut self, row: u32, col: u32, value: bool) {
        self.bits[(row * self.width + col) as usize] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count_ones(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }
}

/// A binary mask over a `width x height` grid in canonical run-length form.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RleMask {
    width: u32,
    height: u32,
    runs: Vec<u32>,
}

impl RleMask {
    /// Builds a mask from raw run lengths, canonicalizing internal zero runs.
    pub fn new(width: u32, height: u32, runs: Vec<u32>) -> Result<Self, MaskError> {
        check_dims(width, height)?;
        let expected = width as u64 * height as u64;
        let actual: u64 = runs.iter().map(|&r| r as u64).sum();
        if actual != expected {
            return Err(MaskError::RunSumMismatch {
                width,
                height,
                expected,
                actual,
            });
        }
        Ok(Self {
            width,
            height,
            runs: canonicalize(&runs),
        })
    }

    pub fn empty(width: u32, height: u32) -> Result<Self, MaskError> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            runs: vec![width * height],
        })
    }

    /// Axis-aligned rectangle covering columns `x0..x1` and rows `y0..y1`
    /// (half-open, clipped to the grid).
    pub fn from_rect(
        width: u32,
        height: u32,
        x0: u32,
        y0: u32,
        x1: u32,
        y1: u32,
    ) -> Result<Self, MaskError> {
        check_dims(width, height)?;
        let (x1, y1) = (x1.min(width), y1.min(height));
        let mut intervals = Vec::new();
        if x0 < x1 && y0 < y1 {
            for row in y0..y1 {
                let start = row as u64 * width as u64 + x0 as u64;
                intervals.push((start, start + (x1 - x0) as u64));
            }
        }
        Ok(Self::from_intervals(width, height, &intervals))
    }

    /// Builds a mask from sorted, non-overlapping `[start, end)` set-pixel
    /// intervals in linear index space. Adjacent intervals are fused.
    pub(crate) fn from_intervals(width: u32, height: u32, intervals: &[(u64, u64)]) -> Self {
        let total = width as u64 * height as u64;
        let mut runs = Vec::with_capacity(intervals.len() * 2 + 1);
        let mut cursor = 0u64;
        let mut pending: Option<(u64, u64)> = None;
        let flush = |start: u64, end: u64, cursor: &mut u64, runs: &mut Vec<u32>| {
            runs.push((start - *cursor) as u32);
            runs.push((end - start) as u32);
            *cursor = end;
        };
        for &(start, end) in intervals {
            if start >= end {
                continue;
            }
            match pending {
                Some((s, e)) if start <= e => pending = Some((s, e.max(end))),
                Some((s, e)) => {
                    flush(s, e, &mut cursor, &mut runs);
                    pending = Some((start, end));
                }
                None => pending = Some((start, end)),
            }
        }
        if let Some((s, e)) = pending {
            flush(s, e, &mut cursor, &mut runs);
        }
        if cursor < total || runs.is_empty() {
            runs.push((total - cursor) as u32);
        }
        Self {
            width,
            height,
            runs,
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn runs(&self) -> &[u32] {
        &self.runs
    }

    pub fn pixel_count(&self) -> u64 {
        self.width as u64 * self.height as u64
    }

    /// Number of set pixels.
    pub fn area(&self) -> u64 {
        self.runs.iter().skip(1).step_by(2).map(|&r| r as u64).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.area() == 0
    }

    /// Set-pixel intervals `[start, end)` in linear index order.
    pub fn intervals(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        let mut cursor = 0u64;
        self.runs.iter().enumerate().filter_map(move |(i, &len)| {
            let start = cursor;
            cursor += len as u64;
            (i % 2 == 1).then_some((start, cursor))
        })
    }

    pub fn same_shape(&self, other: &RleMask) -> Result<(), MaskError> {
        if self.width == other.width && self.height == other.height {
            Ok(())
        } else {
            Err(MaskError::DimensionMismatch {
                a_width: self.width,
                a_height: self.height,
                b_width: other.width,
                b_height: other.height,
            })
        }
    }

    pub fn intersection_area(&self, other: &RleMask) -> Result<u64, MaskError> {
        self.same_shape(other)?;
        let a: Vec<_> = self.intervals().collect();
        let b: Vec<_> = other.intervals().collect();
        let (mut i, mut j, mut total) = (0, 0, 0u64);
        while i < a.len() && j < b.len() {
            let lo = a[i].0.max(b[j].0);
            let hi = a[i].1.min(b[j].1);
            if lo < hi {
                total += hi - lo;
            }
            if a[i].1 < b[j].1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Ok(total)
    }

    /// Pixels set in both masks.
    pub fn intersection(&self, other: &RleMask) -> Result<RleMask, MaskError> {
        self.same_shape(other)?;
        let b: Vec<_> = other.intervals().collect();
        let mut out = Vec::new();
        let mut j = 0;
        for (s, e) in self.intervals() {
            while j < b.len() && b[j].1 <= s {
                j += 1;
            }
            let mut k = j;
            while k < b.len() && b[k].0 < e {
                out.push((s.max(b[k].0), e.min(b[k].1)));
                k += 1;
            }
        }
        Ok(Self::from_intervals(self.width, self.height, &out))
    }

    /// Bounding box `(x1, y1, x2, y2)` in pixel-edge coordinates, so a
    /// full-image mask yields `(0, 0, width, height)`. `None` when empty.
    pub fn bbox(&self) -> Option<(u32, u32, u32, u32)> {
        let w = self.width as u64;
        let mut bounds: Option<(u64, u64, u64, u64)> = None;
        for (start, end) in self.intervals() {
            let first_row = start / w;
            let last_row = (end - 1) / w;
            let (min_col, max_col) = if first_row == last_row {
                (start % w, (end - 1) % w)
            } else {
                (0, w - 1)
            };
            bounds = Some(match bounds {
                None => (min_col, first_row, max_col, last_row),
                Some((x0, y0, x1, y1)) => (
                    x0.min(min_col),
                    y0.min(first_row),
                    x1.max(max_col),
                    y1.max(last_row),
                ),
            });
        }
        bounds.map(|(x0, y0, x1, y1)| (x0 as u32, y0 as u32, x1 as u32 + 1, y1 as u32 + 1))
    }
}

fn check_dims(width: u32, height: u32) -> Result<(), MaskError> {
    if width == 0 || height == 0 {
        return Err(MaskError::EmptyGrid { width, height });
    }
    Ok(())
}

/// Drops zero-length runs after the first, fusing the neighbours they separated.
fn canonicalize(runs: &[u32]) -> Vec<u32> {
    let mut out: Vec<u32> = vec![0];
    // parity of out.last(): even index = unset run
    for (i, &len) in runs.iter().enumerate() {
        if len == 0 {
            continue;
        }
        let bit = i % 2;
        if (out.len() - 1) % 2 == bit {
            *out.last_mut().unwrap() += len;
        } else {
            out.push(len);
        }
    }
    out
}

pub fn rle_decode(mask: &RleMask) -> BitGrid {
    let mut grid = BitGrid::new(mask.width, mask.height);
    for (start, end) in mask.intervals() {
        for idx in start..end {
            grid.bits[idx as usize] = true;
        }
    }
    grid
}

pub fn rle_encode(grid: &BitGrid) -> RleMask {
    assert!(
        grid.width > 0 && grid.height > 0,
        "grid dimensions must be positive"
    );
    let mut runs = Vec::new();
    let mut current = false;
    let mut len = 0u32;
    for &bit in &grid.bits {
        if bit != current {
            runs.push(len);
            len = 0;
            current = bit;
        }
        len += 1;
    }
    runs.push(len);
    RleMask {
        width: grid.width,
        height: grid.height,
        runs,
    }
}

/// Intersection over union; 0 when both masks are empty.
pub fn iou(a: &RleMask, b: &RleMask) -> Result<f64, MaskError> {
    let inter = a.intersection_area(b)?;
    let union = a.area() + b.area() - inter;
    if union == 0 {
        return Ok(0.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Square patch tiling of an image; the last row/column may extend past the
/// image, and those padding pixels count as unset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGrid {
    pub patch_size: u32,
    pub grid_w: u32,
    pub grid_h: u32,
}

impl PatchGrid {
    /// Smallest grid of `patch_size` patches covering a `width x height` image.
    pub fn covering(width: u32, height: u32, patch_size: u32) -> Self {
        assert!(patch_size > 0, "patch size must be positive");
        Self {
            patch_size,
            grid_w: width.div_ceil(patch_size),
            grid_h: height.div_ceil(patch_size),
        }
    }

    pub fn len(&self) -> usize {
        self.grid_w as usize * self.grid_h as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Fraction of each patch covered by the mask, row-major over the patch grid.
pub fn patch_coverage(mask: &RleMask, grid: &PatchGrid) -> Result<Vec<f64>, MaskError> {
    let ps = grid.patch_size as u64;
    if grid.patch_size == 0
        || ps * (grid.grid_w as u64) < mask.width as u64
        || ps * (grid.grid_h as u64) < mask.height as u64
    {
        return Err(MaskError::GridTooSmall {
            patch_size: grid.patch_size,
            grid_w: grid.grid_w,
            grid_h: grid.grid_h,
            width: mask.width,
            height: mask.height,
        });
    }
    let w = mask.width as u64;
    let mut counts = vec![0u64; grid.len()];
    for (start, end) in mask.intervals() {
        let mut idx = start;
        while idx < end {
            let row = idx / w;
            let col = idx % w;
            let row_end = (row + 1) * w;
            let seg_end = end.min(row_end);
            // split the in-row segment at patch boundaries
            let mut c = col;
            let last = col + (seg_end - idx);
            while c < last {
                let patch_col = c / ps;
                let patch_end = ((patch_col + 1) * ps).min(last);
                let cell = (row / ps) * grid.grid_w as u64 + patch_col;
                counts[cell as usize] += patch_end - c;
                c = patch_end;
            }
            idx = seg_end;
        }
    }
    let area = (ps * ps) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / area).collect())
}

/// A classed, confidence-scored mask as emitted by a segmentation model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredMask {
    pub class_id: u32,
    pub confidence: f64,
    pub mask: RleMask,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeResult {
    /// Pairwise-disjoint, nonempty merged masks.
    pub masks: Vec<ScoredMask>,
    /// Input index to output index; `None` when the input's group ended up empty.
    pub remap: Vec<Option<usize>>,
}

/// Merges duplicate masks into a pairwise-disjoint set.
///
/// Masks of the same class whose IoU exceeds `merge_threshold` are joined
/// (transitively) into one group whose mask is the union of its members.
/// Pixels still claimed by several groups go to the group with the highest
/// member confidence, ties to the group whose first member comes earlier.
/// Groups left without pixels are dropped.
pub fn merge_masks(masks: &[ScoredMask], merge_threshold: f64) -> Result<MergeResult, MaskError> {
    let n = masks.len();
    if n == 0 {
        return Ok(MergeResult {
            masks: Vec::new(),
            remap: Vec::new(),
        });
    }
    for m in &masks[1..] {
        masks[0].mask.same_shape(&m.mask)?;
    }
    let (width, height) = (masks[0].mask.width, masks[0].mask.height);

    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut overlapping = false;
    for i in 0..n {
        for j in (i + 1)..n {
            let inter = masks[i].mask.intersection_area(&masks[j].mask)?;
            if inter == 0 {
                continue;
            }
            overlapping = true;
            if masks[i].class_id != masks[j].class_id {
                continue;
            }
            let union = masks[i].mask.area() + masks[j].mask.area() - inter;
            if inter as f64 / union as f64 > merge_threshold {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    // keep the lower index as root so groups are ordered by first member
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }

    // group index follows the order of each group's first member
    let mut group_of = vec![usize::MAX; n];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        if group_of[root] == usize::MAX {
            group_of[root] = members.len();
            members.push(Vec::new());
        }
        group_of[i] = group_of[root];
        members[group_of[i]].push(i);
    }

    let group_conf: Vec<f64> = members
        .iter()
        .map(|ms| {
            ms.iter()
                .map(|&i| masks[i].confidence)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();

    let group_masks: Vec<RleMask> = if !overlapping {
        members.iter().map(|ms| masks[ms[0]].mask.clone()).collect()
    } else {
        let mut priority: Vec<usize> = (0..members.len()).collect();
        priority.sort_by(|&a, &b| group_conf[b].total_cmp(&group_conf[a]).then(a.cmp(&b)));
        let mut owner = vec![u32::MAX; width as usize * height as usize];
        for &g in &priority {
            for &i in &members[g] {
                for (start, end) in masks[i].mask.intervals() {
                    for px in &mut owner[start as usize..end as usize] {
                        if *px == u32::MAX {
                            *px = g as u32;
                        }
                    }
                }
            }
        }
        let mut intervals: Vec<Vec<(u64, u64)>> = vec![Vec::new(); members.len()];
        let mut idx = 0usize;
        while idx < owner.len() {
            let g = owner[idx];
            let start = idx;
            while idx < owner.len() && owner[idx] == g {
                idx += 1;
            }
            if g != u32::MAX {
                intervals[g as usize].push((start as u64, idx as u64));
            }
        }
        intervals
            .iter()
            .map(|iv| RleMask::from_intervals(width, height, iv))
            .collect()
    };

    let mut out = Vec::with_capacity(members.len());
    let mut group_slot = vec![None; members.len()];
    for (g, mask) in group_masks.into_iter().enumerate() {
        if mask.is_empty() {
            continue;
        }
        group_slot[g] = Some(out.len());
        out.push(ScoredMask {
            class_id: masks[members[g][0]].class_id,
            confidence: group_conf[g],
            mask,
        });
    }
    let remap = (0..n).map(|i| group_slot[group_of[i]]).collect();
    Ok(MergeResult { masks: out, remap })
}
