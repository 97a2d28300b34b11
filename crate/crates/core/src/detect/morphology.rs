//! Binary closing with a square structuring element and 8-connected labelling.

use std::collections::VecDeque;

use super::DetectionMask;

/// Dilation followed by erosion with a `(2r+1)`-square element. Pixels outside the image are
/// ignored, so the closing does not eat into marks touching the border.
pub fn close(mask: &DetectionMask, radius: usize) -> DetectionMask {
    let dilated = square_filter(mask, radius, true);
    square_filter(&dilated, radius, false)
}

/// Separable square max (`dilate`) or min filter over the in-bounds neighbourhood.
fn square_filter(mask: &DetectionMask, r: usize, dilate: bool) -> DetectionMask {
    let (w, h) = (mask.width, mask.height);
    let mut horiz = vec![false; w * h];
    for v in 0..h {
        let row = &mask.marked[v * w..(v + 1) * w];
        for u in 0..w {
            let lo = u.saturating_sub(r);
            let hi = (u + r).min(w - 1);
            horiz[v * w + u] = reduce(dilate, row[lo..=hi].iter().copied());
        }
    }
    let mut out = vec![false; w * h];
    for v in 0..h {
        let lo = v.saturating_sub(r);
        let hi = (v + r).min(h - 1);
        for u in 0..w {
            out[v * w + u] = reduce(dilate, (lo..=hi).map(|y| horiz[y * w + u]));
        }
    }
    DetectionMask {
        width: w,
        height: h,
        marked: out,
    }
}

#[inline]
fn reduce(dilate: bool, mut vals: impl Iterator<Item = bool>) -> bool {
    if dilate {
        vals.any(|b| b)
    } else {
        vals.all(|b| b)
    }
}

/// 8-connected components as sorted lists of linear pixel indices, ordered by first pixel.
pub fn components(mask: &DetectionMask) -> Vec<Vec<usize>> {
    let (w, h) = (mask.width, mask.height);
    let mut seen = vec![false; w * h];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.marked[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(i) = queue.pop_front() {
            comp.push(i);
            let (u, v) = ((i % w) as isize, (i / w) as isize);
            for dv in -1..=1 {
                for du in -1..=1 {
                    let (nu, nv) = (u + du, v + dv);
                    if nu < 0 || nv < 0 || nu >= w as isize || nv >= h as isize {
                        continue;
                    }
                    let j = nv as usize * w + nu as usize;
                    if mask.marked[j] && !seen[j] {
                        seen[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}
