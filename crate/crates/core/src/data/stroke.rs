//! Image-to-pen-trajectory conversion: binarise, thin to a one-pixel
//! skeleton (Zhang–Suen), then walk the skeleton greedily.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::data::idx::LabeledImages;
use crate::data::sequence::SequenceDataset;
use crate::error::{ensure, Error, Result};

pub const STROKE_STEPS: usize = 50;
pub const SIDE: usize = 28;
pub const THRESHOLD: f32 = 0.5;

/// Pen coordinates `(row, col) / 27`, zero-padded past `valid_len`.
#[derive(Clone, Debug, PartialEq)]
pub struct StrokeSequence {
    pub points: [[f32; 2]; STROKE_STEPS],
    pub valid_len: usize,
    /// Skeleton length before truncation.
    pub raw_len: usize,
}

/// Stroke dataset together with the per-sample lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct StrokeDataset {
    pub sequences: SequenceDataset,
    pub valid_lengths: Vec<u8>,
    /// Pre-truncation lengths; absent when loaded from a stroke file.
    pub raw_lengths: Option<Vec<usize>>,
}

/// One Zhang–Suen thinning to a fixed point. `grid` is row-major `h × w`.
pub fn zhang_suen(grid: &mut [bool], h: usize, w: usize) {
    let at = |g: &[bool], r: isize, c: isize| -> bool {
        r >= 0 && c >= 0 && (r as usize) < h && (c as usize) < w && g[r as usize * w + c as usize]
    };
    let mut to_clear = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            to_clear.clear();
            for r in 0..h as isize {
                for c in 0..w as isize {
                    if !at(grid, r, c) {
                        continue;
                    }
                    // P2..P9 clockwise from north.
                    let p = [
                        at(grid, r - 1, c),
                        at(grid, r - 1, c + 1),
                        at(grid, r, c + 1),
                        at(grid, r + 1, c + 1),
                        at(grid, r + 1, c),
                        at(grid, r + 1, c - 1),
                        at(grid, r, c - 1),
                        at(grid, r - 1, c - 1),
                    ];
                    let b = p.iter().filter(|&&v| v).count();
                    if !(2..=6).contains(&b) {
                        continue;
                    }
                    let a = (0..8).filter(|&i| !p[i] && p[(i + 1) % 8]).count();
                    if a != 1 {
                        continue;
                    }
                    let (p2, p4, p6, p8) = (p[0], p[2], p[4], p[6]);
                    let ok = if pass == 0 {
                        !(p2 && p4 && p6) && !(p4 && p6 && p8)
                    } else {
                        !(p2 && p4 && p8) && !(p2 && p6 && p8)
                    };
                    if ok {
                        to_clear.push(r as usize * w + c as usize);
                    }
                }
            }
            changed |= !to_clear.is_empty();
            for &i in &to_clear {
                grid[i] = false;
            }
        }
        if !changed {
            break;
        }
    }
}

// 4-neighbours before diagonals; row-major within each ring.
const NEIGHBOURS: [(isize, isize); 8] = [
    (-1, 0),
    (0, -1),
    (0, 1),
    (1, 0),
    (-1, -1),
    (-1, 1),
    (1, -1),
    (1, 1),
];

/// Visits every skeleton pixel once: start at the topmost-leftmost pixel,
/// step to the nearest unvisited 8-neighbour, and when stuck jump to the
/// nearest unvisited pixel (row-major order breaks distance ties).
pub fn trace_skeleton(grid: &[bool], h: usize, w: usize) -> Vec<(usize, usize)> {
    let mut unvisited: Vec<bool> = grid.to_vec();
    let mut remaining = unvisited.iter().filter(|&&v| v).count();
    let mut path = Vec::with_capacity(remaining);
    let Some(start) = unvisited.iter().position(|&v| v) else {
        return path;
    };
    let mut cur = (start / w, start % w);
    loop {
        unvisited[cur.0 * w + cur.1] = false;
        remaining -= 1;
        path.push(cur);
        if remaining == 0 {
            break;
        }
        let step = NEIGHBOURS.iter().find_map(|&(dr, dc)| {
            let (r, c) = (cur.0 as isize + dr, cur.1 as isize + dc);
            (r >= 0
                && c >= 0
                && (r as usize) < h
                && (c as usize) < w
                && unvisited[r as usize * w + c as usize])
                .then_some((r as usize, c as usize))
        });
        cur = match step {
            Some(next) => next,
            None => {
                let mut best = (usize::MAX, (0, 0));
                for (i, _) in unvisited.iter().enumerate().filter(|(_, &v)| v) {
                    let (r, c) = (i / w, i % w);
                    let d = r.abs_diff(cur.0).pow(2) + c.abs_diff(cur.1).pow(2);
                    if d < best.0 {
                        best = (d, (r, c));
                    }
                }
                best.1
            }
        };
    }
    path
}

/// Converts one 28×28 image (values in `[0, 1]`) to a 50-point stroke.
pub fn image_to_stroke(image: &[f32]) -> Result<StrokeSequence> {
    ensure!(
        image.len() == SIDE * SIDE,
        "stroke conversion needs a 28×28 image, got {} pixels",
        image.len()
    );
    let mut grid: Vec<bool> = image.iter().map(|&p| p > THRESHOLD).collect();
    if !grid.iter().any(|&v| v) {
        return Err(Error::EmptyStroke);
    }
    zhang_suen(&mut grid, SIDE, SIDE);
    let path = trace_skeleton(&grid, SIDE, SIDE);
    let span = (SIDE - 1) as f32;
    let mut points = [[0.0f32; 2]; STROKE_STEPS];
    for (dst, &(r, c)) in points.iter_mut().zip(&path) {
        *dst = [r as f32 / span, c as f32 / span];
    }
    Ok(StrokeSequence {
        points,
        valid_len: path.len().min(STROKE_STEPS),
        raw_len: path.len(),
    })
}

/// Converts every image, in parallel, preserving order. Blank images fail
/// the whole conversion.
pub fn to_stroke_dataset(data: &LabeledImages) -> Result<StrokeDataset> {
    ensure!(
        data.rows == SIDE && data.cols == SIDE,
        "stroke conversion needs 28×28 images"
    );
    let strokes: Vec<StrokeSequence> = (0..data.len())
        .into_par_iter()
        .map(|i| image_to_stroke(data.image(i)))
        .collect::<Result<_>>()?;
    let inputs = strokes
        .iter()
        .flat_map(|s| s.points.iter().flat_map(|p| p.iter().copied()))
        .collect();
    Ok(StrokeDataset {
        sequences: SequenceDataset::new(STROKE_STEPS, 2, inputs, data.labels.clone())?,
        valid_lengths: strokes.iter().map(|s| s.valid_len as u8).collect(),
        raw_lengths: Some(strokes.iter().map(|s| s.raw_len).collect()),
    })
}

/// Unit-width histogram of stroke lengths.
pub fn stroke_length_histogram(lengths: &[usize]) -> Result<BTreeMap<usize, usize>> {
    ensure!(
        !lengths.is_empty(),
        "stroke length histogram of an empty set"
    );
    let mut h = BTreeMap::new();
    for &l in lengths {
        *h.entry(l).or_insert(0) += 1;
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blank() -> Vec<f32> {
        vec![0.0; SIDE * SIDE]
    }

    #[test]
    fn blank_image_is_an_error() {
        assert!(matches!(image_to_stroke(&blank()), Err(Error::EmptyStroke)));
        // below threshold counts as blank
        assert!(matches!(
            image_to_stroke(&vec![0.5; 784]),
            Err(Error::EmptyStroke)
        ));
    }

    #[test]
    fn vertical_line_of_twenty() {
        let mut img = blank();
        for r in 4..24 {
            img[r * SIDE + 10] = 1.0;
        }
        let s = image_to_stroke(&img).unwrap();
        assert_eq!(s.valid_len, 20);
        assert_eq!(s.raw_len, 20);
        for (k, p) in s.points.iter().enumerate() {
            if k < 20 {
                assert_eq!(*p, [(4 + k) as f32 / 27.0, 10.0 / 27.0]);
            } else {
                assert_eq!(*p, [0.0, 0.0]);
            }
        }
    }

    #[test]
    fn thick_bar_thins_to_a_line() {
        let mut img = blank();
        for r in 5..20 {
            for c in 12..15 {
                img[r * SIDE + c] = 1.0;
            }
        }
        let mut grid: Vec<bool> = img.iter().map(|&p| p > THRESHOLD).collect();
        zhang_suen(&mut grid, SIDE, SIDE);
        // at most one pixel per row survives in the bar's interior
        for r in 7..18 {
            let n = (0..SIDE).filter(|&c| grid[r * SIDE + c]).count();
            assert!(n <= 1, "row {r} has {n} pixels");
        }
        assert!(grid.iter().filter(|&&v| v).count() >= 10);
    }

    #[test]
    fn long_strokes_truncate_and_jumps_cover_components() {
        let mut img = blank();
        for c in 0..28 {
            img[3 * SIDE + c] = 1.0;
            img[20 * SIDE + c] = 1.0;
        }
        let s = image_to_stroke(&img).unwrap();
        assert_eq!(s.raw_len, 56);
        assert_eq!(s.valid_len, 50);
        assert_eq!(s.points[0], [3.0 / 27.0, 0.0]);
        // after the first line ends at column 27 the walk jumps to the
        // nearest pixel of the second line
        assert_eq!(s.points[28], [20.0 / 27.0, 1.0]);
    }

    #[test]
    fn histogram_counts() {
        let h = stroke_length_histogram(&[20]).unwrap();
        assert_eq!(h.into_iter().collect::<Vec<_>>(), vec![(20, 1)]);
        let h = stroke_length_histogram(&[3, 5, 3, 9]).unwrap();
        assert_eq!(h.values().sum::<usize>(), 4);
        assert_eq!(h[&3], 2);
        assert!(stroke_length_histogram(&[]).is_err());
    }
}
