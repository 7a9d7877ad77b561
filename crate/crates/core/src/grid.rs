//! Continuous positions and small grid helpers shared by every module.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

/// A position in continuous cell units. Cell `(i, j)` covers `[i, i+1) x [j, j+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    /// Center of cell `(cx, cy)`.
    pub fn cell_center(cx: usize, cy: usize) -> Self {
        Self::new(cx as f64 + 0.5, cy as f64 + 0.5)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Cell containing this point, or `None` outside a `width x height` grid.
    pub fn cell(&self, width: usize, height: usize) -> Option<(usize, usize)> {
        if !(self.x >= 0.0 && self.y >= 0.0) {
            return None;
        }
        let (cx, cy) = (self.x.floor() as usize, self.y.floor() as usize);
        (cx < width && cy < height).then_some((cx, cy))
    }

    /// Rounds both coordinates to 6 fractional digits so a decimal text
    /// round trip reproduces the value bit-exactly.
    pub fn quantized(&self) -> Self {
        let q = |v: f64| (v * 1e6).round() / 1e6;
        Self::new(q(self.x), q(self.y))
    }
}

impl From<[f64; 2]> for Point {
    fn from(v: [f64; 2]) -> Self {
        Self::new(v[0], v[1])
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

/// Regularly spaced points on segment `ab`, endpoints included:
/// `max(2, ceil(|ab| / interval) + 1)` of them.
pub fn segment_samples(a: Point, b: Point, interval: f64) -> Vec<Point> {
    let len = a.distance(&b);
    let m = ((len / interval).ceil() as usize + 1).max(2);
    let last = (m - 1) as f64;
    (0..m)
        .map(|i| {
            let t = i as f64 / last;
            Point::new(a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t)
        })
        .collect()
}

/// 4-connected flood fill from `seed`; returns the reached mask (row-major).
pub fn flood_fill(
    width: usize,
    height: usize,
    seed: (usize, usize),
    passable: impl Fn(usize, usize) -> bool,
) -> Vec<bool> {
    let mut seen = vec![false; width * height];
    if seed.0 >= width || seed.1 >= height || !passable(seed.0, seed.1) {
        return seen;
    }
    let mut queue = VecDeque::from([seed]);
    seen[seed.1 * width + seed.0] = true;
    while let Some((x, y)) = queue.pop_front() {
        let neighbors = [
            (x.wrapping_sub(1), y),
            (x + 1, y),
            (x, y.wrapping_sub(1)),
            (x, y + 1),
        ];
        for (nx, ny) in neighbors {
            if nx < width && ny < height && !seen[ny * width + nx] && passable(nx, ny) {
                seen[ny * width + nx] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    seen
}

/// Whether `b` is reachable from `a` through cells accepted by `passable`.
pub fn cells_connected(
    width: usize,
    height: usize,
    a: (usize, usize),
    b: (usize, usize),
    passable: impl Fn(usize, usize) -> bool,
) -> bool {
    let reached = flood_fill(width, height, a, passable);
    b.0 < width && b.1 < height && reached[b.1 * width + b.0]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_sample_count() {
        let s = segment_samples(Point::new(0.0, 0.0), Point::new(2.0, 0.0), 0.5);
        assert_eq!(s.len(), 5);
        assert_eq!(s[4], Point::new(2.0, 0.0));
        let s = segment_samples(Point::new(0.0, 0.0), Point::new(0.1, 0.0), 0.5);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn point_cell_bounds() {
        assert_eq!(Point::new(3.9, 0.0).cell(4, 4), Some((3, 0)));
        assert_eq!(Point::new(4.0, 0.0).cell(4, 4), None);
        assert_eq!(Point::new(-0.1, 0.0).cell(4, 4), None);
        assert_eq!(Point::new(f64::NAN, 0.0).cell(4, 4), None);
    }

    #[test]
    fn flood_fill_respects_walls() {
        // column 2 is blocked
        let passable = |x: usize, _y: usize| x != 2;
        assert!(!cells_connected(5, 5, (0, 0), (4, 4), passable));
        assert!(cells_connected(5, 5, (0, 0), (1, 4), passable));
    }

    #[test]
    fn quantized_round_trips_through_text() {
        let p = Point::new(12.345_678_912_3, 0.1 + 0.2).quantized();
        let back: f64 = format!("{:.6}", p.x).parse().unwrap();
        assert_eq!(back.to_bits(), p.x.to_bits());
    }
}
