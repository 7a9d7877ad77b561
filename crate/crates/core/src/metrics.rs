//! Success, SPL and DTW between produced and ground-truth paths.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envgen::CostMap;
use crate::grid::{segment_samples, Point};

pub const SUCCESS_THRESHOLD: f64 = 0.5;
pub const CHECK_INTERVAL: f64 = 0.5;
pub const RESAMPLE_COUNT: usize = 64;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty result set")]
    EmptyResultSet,
    #[error("empty point sequence")]
    EmptySequence,
    #[error("path has zero length or fewer than two points")]
    DegeneratePath,
    #[error("ground-truth length must be positive for successful episodes")]
    NonPositiveLength,
}

/// Every point checked along a polyline: segments sampled at `interval`,
/// endpoints included. A single-point path yields that point.
pub fn path_samples(points: &[Point], interval: f64) -> Vec<Point> {
    match points {
        [] => Vec::new(),
        [p] => vec![*p],
        _ => points
            .windows(2)
            .flat_map(|w| segment_samples(w[0], w[1], interval))
            .collect(),
    }
}

/// A path succeeds when it exists and no sample lands on a cell whose
/// ground-truth cost reaches `threshold`.
pub fn check_success(path: Option<&[Point]>, gt: &CostMap, threshold: f64, interval: f64) -> bool {
    match path {
        Some(points) if !points.is_empty() => path_samples(points, interval)
            .iter()
            .all(|&p| gt.at(p) < threshold),
        _ => false,
    }
}

pub fn polyline_length(points: &[Point]) -> f64 {
    points.windows(2).map(|w| w[0].distance(&w[1])).sum()
}

/// Sum of ground-truth cost over the checked samples of a path.
pub fn hidden_cost(points: &[Point], gt: &CostMap, interval: f64) -> f64 {
    path_samples(points, interval).iter().map(|&p| gt.at(p)).sum()
}

/// Sum of ground-truth cost over the path vertices only.
pub fn hidden_node_cost(points: &[Point], gt: &CostMap) -> f64 {
    points.iter().map(|&p| gt.at(p)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Episode {
    pub success: bool,
    pub gt_length: f64,
    pub produced_length: f64,
}

impl Episode {
    /// `S * l / max(p, l)`.
    pub fn spl_term(&self) -> f64 {
        if self.success {
            self.gt_length / self.produced_length.max(self.gt_length)
        } else {
            0.0
        }
    }
}

/// Success weighted by path length, averaged over episodes.
pub fn spl(results: &[Episode]) -> Result<f64, MetricsError> {
    if results.is_empty() {
        return Err(MetricsError::EmptyResultSet);
    }
    if results.iter().any(|e| e.success && !(e.gt_length > 0.0)) {
        return Err(MetricsError::NonPositiveLength);
    }
    Ok(results.iter().map(Episode::spl_term).sum::<f64>() / results.len() as f64)
}

/// Classic DTW with Euclidean point distance.
pub fn dtw(a: &[Point], b: &[Point]) -> Result<f64, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySequence);
    }
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut cur = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for pa in a {
        cur[0] = f64::INFINITY;
        for (j, pb) in b.iter().enumerate() {
            let best = prev[j].min(prev[j + 1]).min(cur[j]);
            cur[j + 1] = pa.distance(pb) + best;
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev[m])
}

/// `count` points at equal arclength spacing, both endpoints included.
pub fn resample_path(points: &[Point], count: usize) -> Result<Vec<Point>, MetricsError> {
    let total = polyline_length(points);
    if points.len() < 2 || !(total > 0.0) || count < 2 {
        return Err(MetricsError::DegeneratePath);
    }
    let mut out = Vec::with_capacity(count);
    let mut seg = 0;
    let mut seg_start = 0.0;
    for i in 0..count {
        if i == count - 1 {
            out.push(*points.last().unwrap());
            break;
        }
        let target = total * i as f64 / (count - 1) as f64;
        loop {
            let len = points[seg].distance(&points[seg + 1]);
            if seg_start + len >= target || seg + 2 == points.len() {
                let t = if len > 0.0 { ((target - seg_start) / len).clamp(0.0, 1.0) } else { 0.0 };
                let (p, q) = (points[seg], points[seg + 1]);
                out.push(Point::new(p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t));
                break;
            }
            seg_start += len;
            seg += 1;
        }
    }
    Ok(out)
}

/// DTW after resampling both paths to [`RESAMPLE_COUNT`] points. Paths of
/// zero length collapse to their single point.
pub fn path_dtw(a: &[Point], b: &[Point]) -> Result<f64, MetricsError> {
    let prep = |p: &[Point]| -> Result<Vec<Point>, MetricsError> {
        match resample_path(p, RESAMPLE_COUNT) {
            Ok(v) => Ok(v),
            Err(_) if !p.is_empty() => Ok(vec![p[0]]),
            Err(_) => Err(MetricsError::EmptySequence),
        }
    };
    dtw(&prep(a)?, &prep(b)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub success: bool,
    pub produced_length: f64,
    pub gt_length: f64,
    pub spl_term: f64,
    /// `None` when no path was produced.
    pub dtw: Option<f64>,
    pub hidden_cost: f64,
    pub hidden_node_cost: f64,
}

/// Scores one produced path (or `None` for NoPath) against the ground truth.
pub fn evaluate(produced: Option<&[Point]>, gt_path: &[Point], gt_cost: &CostMap) -> EvalResult {
    let gt_length = polyline_length(gt_path);
    let success = check_success(produced, gt_cost, SUCCESS_THRESHOLD, CHECK_INTERVAL);
    match produced {
        Some(p) if !p.is_empty() => {
            let produced_length = polyline_length(p);
            let episode = Episode {
                success,
                gt_length,
                produced_length,
            };
            EvalResult {
                success,
                produced_length,
                gt_length,
                spl_term: episode.spl_term(),
                dtw: path_dtw(p, gt_path).ok(),
                hidden_cost: hidden_cost(p, gt_cost, CHECK_INTERVAL),
                hidden_node_cost: hidden_node_cost(p, gt_cost),
            }
        }
        _ => EvalResult {
            success: false,
            produced_length: 0.0,
            gt_length,
            spl_term: 0.0,
            dtw: None,
            hidden_cost: 0.0,
            hidden_node_cost: 0.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<Point> {
        v.iter().map(|&(x, y)| Point::new(x, y)).collect()
    }

    /// Minimum over every monotone alignment, enumerated recursively.
    fn dtw_brute(a: &[Point], b: &[Point]) -> f64 {
        fn go(a: &[Point], b: &[Point], i: usize, j: usize) -> f64 {
            let d = a[i].distance(&b[j]);
            if i == 0 && j == 0 {
                return d;
            }
            let mut best = f64::INFINITY;
            if i > 0 {
                best = best.min(go(a, b, i - 1, j));
            }
            if j > 0 {
                best = best.min(go(a, b, i, j - 1));
            }
            if i > 0 && j > 0 {
                best = best.min(go(a, b, i - 1, j - 1));
            }
            d + best
        }
        go(a, b, a.len() - 1, b.len() - 1)
    }

    fn gt_with_hot_cell() -> CostMap {
        let mut v = vec![0.0; 16 * 16];
        v[5 * 16 + 5] = 1.0;
        CostMap::new(16, 16, v).unwrap()
    }

    #[test]
    fn success_cases() {
        let gt = gt_with_hot_cell();
        let clear = pts(&[(0.5, 0.5), (15.5, 0.5)]);
        assert!(check_success(Some(&clear), &gt, 0.5, 0.5));
        let hit = pts(&[(0.5, 0.5), (5.5, 5.5)]);
        assert!(!check_success(Some(&hit), &gt, 0.5, 0.5));
        assert!(!check_success(None, &gt, 0.5, 0.5));
    }

    #[test]
    fn spl_examples() {
        let ep = |s, l, p| Episode {
            success: s,
            gt_length: l,
            produced_length: p,
        };
        assert_eq!(spl(&[ep(true, 10.0, 10.0)]).unwrap(), 1.0);
        assert_eq!(spl(&[ep(false, 10.0, 10.0)]).unwrap(), 0.0);
        assert_eq!(spl(&[ep(true, 10.0, 20.0)]).unwrap(), 0.5);
        // produced shorter than ground truth is capped at 1
        assert_eq!(spl(&[ep(true, 10.0, 5.0)]).unwrap(), 1.0);
        assert_eq!(spl(&[]), Err(MetricsError::EmptyResultSet));
    }

    #[test]
    fn dtw_examples() {
        let a = pts(&[(0.0, 0.0), (1.0, 2.0), (3.0, 3.0)]);
        assert_eq!(dtw(&a, &a).unwrap(), 0.0);
        assert_eq!(dtw(&pts(&[(0.0, 0.0)]), &pts(&[(3.0, 4.0)])).unwrap(), 5.0);
        let a = pts(&[(0.0, 0.0), (1.0, 0.0)]);
        let b = pts(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0)]);
        assert_eq!(dtw_brute(&a, &b), 1.0);
        assert_eq!(dtw(&a, &b).unwrap(), 1.0);
        assert_eq!(dtw(&[], &b), Err(MetricsError::EmptySequence));
    }

    #[test]
    fn resample_straight_segment() {
        let r = resample_path(&pts(&[(0.0, 0.0), (63.0, 0.0)]), 64).unwrap();
        for (i, p) in r.iter().enumerate() {
            assert!((p.x - i as f64).abs() < 1e-12 && p.y == 0.0);
        }
        let r = resample_path(&pts(&[(0.0, 0.0), (3.0, 4.0), (9.0, 4.0)]), 2).unwrap();
        assert_eq!(r, pts(&[(0.0, 0.0), (9.0, 4.0)]));
        assert_eq!(resample_path(&pts(&[(1.0, 1.0), (1.0, 1.0)]), 8), Err(MetricsError::DegeneratePath));
    }

    #[test]
    fn resample_preserves_arclength_on_straight_runs() {
        let p = pts(&[(0.0, 0.0), (10.0, 0.0), (10.0, 0.0), (10.0, 7.5)]);
        let r = resample_path(&p, 200).unwrap();
        // resampling cuts corners only at the one bend
        assert!(polyline_length(&r) <= polyline_length(&p) + 1e-9);
        let line = pts(&[(0.0, 0.0), (2.0, 1.0), (6.0, 3.0), (10.0, 5.0)]);
        let r = resample_path(&line, 64).unwrap();
        assert!((polyline_length(&r) - polyline_length(&line)).abs() < 1e-9);
    }

    #[test]
    fn evaluate_no_path() {
        let gt = gt_with_hot_cell();
        let r = evaluate(None, &pts(&[(0.5, 0.5), (10.5, 0.5)]), &gt);
        assert!(!r.success);
        assert_eq!(r.spl_term, 0.0);
        assert_eq!(r.dtw, None);
    }

    #[test]
    fn evaluate_identical_path() {
        let gt = gt_with_hot_cell();
        let p = pts(&[(0.5, 0.5), (10.5, 0.5), (10.5, 10.5)]);
        let r = evaluate(Some(&p), &p, &gt);
        assert!(r.success);
        assert_eq!(r.spl_term, 1.0);
        assert_eq!(r.dtw, Some(0.0));
        assert_eq!(r.hidden_cost, 0.0);
    }

    fn point_seq(max: usize) -> impl Strategy<Value = Vec<Point>> {
        prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 1..=max)
            .prop_map(|v| v.into_iter().map(|(x, y)| Point::new(x, y)).collect())
    }

    proptest! {
        #[test]
        fn dtw_matches_brute_force(a in point_seq(6), b in point_seq(6)) {
            let dp = dtw(&a, &b).unwrap();
            prop_assert!((dp - dtw_brute(&a, &b)).abs() <= 1e-9);
        }

        #[test]
        fn dtw_symmetric_nonnegative(a in point_seq(12), b in point_seq(12)) {
            let ab = dtw(&a, &b).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - dtw(&b, &a).unwrap()).abs() <= 1e-9);
            prop_assert_eq!(dtw(&a, &a).unwrap(), 0.0);
        }

        #[test]
        fn spl_bounded_and_order_invariant(
            eps in prop::collection::vec((any::<bool>(), 0.1f64..50.0, 0.1f64..80.0), 1..20)
        ) {
            let v: Vec<Episode> = eps.iter().map(|&(s, l, p)| Episode { success: s, gt_length: l, produced_length: p }).collect();
            let mut r = v.clone();
            r.reverse();
            let (a, b) = (spl(&v).unwrap(), spl(&r).unwrap());
            prop_assert!((0.0..=1.0).contains(&a));
            prop_assert!((a - b).abs() <= 1e-12);
        }
    }
}
