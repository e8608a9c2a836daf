//! Farthest-point sampling and the epsilon-net predicates it guarantees.
//!
//! The greedy max-min selection returns a sample `R` together with the
//! radius `e` of the last pick; `R` is always simultaneously `e`-sparse and
//! an `e`-cover of the input — not just with high probability. Every
//! distance here flows through [`crate::geometry::sq_dist`], so predicates
//! evaluated on coordinates agree bit-for-bit with the matrix the sampler
//! consumed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sq_dist, PointCloud, SquaredDistanceMatrix};

/// Result of farthest-point sampling: the chosen indices in selection order
/// and the sampling radius.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub indices: Vec<usize>,
    /// The max-min distance of the last selection. The first pick's
    /// sentinel never escapes: for `m == 1` this is the largest distance
    /// from the start point, which keeps the cover property.
    pub radius: f64,
}

/// Greedy max-min selection of `m` points from a fully observed distance
/// matrix.
///
/// The first pick is `start` (resolving the all-infinite tie
/// deterministically); afterwards the unchosen point with the largest
/// distance to the selected set wins, ties broken by smallest index.
pub fn farthest_sampling(
    d: &SquaredDistanceMatrix,
    m: usize,
    start: usize,
) -> Result<SampleResult> {
    let n = d.size();
    if !d.is_fully_observed() {
        return Err(Error::RequiresFullObservation);
    }
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!(
            "sample size m = {m} must be in 1..={n}"
        )));
    }
    if start >= n {
        return Err(Error::InvalidArgument(format!(
            "start index {start} out of range"
        )));
    }
    let mut chosen = vec![false; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut indices = Vec::with_capacity(m);
    let mut radius = f64::INFINITY;
    let mut current = start;
    for round in 0..m {
        if round > 0 {
            // Pick the unchosen point with maximal distance to the set;
            // strict comparison keeps the smallest index on ties.
            let mut best = usize::MAX;
            let mut best_d = f64::NEG_INFINITY;
            for (j, &dj) in dist.iter().enumerate() {
                if !chosen[j] && dj > best_d {
                    best = j;
                    best_d = dj;
                }
            }
            current = best;
            radius = best_d;
        }
        chosen[current] = true;
        indices.push(current);
        for j in 0..n {
            if !chosen[j] {
                let dj = d.get(current, j).sqrt();
                if dj < dist[j] {
                    dist[j] = dj;
                }
            }
        }
    }
    if m == 1 {
        // No second selection happened; report the cover radius of the
        // single pick instead of the +inf sentinel.
        radius = dist
            .iter()
            .enumerate()
            .filter(|&(j, _)| !chosen[j])
            .map(|(_, &dj)| dj)
            .fold(0.0, f64::max);
    }
    Ok(SampleResult { indices, radius })
}

/// True iff every distinct pair of points lies at distance `>= eps`.
pub fn is_eps_sparse(y: &PointCloud, eps: f64) -> bool {
    let n = y.len();
    for i in 0..n {
        for j in (i + 1)..n {
            if sq_dist(y.point(i), y.point(j)).sqrt() < eps {
                return false;
            }
        }
    }
    true
}

/// True iff every point of `x` has some point of `y` within distance `eps`.
pub fn is_eps_cover(x: &PointCloud, y: &PointCloud, eps: f64) -> bool {
    assert_eq!(x.dim(), y.dim(), "cover check requires matching dimensions");
    for p in x.iter_points() {
        let mut nearest = f64::INFINITY;
        for q in y.iter_points() {
            let d = sq_dist(p, q).sqrt();
            if d < nearest {
                nearest = d;
            }
        }
        if nearest > eps {
            return false;
        }
    }
    true
}

/// Discretized interiority test for `k = 2`: `p` is interior of `P` w.r.t.
/// `(eps, delta)` when `P` is a `delta`-cover of the disk `B(p, eps +
/// delta)`.
///
/// The disk is sampled on a square grid of spacing `grid_step`; each grid
/// point inside the disk must lie within `delta + grid_step·√2/2` of `P`.
/// The slack is exactly the grid's covering radius, so a true cover never
/// fails the test.
pub fn interiority_2d(
    p: &[f64],
    cloud: &PointCloud,
    eps: f64,
    delta: f64,
    grid_step: f64,
) -> Result<bool> {
    if cloud.dim() != 2 || p.len() != 2 {
        return Err(Error::InvalidArgument(
            "interiority test is defined for k = 2".into(),
        ));
    }
    if grid_step <= 0.0 || !grid_step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "grid_step must be positive, got {grid_step}"
        )));
    }
    if eps <= 0.0 || delta <= 0.0 {
        return Err(Error::InvalidArgument(
            "eps and delta must be positive".into(),
        ));
    }
    let r = eps + delta;
    let threshold = delta + grid_step * std::f64::consts::SQRT_2 / 2.0;
    let threshold_sq = threshold * threshold;
    let r_sq = r * r;
    let steps = (r / grid_step).ceil() as i64;
    for ix in -steps..=steps {
        for iy in -steps..=steps {
            let gx = p[0] + ix as f64 * grid_step;
            let gy = p[1] + iy as f64 * grid_step;
            let dx = gx - p[0];
            let dy = gy - p[1];
            if dx * dx + dy * dy > r_sq {
                continue;
            }
            let g = [gx, gy];
            let mut covered = false;
            for q in cloud.iter_points() {
                if sq_dist(&g, q) <= threshold_sq {
                    covered = true;
                    break;
                }
            }
            if !covered {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Default grid step for [`interiority_2d`], a quarter of `delta`.
pub fn default_grid_step(delta: f64) -> f64 {
    delta / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::squared_distance_matrix;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn collinear_cloud(n: usize) -> PointCloud {
        let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
        PointCloud::from_rows(1, &rows).unwrap()
    }

    fn uniform_disk(n: usize, rng: &mut ChaCha8Rng) -> PointCloud {
        let mut coords = Vec::with_capacity(n * 2);
        while coords.len() < n * 2 {
            let x: f64 = rng.gen_range(-1.0..1.0);
            let y: f64 = rng.gen_range(-1.0..1.0);
            if x * x + y * y <= 1.0 {
                coords.push(x);
                coords.push(y);
            }
        }
        PointCloud::new(2, coords).unwrap()
    }

    #[test]
    fn greedy_trace_on_the_line() {
        let p = collinear_cloud(10);
        let d = squared_distance_matrix(&p);
        let two = farthest_sampling(&d, 2, 0).unwrap();
        assert_eq!(two.indices, vec![0, 9]);
        assert_eq!(two.radius, 9.0);

        // Hand trace: after {0, 9} the d-values are min(j, 9-j); indices 4
        // and 5 tie at 4, the smaller index wins.
        let three = farthest_sampling(&d, 3, 0).unwrap();
        assert_eq!(three.indices, vec![0, 9, 4]);
        assert_eq!(three.radius, 4.0);
    }

    #[test]
    fn exhaustive_sampling_radius_is_min_pairwise_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = uniform_disk(30, &mut rng);
        let d = squared_distance_matrix(&p);
        let all = farthest_sampling(&d, 30, 0).unwrap();
        assert_eq!(all.indices.len(), 30);
        let mut min_pair = f64::INFINITY;
        for i in 0..30 {
            for j in (i + 1)..30 {
                min_pair = min_pair.min(d.get(i, j).sqrt());
            }
        }
        assert_eq!(all.radius, min_pair);
    }

    #[test]
    fn single_pick_radius_is_cover_radius() {
        let p = collinear_cloud(5);
        let d = squared_distance_matrix(&p);
        let one = farthest_sampling(&d, 1, 1).unwrap();
        assert_eq!(one.indices, vec![1]);
        assert_eq!(one.radius, 3.0); // farthest point is index 4
        assert!(one.radius.is_finite());
    }

    #[test]
    fn rejects_masked_and_out_of_range() {
        let masked = SquaredDistanceMatrix::from_edges(4, &[(0, 1, 1.0)]).unwrap();
        assert!(farthest_sampling(&masked, 2, 0).is_err());
        let p = collinear_cloud(4);
        let d = squared_distance_matrix(&p);
        assert!(farthest_sampling(&d, 5, 0).is_err());
        assert!(farthest_sampling(&d, 0, 0).is_err());
        assert!(farthest_sampling(&d, 2, 9).is_err());
    }

    #[test]
    fn sparse_and_cover_basics() {
        let two = PointCloud::from_rows(2, &[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert!(is_eps_sparse(&two, 0.5));
        assert!(!is_eps_sparse(&two, 1.5));
        assert!(is_eps_cover(&two, &two, 0.0));

        let x = PointCloud::from_rows(1, &[vec![0.0], vec![10.0]]).unwrap();
        let y = PointCloud::from_rows(1, &[vec![0.0]]).unwrap();
        assert!(!is_eps_cover(&x, &y, 5.0));
        assert!(is_eps_cover(&x, &y, 10.0));
    }

    #[test]
    fn sampling_always_yields_an_eps_net() {
        // The net property is exact, not probabilistic: sparse and cover at
        // radius e hold for every run.
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for _ in 0..25 {
            let n = rng.gen_range(5..120);
            let p = uniform_disk(n, &mut rng);
            let d = squared_distance_matrix(&p);
            let m = rng.gen_range(2..=n);
            let start = rng.gen_range(0..n);
            let sample = farthest_sampling(&d, m, start).unwrap();
            let anchors = p.subset(&sample.indices).unwrap();
            assert!(is_eps_sparse(&anchors, sample.radius), "n={n} m={m}");
            assert!(is_eps_cover(&p, &anchors, sample.radius), "n={n} m={m}");
        }
    }

    #[test]
    fn radius_monotone_in_sample_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = uniform_disk(80, &mut rng);
        let d = squared_distance_matrix(&p);
        let mut last = f64::INFINITY;
        for m in 2..=80 {
            let s = farthest_sampling(&d, m, 0).unwrap();
            assert!(
                s.radius <= last,
                "radius increased at m={m}: {} > {last}",
                s.radius
            );
            last = s.radius;
        }
    }

    #[test]
    fn sampling_radius_scales_like_inverse_sqrt_m() {
        // For uniform clouds in a fixed disk the covering radius shrinks as
        // m^{-1/k}; the fitted log-log slope must not be much shallower.
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let p = uniform_disk(2000, &mut rng);
        let d = squared_distance_matrix(&p);
        let ms = [25usize, 50, 100, 200, 400];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for &m in &ms {
            let s = farthest_sampling(&d, m, 0).unwrap();
            xs.push((m as f64).ln());
            ys.push(s.radius.ln());
        }
        let slope = fit_slope(&xs, &ys);
        assert!(
            slope <= -0.5 + 0.15,
            "log-log slope {slope} too shallow for k = 2"
        );
    }

    #[test]
    fn neighbor_counts_within_odd_multiples_of_radius() {
        // When the union of e-balls around the sample is connected, every
        // point sees at least l anchors within (2l-1)·e for l = 1, 2, 3.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut tested = 0;
        while tested < 5 {
            let n = rng.gen_range(100..500);
            let p = uniform_disk(n, &mut rng);
            let d = squared_distance_matrix(&p);
            let m = rng.gen_range(8..40);
            let sample = farthest_sampling(&d, m, 0).unwrap();
            let e = sample.radius;
            if !ball_union_connected(&sample.indices, &d, e) {
                continue;
            }
            for i in 0..n {
                for l in 1usize..=3 {
                    let within = sample
                        .indices
                        .iter()
                        .filter(|&&r| d.get(i, r).sqrt() <= (2 * l - 1) as f64 * e)
                        .count();
                    assert!(
                        within >= l.min(m),
                        "point {i}: only {within} anchors within {}e",
                        2 * l - 1
                    );
                }
            }
            tested += 1;
        }
    }

    fn ball_union_connected(anchors: &[usize], d: &SquaredDistanceMatrix, e: f64) -> bool {
        // Two e-balls overlap iff centers are within 2e; the union is
        // path-connected iff that intersection graph is connected.
        let m = anchors.len();
        let mut seen = vec![false; m];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..m {
                if !seen[b] && d.get(anchors[a], anchors[b]).sqrt() <= 2.0 * e {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in xs.iter().zip(ys.iter()) {
            num += (x - mx) * (y - my);
            den += (x - mx) * (x - mx);
        }
        num / den
    }

    #[test]
    fn interiority_on_dense_grid() {
        // Oracle: every disk point is within s/√2 <= delta of a grid node.
        let s = 0.05;
        let mut rows = Vec::new();
        let half = 20;
        for ix in -half..=half {
            for iy in -half..=half {
                rows.push(vec![ix as f64 * s, iy as f64 * s]);
            }
        }
        let cloud = PointCloud::from_rows(2, &rows).unwrap();
        let delta = s;
        let eps = 0.5;
        let step = default_grid_step(delta);
        assert!(interiority_2d(&[0.0, 0.0], &cloud, eps, delta, step).unwrap());

        // A point outside the hull by more than delta is not interior.
        assert!(!interiority_2d(&[1.5, 0.0], &cloud, eps, delta, step).unwrap());

        // A single point cannot delta-cover its own disk when delta < eps.
        let lonely = PointCloud::from_rows(2, &[vec![0.0, 0.0]]).unwrap();
        assert!(!interiority_2d(&[0.0, 0.0], &lonely, 0.5, 0.2, 0.05).unwrap());
    }

    #[test]
    fn interiority_rejects_bad_arguments() {
        let cloud = PointCloud::from_rows(2, &[vec![0.0, 0.0]]).unwrap();
        assert!(interiority_2d(&[0.0, 0.0], &cloud, 0.5, 0.2, 0.0).is_err());
        let three = PointCloud::from_rows(3, &[vec![0.0; 3]]).unwrap();
        assert!(interiority_2d(&[0.0, 0.0], &three, 0.5, 0.2, 0.1).is_err());
    }
}
