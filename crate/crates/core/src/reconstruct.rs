//! Two-stage reconstruction from an anchor graph: classical MDS places the
//! anchor clique from its global edges, then every other vertex is
//! trilaterated from its local edges against the reconstructed anchors.
//! Anchor positions fix the global frame and are never revisited, which
//! keeps the second stage linear in the vertex count.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cmds::cmds_embed;
use crate::error::{Error, Result};
use crate::geometry::{sq_dist, structural_loss, PointCloud, SquaredDistanceMatrix};
use crate::graph::{build_anchor_graph, rho_default, AnchorGraph, Strategy};
use crate::matrix::{solve_linear, Matrix};
use crate::noise::BiasMatrix;

/// Wall-clock accounting, kept separate from the deterministic payload.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StageTimings {
    /// Graph construction (quick-MDS path only).
    pub build_s: f64,
    /// Anchor placement via cMDS on the global-edge block.
    pub anchor_embed_s: f64,
    /// Trilateration of all non-anchor vertices.
    pub trilateration_s: f64,
    pub total_s: f64,
}

/// Output of a reconstruction run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReconstructionReport {
    /// The estimate, in input vertex order.
    pub cloud: PointCloud,
    /// Structural loss against ground truth, when it was supplied.
    pub loss: Option<f64>,
    /// Structural loss restricted to the anchor set.
    pub anchor_loss: Option<f64>,
    pub timings: StageTimings,
    /// Stable-selection fallbacks recorded at graph build time.
    pub fallback_count: usize,
    /// Non-intersecting circle pairs resolved by the least-squares point.
    pub circle_miss_count: usize,
    /// Vertices placed at their anchor centroid after a degenerate system.
    pub degenerate_count: usize,
}

/// A trilaterated point and whether the circles failed to intersect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trilaterated {
    pub point: [f64; 2],
    pub circle_miss: bool,
}

/// Intersects the circles centered at `r_i`, `r_j` with radii `d_i`, `d_j`
/// and returns the intersection closer to the witness `r_k` (ties resolved
/// by the witness side of the line, then the midpoint).
///
/// When noise makes the circles disjoint or nested, returns the point on
/// the line through the centers minimizing the sum of squared circle
/// residuals and marks `circle_miss`.
pub fn trilaterate_2d(
    r_i: &[f64],
    d_i: f64,
    r_j: &[f64],
    d_j: f64,
    r_k: &[f64],
) -> Result<Trilaterated> {
    if d_i <= 0.0 || d_j <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "radii must be positive, got {d_i} and {d_j}"
        )));
    }
    let ux = r_j[0] - r_i[0];
    let uy = r_j[1] - r_i[1];
    let l = (ux * ux + uy * uy).sqrt();
    let scale = d_i.max(d_j).max(1e-300);
    if l <= 1e-12 * scale {
        return Err(Error::Degenerate("coincident circle centers".into()));
    }
    let (ex, ey) = (ux / l, uy / l);
    let a = (d_i * d_i - d_j * d_j + l * l) / (2.0 * l);
    let h2 = d_i * d_i - a * a;
    if h2 >= 0.0 {
        let h = h2.sqrt();
        let bx = r_i[0] + a * ex;
        let by = r_i[1] + a * ey;
        // Normal to the center line.
        let (nx, ny) = (-ey, ex);
        let plus = [bx + h * nx, by + h * ny];
        let minus = [bx - h * nx, by - h * ny];
        let dp = sq_dist(&plus, r_k);
        let dm = sq_dist(&minus, r_k);
        let point = if dp < dm {
            plus
        } else if dm < dp {
            minus
        } else {
            // Equidistant witness: take its side of the line, else the
            // midpoint.
            let side = ux * (r_k[1] - r_i[1]) - uy * (r_k[0] - r_i[0]);
            if side > 0.0 {
                plus
            } else if side < 0.0 {
                minus
            } else {
                [bx, by]
            }
        };
        return Ok(Trilaterated {
            point,
            circle_miss: false,
        });
    }
    // No intersection: minimize (|t| - d_i)^2 + (|t - L| - d_j)^2 along the
    // center line; each absolute-value region has a closed-form minimizer.
    let f = |t: f64| {
        let ri = t.abs() - d_i;
        let rj = (t - l).abs() - d_j;
        ri * ri + rj * rj
    };
    let candidates = [
        ((d_i + l - d_j) / 2.0).clamp(0.0, l),
        ((d_i + l + d_j) / 2.0).max(l),
        ((l - d_i - d_j) / 2.0).min(0.0),
    ];
    let mut best = candidates[0];
    for &t in &candidates[1..] {
        if f(t) < f(best) {
            best = t;
        }
    }
    Ok(Trilaterated {
        point: [r_i[0] + best * ex, r_i[1] + best * ey],
        circle_miss: true,
    })
}

/// Places a point in `R^k` from at least `k+1` anchors: subtracting the
/// first sphere equation from the rest gives a linear system solved by
/// least squares. Errors when the anchors do not affinely span `R^k`.
pub fn trilaterate_kd(anchors: &[Vec<f64>], dists: &[f64]) -> Result<Vec<f64>> {
    if anchors.is_empty() {
        return Err(Error::InvalidArgument("no anchors".into()));
    }
    let k = anchors[0].len();
    if anchors.len() < k + 1 {
        return Err(Error::InvalidArgument(format!(
            "need at least k+1 = {} anchors, got {}",
            k + 1,
            anchors.len()
        )));
    }
    if anchors.len() != dists.len() {
        return Err(Error::DimensionMismatch(
            "one distance per anchor required".into(),
        ));
    }
    if anchors.iter().any(|a| a.len() != k) {
        return Err(Error::DimensionMismatch(
            "anchor coordinate lengths differ".into(),
        ));
    }
    let m = anchors.len() - 1;
    let a0 = &anchors[0];
    let a0_norm2: f64 = a0.iter().map(|x| x * x).sum();
    let mut rows = Matrix::zeros(m, k);
    let mut rhs = vec![0.0; m];
    for j in 1..anchors.len() {
        let aj = &anchors[j];
        let aj_norm2: f64 = aj.iter().map(|x| x * x).sum();
        for c in 0..k {
            rows.set(j - 1, c, 2.0 * (aj[c] - a0[c]));
        }
        rhs[j - 1] = dists[0] * dists[0] - dists[j] * dists[j] + aj_norm2 - a0_norm2;
    }
    if m == k {
        solve_linear(&rows, &rhs, 1e-10)
    } else {
        // Overdetermined: normal equations (k is tiny).
        let at = rows.transpose();
        let ata = at.matmul(&rows);
        let atb = at.matvec(&rhs);
        solve_linear(&ata, &atb, 1e-10)
    }
}

/// Two-stage reconstruction of every vertex of an anchor graph.
///
/// Stage 1 assembles the anchor-block squared distance matrix from the
/// global edges, subtracts the matching bias entries, and places the
/// anchors with classical MDS. Stage 2 trilaterates each remaining vertex
/// from its local edges: stable triples go through circle intersection with
/// the witness, everything else through the linear solve. Vertices whose
/// anchor set turns out degenerate land on the anchor centroid and are
/// counted.
pub fn reconstruct(
    g: &AnchorGraph,
    bias: &BiasMatrix,
    k: usize,
    truth: Option<&PointCloud>,
) -> Result<ReconstructionReport> {
    if k != g.k() {
        return Err(Error::InvalidArgument(format!(
            "graph was built for k = {}, asked for {k}",
            g.k()
        )));
    }
    if bias.size() != g.n() {
        return Err(Error::DimensionMismatch(format!(
            "bias is {}x{0} but graph has {} vertices",
            bias.size(),
            g.n()
        )));
    }
    if let Some(t) = truth {
        if t.len() != g.n() || t.dim() != k {
            return Err(Error::DimensionMismatch(
                "ground truth does not match the graph".into(),
            ));
        }
    }
    let start = Instant::now();
    let anchors = g.anchors();
    let rho = anchors.len();
    let mut rank_of = std::collections::BTreeMap::new();
    for (idx, &a) in anchors.iter().enumerate() {
        rank_of.insert(a, idx);
    }
    // Stage 1: debiased anchor block, then cMDS.
    let mut anchor_sdm = SquaredDistanceMatrix::zeros(rho);
    for &(a, b, len) in g.global_edges() {
        let (ra, rb) = (rank_of[&a], rank_of[&b]);
        anchor_sdm.set_pair(ra, rb, len * len - bias.get(a, b));
    }
    let embed = cmds_embed(&anchor_sdm, k)?;
    let anchor_embed_s = start.elapsed().as_secs_f64();

    let stage2_start = Instant::now();
    let n = g.n();
    let mut coords = vec![0.0; n * k];
    for (idx, &a) in anchors.iter().enumerate() {
        coords[a * k..(a + 1) * k].copy_from_slice(embed.cloud.point(idx));
    }
    let mut circle_miss_count = 0;
    let mut degenerate_count = 0;
    for set in g.locals() {
        let v = set.vertex;
        let anchor_pos: Vec<Vec<f64>> = set
            .edges
            .iter()
            .map(|&(a, _)| embed.cloud.point(rank_of[&a]).to_vec())
            .collect();
        let lengths: Vec<f64> = set.edges.iter().map(|&(_, len)| len).collect();
        let placed: Option<Vec<f64>> = if k == 2 && set.stable_angle.is_some() {
            match trilaterate_2d(
                &anchor_pos[0],
                lengths[0],
                &anchor_pos[1],
                lengths[1],
                &anchor_pos[2],
            ) {
                Ok(t) => {
                    if t.circle_miss {
                        circle_miss_count += 1;
                    }
                    Some(t.point.to_vec())
                }
                Err(Error::Degenerate(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            match trilaterate_kd(&anchor_pos, &lengths) {
                Ok(p) => Some(p),
                Err(Error::Degenerate(_)) => None,
                Err(e) => return Err(e),
            }
        };
        let position = placed.unwrap_or_else(|| {
            degenerate_count += 1;
            let mut c = vec![0.0; k];
            for pos in &anchor_pos {
                for (acc, x) in c.iter_mut().zip(pos.iter()) {
                    *acc += x;
                }
            }
            for x in c.iter_mut() {
                *x /= anchor_pos.len() as f64;
            }
            c
        });
        coords[v * k..(v + 1) * k].copy_from_slice(&position);
    }
    let trilateration_s = stage2_start.elapsed().as_secs_f64();
    let cloud = PointCloud::new(k, coords)?;

    let mut loss = None;
    let mut anchor_loss = None;
    if let Some(t) = truth {
        loss = Some(structural_loss(&cloud, t)?.0);
        let est_anchors = cloud.subset(anchors)?;
        let true_anchors = t.subset(anchors)?;
        anchor_loss = Some(structural_loss(&est_anchors, &true_anchors)?.0);
    }
    Ok(ReconstructionReport {
        cloud,
        loss,
        anchor_loss,
        timings: StageTimings {
            build_s: 0.0,
            anchor_embed_s,
            trilateration_s,
            total_s: start.elapsed().as_secs_f64(),
        },
        fallback_count: g.meta.fallback_count,
        circle_miss_count,
        degenerate_count,
    })
}

/// Fast embedding from a full distance matrix: farthest-sample `ρ(n)`
/// anchors, embed only their block, place everyone else from `k+1` random
/// anchors. Degenerate random draws were already redrawn at build time;
/// anything still degenerate falls back per [`reconstruct`].
pub fn quick_mds(d: &SquaredDistanceMatrix, k: usize, seed: u64) -> Result<ReconstructionReport> {
    let n = d.size();
    let rho = rho_default(n, k)?;
    let start = Instant::now();
    let g = build_anchor_graph(d, d, k, rho, Strategy::Random { seed })?;
    let build_s = start.elapsed().as_secs_f64();
    let mut report = reconstruct(&g, &BiasMatrix::zeros(n), k, None)?;
    report.timings.build_s = build_s;
    report.timings.total_s = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Finite-difference sensitivities of the trilaterated point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SensitivityProbe {
    /// `‖∂p̃/∂d_i‖` estimated by central differences.
    pub wrt_di: f64,
    pub wrt_dj: f64,
    /// Operator norms of the 2×2 position Jacobians.
    pub wrt_ri: f64,
    pub wrt_rj: f64,
    /// Intersection angle at the reconstructed point.
    pub alpha: f64,
    /// Analytic reference `1 / sin α` for all four sensitivities.
    pub analytic: f64,
}

/// Probes a valid trilateration configuration with central finite
/// differences of step `step` on both radii and both center positions.
pub fn sensitivity_probe(
    r_i: &[f64],
    d_i: f64,
    r_j: &[f64],
    d_j: f64,
    r_k: &[f64],
    step: f64,
) -> Result<SensitivityProbe> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    let base = trilaterate_2d(r_i, d_i, r_j, d_j, r_k)?;
    if base.circle_miss {
        return Err(Error::InvalidArgument(
            "circles do not intersect; sensitivities are undefined".into(),
        ));
    }
    let l2 = sq_dist(r_i, r_j);
    let cos_alpha = ((d_i * d_i + d_j * d_j - l2) / (2.0 * d_i * d_j)).clamp(-1.0, 1.0);
    let alpha = cos_alpha.acos();
    if alpha <= 0.0 || alpha >= std::f64::consts::PI {
        return Err(Error::Degenerate(format!(
            "intersection angle {alpha} outside (0, pi)"
        )));
    }
    let solve = |ri: &[f64], di: f64, rj: &[f64], dj: f64| -> Result<[f64; 2]> {
        let t = trilaterate_2d(ri, di, rj, dj, r_k)?;
        if t.circle_miss {
            return Err(Error::InvalidArgument(
                "finite-difference step crossed a tangency".into(),
            ));
        }
        Ok(t.point)
    };
    let central = |plus: [f64; 2], minus: [f64; 2]| {
        [
            (plus[0] - minus[0]) / (2.0 * step),
            (plus[1] - minus[1]) / (2.0 * step),
        ]
    };
    let norm2 = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();

    let wrt_di = norm2(central(
        solve(r_i, d_i + step, r_j, d_j)?,
        solve(r_i, d_i - step, r_j, d_j)?,
    ));
    let wrt_dj = norm2(central(
        solve(r_i, d_i, r_j, d_j + step)?,
        solve(r_i, d_i, r_j, d_j - step)?,
    ));
    let jacobian_norm = |center: &[f64], which_i: bool| -> Result<f64> {
        let mut cols = [[0.0; 2]; 2];
        for (c, col) in cols.iter_mut().enumerate() {
            let mut plus = center.to_vec();
            let mut minus = center.to_vec();
            plus[c] += step;
            minus[c] -= step;
            let (pp, pm) = if which_i {
                (solve(&plus, d_i, r_j, d_j)?, solve(&minus, d_i, r_j, d_j)?)
            } else {
                (solve(r_i, d_i, &plus, d_j)?, solve(r_i, d_i, &minus, d_j)?)
            };
            *col = central(pp, pm);
        }
        // Largest singular value of the 2×2 Jacobian, closed form.
        let (a, b) = (cols[0][0], cols[1][0]);
        let (c, d) = (cols[0][1], cols[1][1]);
        let tr = a * a + b * b + c * c + d * d;
        let det = a * d - b * c;
        let disc = (tr * tr - 4.0 * det * det).max(0.0).sqrt();
        Ok(((tr + disc) / 2.0).sqrt())
    };
    let wrt_ri = jacobian_norm(r_i, true)?;
    let wrt_rj = jacobian_norm(r_j, false)?;
    Ok(SensitivityProbe {
        wrt_di,
        wrt_dj,
        wrt_ri,
        wrt_rj,
        alpha,
        analytic: 1.0 / alpha.sin(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::squared_distance_matrix;
    use crate::noise::{bias_matrix, debias, perturb_distances, NoiseSpec};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn uniform_disk(n: usize, k: usize, rng: &mut ChaCha8Rng) -> PointCloud {
        let mut coords = Vec::with_capacity(n * k);
        while coords.len() < n * k {
            let pt: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            if pt.iter().map(|x| x * x).sum::<f64>() <= 1.0 {
                coords.extend(pt);
            }
        }
        PointCloud::new(k, coords).unwrap()
    }

    #[test]
    fn circle_intersection_picks_witness_side() {
        let t = trilaterate_2d(
            &[0.0, 0.0],
            2.0_f64.sqrt(),
            &[2.0, 0.0],
            2.0_f64.sqrt(),
            &[1.0, 5.0],
        )
        .unwrap();
        assert!(!t.circle_miss);
        assert!((t.point[0] - 1.0).abs() < 1e-12);
        assert!((t.point[1] - 1.0).abs() < 1e-12);

        let below = trilaterate_2d(
            &[0.0, 0.0],
            2.0_f64.sqrt(),
            &[2.0, 0.0],
            2.0_f64.sqrt(),
            &[1.0, -5.0],
        )
        .unwrap();
        assert!((below.point[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_distances_recover_the_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        for _ in 0..50 {
            let p = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let ri = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let rj = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let di = sq_dist(&p, &ri).sqrt();
            let dj = sq_dist(&p, &rj).sqrt();
            if di < 1e-3 || dj < 1e-3 || sq_dist(&ri, &rj).sqrt() < 1e-2 {
                continue;
            }
            // Witness at the true point's side, away from the line.
            let t = match trilaterate_2d(&ri, di, &rj, dj, &p) {
                Ok(t) => t,
                Err(_) => continue,
            };
            // A witness exactly on the point cannot be ambiguous unless the
            // point sits on the center line; skip those.
            let cross =
                (rj[0] - ri[0]) * (p[1] - ri[1]) - (rj[1] - ri[1]) * (p[0] - ri[0]);
            if cross.abs() < 1e-6 {
                continue;
            }
            assert!(
                sq_dist(&t.point, &p).sqrt() < 1e-10,
                "recovered {:?} expected {:?}",
                t.point,
                p
            );
        }
    }

    #[test]
    fn disjoint_circles_fall_back_to_the_gap_midpoint() {
        let t = trilaterate_2d(&[0.0, 0.0], 1.0, &[4.0, 0.0], 1.0, &[2.0, 3.0]).unwrap();
        assert!(t.circle_miss);
        assert!((t.point[0] - 2.0).abs() < 1e-12);
        assert!(t.point[1].abs() < 1e-12);
    }

    #[test]
    fn nested_circles_fall_back_between_the_near_sides() {
        let t = trilaterate_2d(&[0.0, 0.0], 3.0, &[1.0, 0.0], 1.0, &[0.0, 1.0]).unwrap();
        assert!(t.circle_miss);
        assert!((t.point[0] - 2.5).abs() < 1e-12);
        assert!(t.point[1].abs() < 1e-12);
    }

    #[test]
    fn trilateration_rejects_bad_inputs() {
        assert!(trilaterate_2d(&[0.0, 0.0], 1.0, &[0.0, 0.0], 1.0, &[1.0, 1.0]).is_err());
        assert!(trilaterate_2d(&[0.0, 0.0], 0.0, &[1.0, 0.0], 1.0, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn kd_solve_exact_2d_and_3d() {
        let anchors = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let p = [0.3, 0.4];
        let dists: Vec<f64> = anchors.iter().map(|a| sq_dist(a, &p).sqrt()).collect();
        let got = trilaterate_kd(&anchors, &dists).unwrap();
        assert!((got[0] - 0.3).abs() < 1e-10);
        assert!((got[1] - 0.4).abs() < 1e-10);

        let tetra = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let q = [0.2, -0.1, 0.5];
        let dists: Vec<f64> = tetra.iter().map(|a| sq_dist(a, &q).sqrt()).collect();
        let got = trilaterate_kd(&tetra, &dists).unwrap();
        for (g, e) in got.iter().zip(q.iter()) {
            assert!((g - e).abs() < 1e-9);
        }
    }

    #[test]
    fn kd_solve_rejects_collinear_anchors() {
        let anchors = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![2.0, 0.0]];
        let out = trilaterate_kd(&anchors, &[1.0, 1.0, 1.0]);
        assert!(matches!(out, Err(Error::Degenerate(_))));
    }

    #[test]
    fn zero_noise_reconstruction_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        for strategy in [
            Strategy::Nearest,
            Strategy::Stable2d { delta: 0.3 },
            Strategy::Random { seed: 5 },
        ] {
            let p = uniform_disk(120, 2, &mut rng);
            let d = squared_distance_matrix(&p);
            let rho = rho_default(120, 2).unwrap();
            let g = build_anchor_graph(&d, &d, 2, rho, strategy).unwrap();
            let report = reconstruct(&g, &BiasMatrix::zeros(120), 2, Some(&p)).unwrap();
            let loss = report.loss.unwrap();
            assert!(loss <= 1e-7, "strategy {} loss {loss}", strategy.tag());
            assert_eq!(report.degenerate_count, 0);
        }
        // k = 3 goes through the linear solver path.
        let p = uniform_disk(90, 3, &mut rng);
        let d = squared_distance_matrix(&p);
        let rho = rho_default(90, 3).unwrap();
        let g = build_anchor_graph(&d, &d, 3, rho, Strategy::Nearest).unwrap();
        let report = reconstruct(&g, &BiasMatrix::zeros(90), 3, Some(&p)).unwrap();
        assert!(report.loss.unwrap() <= 1e-7);
    }

    #[test]
    fn anchors_only_graph_matches_plain_embedding() {
        let mut rng = ChaCha8Rng::seed_from_u64(62);
        let p = uniform_disk(12, 2, &mut rng);
        let d = squared_distance_matrix(&p);
        let g = build_anchor_graph(&d, &d, 2, 12, Strategy::Nearest).unwrap();
        let report = reconstruct(&g, &BiasMatrix::zeros(12), 2, Some(&p)).unwrap();
        let embed = cmds_embed(&d, 2).unwrap();
        // Stage 2 is empty, so the outputs are the same embedding up to
        // anchor reordering; distances must agree exactly.
        assert_eq!(report.cloud.len(), embed.cloud.len());
        let (loss, _) = structural_loss(&report.cloud, &embed.cloud).unwrap();
        assert!(loss < 1e-10);
    }

    #[test]
    fn noisy_reconstruction_stays_reasonable() {
        let mut rng = ChaCha8Rng::seed_from_u64(63);
        let p = uniform_disk(150, 2, &mut rng);
        let d = squared_distance_matrix(&p);
        let spec = NoiseSpec::uniform(150, 0.01, 99).unwrap();
        let noisy = perturb_distances(&d, &spec).unwrap().sdm;
        let debiased = debias(&noisy, &bias_matrix(&spec)).unwrap();
        let rho = rho_default(150, 2).unwrap();
        let g = build_anchor_graph(&d, &debiased, 2, rho, Strategy::Nearest).unwrap();
        let report = reconstruct(&g, &BiasMatrix::zeros(150), 2, Some(&p)).unwrap();
        // Sanity envelope only: with 8 anchors the nearest-triple geometry
        // amplifies σ = 0.01 noise well beyond the anchor-stage error.
        let loss = report.loss.unwrap();
        assert!(loss < 0.5, "noisy loss unexpectedly large: {loss}");
        assert!(report.anchor_loss.unwrap() < 0.15);
    }

    #[test]
    fn order_preservation() {
        let mut rng = ChaCha8Rng::seed_from_u64(64);
        let p = uniform_disk(80, 2, &mut rng);
        let d = squared_distance_matrix(&p);
        let rho = rho_default(80, 2).unwrap();
        let g = build_anchor_graph(&d, &d, 2, rho, Strategy::Nearest).unwrap();
        let report = reconstruct(&g, &BiasMatrix::zeros(80), 2, Some(&p)).unwrap();
        // The loss alignment maps truth onto the estimate pointwise in
        // input order.
        let (_, alignment) = structural_loss(&report.cloud, &p).unwrap();
        let mapped = p.transformed(&alignment);
        for (a, b) in mapped.iter_points().zip(report.cloud.iter_points()) {
            assert!(sq_dist(a, b).sqrt() < 1e-6);
        }
    }

    #[test]
    fn quick_mds_zero_noise_and_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(65);
        let p = uniform_disk(200, 2, &mut rng);
        let d = squared_distance_matrix(&p);
        let a = quick_mds(&d, 2, 7).unwrap();
        let (loss, _) = structural_loss(&a.cloud, &p).unwrap();
        assert!(loss <= 1e-6, "quick loss {loss}");
        let b = quick_mds(&d, 2, 7).unwrap();
        assert_eq!(a.cloud, b.cloud);
        let c = quick_mds(&d, 2, 8).unwrap();
        assert_ne!(a.cloud, c.cloud);
    }

    #[test]
    fn sensitivity_matches_inverse_sine() {
        // Configurations place the solution at the origin.
        let make = |alpha: f64| {
            let di = 0.8;
            let dj = 1.1;
            let ri = [di, 0.0];
            let rj = [dj * alpha.cos(), dj * alpha.sin()];
            // Witness close to p, clearly off the r_i r_j line.
            let rk = [0.05, 0.02];
            (ri, di, rj, dj, rk)
        };
        let (ri, di, rj, dj, rk) = make(std::f64::consts::FRAC_PI_2);
        let probe = sensitivity_probe(&ri, di, &rj, dj, &rk, 1e-6).unwrap();
        assert!((probe.wrt_di - 1.0).abs() < 1e-4, "got {}", probe.wrt_di);
        assert!((probe.analytic - 1.0).abs() < 1e-12);

        let (ri, di, rj, dj, rk) = make(std::f64::consts::FRAC_PI_6);
        let probe = sensitivity_probe(&ri, di, &rj, dj, &rk, 1e-6).unwrap();
        assert!((probe.wrt_di - 2.0).abs() < 1e-3, "got {}", probe.wrt_di);
        // All four sensitivities share the analytic value.
        for s in [probe.wrt_di, probe.wrt_dj, probe.wrt_ri, probe.wrt_rj] {
            assert!((s - probe.analytic).abs() < 0.01 * probe.analytic);
        }
    }

    #[test]
    fn witness_perturbation_does_not_move_the_point() {
        let ri = [0.0, 0.0];
        let rj = [2.0, 0.0];
        let d = 2.0_f64.sqrt();
        let base = trilaterate_2d(&ri, d, &rj, d, &[1.0, 5.0]).unwrap();
        let moved = trilaterate_2d(&ri, d, &rj, d, &[1.3, 4.6]).unwrap();
        assert_eq!(base.point, moved.point);
    }

    #[test]
    fn sensitivity_probe_rejects_bad_configs() {
        assert!(sensitivity_probe(&[0.0, 0.0], 1.0, &[4.0, 0.0], 1.0, &[2.0, 1.0], 1e-6).is_err());
        assert!(sensitivity_probe(&[0.0, 0.0], 1.0, &[1.0, 0.0], 1.0, &[0.5, 1.0], 0.0).is_err());
    }
}
