//! Cross-module pipeline invariants: end-to-end exactness of the two-stage
//! reconstruction on clean data, and the linear noise response of
//! trilateration against its sensitivity constant.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use nsmds_core::geometry::{sq_dist, squared_distance_matrix, PointCloud};
use nsmds_core::graph::{
    build_anchor_graph, rho_default, select_stable_anchors_2d, stable_angle_halfwidth, Strategy,
};
use nsmds_core::noise::BiasMatrix;
use nsmds_core::reconstruct::{reconstruct, trilaterate_2d};
use nsmds_core::sampling::farthest_sampling;

fn uniform_cloud(n: usize, k: usize, rng: &mut ChaCha8Rng) -> PointCloud {
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
fn zero_noise_reconstruction_exact_on_50_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(515);
    for case in 0..50 {
        let k = if case % 2 == 0 { 2 } else { 3 };
        let n = rng.gen_range(30..=400);
        let cloud = uniform_cloud(n, k, &mut rng);
        let d = squared_distance_matrix(&cloud);
        let rho = rho_default(n, k).unwrap();
        let strategy = match case % 3 {
            0 => Strategy::Nearest,
            1 => Strategy::Random { seed: case as u64 },
            _ if k == 2 => Strategy::Stable2d { delta: 0.3 },
            _ => Strategy::Nearest,
        };
        let g = build_anchor_graph(&d, &d, k, rho, strategy).unwrap();
        let report = reconstruct(&g, &BiasMatrix::zeros(n), k, Some(&cloud)).unwrap();
        let loss = report.loss.unwrap();
        assert!(
            loss <= 1e-7,
            "case {case}: n={n} k={k} strategy={} loss={loss}",
            strategy.tag()
        );
    }
}

/// For valid stable configurations the reconstruction error responds
/// linearly to small input noise, with per-input slope below the
/// sensitivity constant `lambda_phi` (10% headroom), measured at
/// sigma = 1e-4 and 1e-3.
#[test]
fn trilateration_error_scales_linearly_within_lambda_phi() {
    let mut rng = ChaCha8Rng::seed_from_u64(616);
    let cloud = uniform_cloud(400, 2, &mut rng);
    let d = squared_distance_matrix(&cloud);
    let rho = rho_default(400, 2).unwrap();
    let sample = farthest_sampling(&d, rho, 0).unwrap();
    let mut anchors = sample.indices.clone();
    anchors.sort_unstable();
    let e = sample.radius;
    let delta = e;
    let lambda_phi = 1.0 / stable_angle_halfwidth(e, delta).cos();
    let budget = lambda_phi * 1.1;

    let mut configs = 0;
    for v in 0..cloud.len() {
        if configs >= 25 {
            break;
        }
        if anchors.contains(&v) {
            continue;
        }
        let triple = match select_stable_anchors_2d(v, &anchors, &d, e, delta) {
            Ok(t) => t,
            Err(_) => continue,
        };
        let p = cloud.point(v);
        let r_i = cloud.point(triple.r_i);
        let r_j = cloud.point(triple.r_j);
        let r_k = cloud.point(triple.r_k);
        let d_i = d.get(v, triple.r_i).sqrt();
        let d_j = d.get(v, triple.r_j).sqrt();
        for sigma in [1e-4, 1e-3] {
            let mut slopes = Vec::new();
            for draw in 0..6 {
                let z = sigma * if draw % 2 == 0 { 1.0 } else { -1.0 } * (1.0 + draw as f64 / 6.0);
                // Perturb each scalar input on its own; Theorem-style
                // sensitivities are per input.
                let cases = [
                    trilaterate_2d(r_i, d_i + z, r_j, d_j, r_k),
                    trilaterate_2d(r_i, d_i, r_j, d_j + z, r_k),
                    trilaterate_2d(&[r_i[0] + z, r_i[1]], d_i, r_j, d_j, r_k),
                    trilaterate_2d(r_i, d_i, &[r_j[0], r_j[1] + z], d_j, r_k),
                ];
                for out in cases {
                    let out = out.unwrap();
                    assert!(!out.circle_miss);
                    slopes.push(sq_dist(&out.point, p).sqrt() / z.abs());
                }
            }
            let worst = slopes.iter().fold(0.0_f64, |m, &s| m.max(s));
            assert!(
                worst <= budget,
                "vertex {v} at sigma {sigma}: slope {worst} above lambda_phi*1.1 = {budget}"
            );
        }
        configs += 1;
    }
    assert!(configs >= 25, "not enough stable configurations: {configs}");
}
