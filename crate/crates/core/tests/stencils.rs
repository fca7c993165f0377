mod common;

use common::*;
use gfdm::pointcloud::{build_neighborhoods, NeighborStrategy};
use gfdm::projection::{ProjectedNeighborhood, ProjectionMode};
use gfdm::stencils::{
    advection_stencil, build_wls, directional_stencil, surface_divergence_apply, DiffusionField,
    DiffusionOptions, LaplacianOptions, MonomialBasis, StencilBuilder, StencilOptions, Target,
};
use gfdm::{GfdmError, PointCloud, Surface};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn line_neighborhood(offsets: &[f64]) -> ProjectedNeighborhood {
    let m = offsets.len();
    let h = offsets.iter().fold(0.0f64, |a, b| a.max(b.abs()));
    ProjectedNeighborhood {
        center: 0,
        members: (0..m).collect(),
        manifold_dim: 1,
        tangential: offsets.to_vec(),
        normal: vec![0.0; m],
        dist2: offsets.iter().map(|x| x * x).collect(),
        smoothing: vec![h; m],
        support_radius: h,
        mode: ProjectionMode::CentralNormal,
    }
}

fn plane_neighborhood(offsets: &[[f64; 2]]) -> ProjectedNeighborhood {
    let m = offsets.len();
    let d2: Vec<f64> = offsets.iter().map(|o| o[0] * o[0] + o[1] * o[1]).collect();
    let h = d2.iter().fold(0.0f64, |a, b| a.max(*b)).sqrt();
    ProjectedNeighborhood {
        center: 0,
        members: (0..m).collect(),
        manifold_dim: 2,
        tangential: offsets.iter().flat_map(|o| o.iter().copied()).collect(),
        normal: vec![0.0; m],
        dist2: d2,
        smoothing: vec![h; m],
        support_radius: h,
        mode: ProjectionMode::CentralNormal,
    }
}

#[test]
fn three_point_line_stencils() {
    let s = 0.05;
    let pr = line_neighborhood(&[0.0, -s, s]);
    let basis = MonomialBasis::new(1, 2).unwrap();
    let rows = build_wls(
        &pr,
        &basis,
        2.0,
        &[vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]],
    )
    .unwrap();
    let d1 = [0.0, -1.0 / (2.0 * s), 1.0 / (2.0 * s)];
    let d2 = [-2.0 / (s * s), 1.0 / (s * s), 1.0 / (s * s)];
    for m in 0..3 {
        assert!((rows[0][m] - d1[m]).abs() < 1e-10 * d1[1].abs());
        assert!((rows[1][m] - d2[m]).abs() < 1e-10 * d2[1].abs());
    }
    // derivative rows annihilate constants
    assert!(rows[0].iter().sum::<f64>().abs() < 1e-10 / s);
    assert!(rows[1].iter().sum::<f64>().abs() < 1e-10 / (s * s));
}

#[test]
fn five_point_cross_laplacian() {
    let s = 0.1;
    let cloud = flat_grid(5, 5, s, false);
    let nbs = build_neighborhoods(&cloud, NeighborStrategy::Knn(5)).unwrap();
    let z = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let c = 2 * 5 + 2;
    // rows for the interior point only: the corners of the grid have no
    // five-point cross and too few members for a quadratic fit
    let frames = vec![gfdm::frames::Frame::from_normals(&[z], 3).unwrap(); cloud.len()];
    let pr =
        vec![
            gfdm::projection::project(&cloud, &frames, &nbs[c], ProjectionMode::CentralNormal)
                .unwrap(),
        ];
    let b = StencilBuilder::new(&pr, &frames[c..=c], &StencilOptions::default()).unwrap();
    let lap = b.laplacian(&LaplacianOptions::default()).unwrap();
    let (cols, vals) = lap.row(0);
    for (&j, &v) in cols.iter().zip(vals) {
        let want = if j == c { -4.0 } else { 1.0 } / (s * s);
        assert!(
            (v - want).abs() < 1e-9 / (s * s),
            "column {j}: {v} vs {want}"
        );
    }
}

#[test]
fn single_point_has_insufficient_neighbors() {
    let cloud = PointCloud::new(vec![0.0, 0.0, 0.0], 3, 2, vec![1.0], vec![false]).unwrap();
    let nbs = build_neighborhoods(&cloud, NeighborStrategy::Knn(1)).unwrap();
    assert_eq!(nbs[0].members, vec![0]);
    let z = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    let frames = vec![gfdm::frames::Frame::from_normals(&[z], 3).unwrap()];
    let pr = gfdm::projection::project_all(&cloud, &frames, &nbs, ProjectionMode::CentralNormal)
        .unwrap();
    for order in 1..=3 {
        let opts = StencilOptions {
            order,
            weight_factor: 2.0,
        };
        assert!(matches!(
            StencilBuilder::new(&pr, &frames, &opts),
            Err(GfdmError::InsufficientNeighbors {
                point: 0,
                found: 1,
                ..
            })
        ));
    }
}

#[test]
fn flat_patch_gradients_and_divergence() {
    let s = 0.1;
    let cloud = flat_grid(9, 9, s, false);
    let xs: Vec<f64> = cloud.points().map(|p| p[0]).collect();
    let disc = discretize(cloud, 2, false);
    let b = disc.builder().unwrap();
    let grad = b.surface_gradient().unwrap();
    let gx = grad[0].apply(&xs);
    let gy = grad[1].apply(&xs);
    let gz = grad[2].apply(&xs);
    for i in 0..disc.len() {
        assert!((gx[i] - 1.0).abs() < 1e-9 && gy[i].abs() < 1e-9 && gz[i].abs() < 1e-9);
    }
    let n = disc.len();
    let constant: Vec<f64> = (0..n).flat_map(|_| [1.0, 0.0, 0.0]).collect();
    let div = surface_divergence_apply(&grad, &constant).unwrap();
    assert!(div.iter().all(|d| d.abs() < 1e-9));
    let radial: Vec<f64> = disc
        .cloud
        .points()
        .flat_map(|p| [p[0], p[1], 0.0])
        .collect();
    let div = surface_divergence_apply(&grad, &radial).unwrap();
    assert!(div.iter().all(|d| (d - 2.0).abs() < 1e-9));

    let v: Vec<f64> = constant.clone();
    let adv = advection_stencil(&grad, &v).unwrap();
    assert!(adv.apply(&xs).iter().all(|a| (a - 1.0).abs() < 1e-9));
    let zero = advection_stencil(&grad, &vec![0.0; 3 * n]).unwrap();
    assert!(zero.values().iter().all(|&c| c == 0.0));
}

#[test]
fn rotated_rows_preserve_norms_and_have_no_normal_part() {
    let disc = discretize(sampled(unit_sphere(), 800, 0.3, 4), 2, false);
    let b = disc.builder().unwrap();
    let tangent = b.tangent_gradient().unwrap();
    let grad = b.surface_gradient().unwrap();
    for i in 0..disc.len() {
        let nrm = disc.frames[i].normal(0);
        for m in 0..tangent[0].row(i).1.len() {
            let t2: f64 = tangent.iter().map(|t| t.row(i).1[m].powi(2)).sum();
            let g: Vec<f64> = grad.iter().map(|g| g.row(i).1[m]).collect();
            let g2: f64 = g.iter().map(|v| v * v).sum();
            assert!((t2 - g2).abs() <= 1e-12 * t2.max(1.0));
            let along: f64 = g.iter().zip(nrm.iter()).map(|(a, b)| a * b).sum();
            assert!(along.abs() <= 1e-12 * g2.sqrt().max(1.0));
        }
    }
    // direction t_1 recovers the tangent row, the normal direction gives zeros
    let n = disc.len();
    let t1: Vec<f64> = (0..n)
        .flat_map(|i| {
            disc.frames[i]
                .tangent(0)
                .iter()
                .copied()
                .collect::<Vec<_>>()
        })
        .collect();
    let d = directional_stencil(&grad, &t1).unwrap();
    let nn: Vec<f64> = (0..n)
        .flat_map(|i| disc.frames[i].normal(0).iter().copied().collect::<Vec<_>>())
        .collect();
    let dn = directional_stencil(&grad, &nn).unwrap();
    for i in 0..n {
        let scale = tangent[0]
            .row(i)
            .1
            .iter()
            .fold(0.0f64, |a, b| a.max(b.abs()));
        for (a, c) in d.row(i).1.iter().zip(tangent[0].row(i).1) {
            assert!((a - c).abs() < 1e-12 * scale);
        }
        assert!(dn.row(i).1.iter().all(|v| v.abs() < 1e-12 * scale));
    }
}

#[test]
fn sphere_gradient_and_laplacian_converge() {
    let mut errs = Vec::new();
    for n in [1000, 4000] {
        let disc = discretize(sampled(unit_sphere(), n, 0.0, 1), 2, true);
        let b = disc.builder().unwrap();
        let grad = b.surface_gradient().unwrap();
        let x: Vec<f64> = disc.cloud.points().map(|p| p[0]).collect();
        let xy: Vec<f64> = disc.cloud.points().map(|p| p[0] * p[1]).collect();
        let mut eg: f64 = 0.0;
        for d in 0..3 {
            let g = grad[d].apply(&x);
            for (i, p) in disc.cloud.points().enumerate() {
                let exact = if d == 0 { 1.0 } else { 0.0 } - p[0] * p[d];
                eg = eg.max((g[i] - exact).abs());
            }
        }
        let lap = b
            .laplacian(&LaplacianOptions::default())
            .unwrap()
            .apply(&xy);
        let el = (lap
            .iter()
            .zip(&xy)
            .map(|(l, u)| (l + 6.0 * u).powi(2))
            .sum::<f64>()
            / xy.len() as f64)
            .sqrt();
        errs.push((eg, el));
    }
    // a fourfold increase in N halves h; quadratic fits give second-order
    // gradients and, on irregular points, first-order second derivatives
    assert!(errs[1].0 < errs[0].0 / 2.5, "gradient errors {errs:?}");
    assert!(errs[1].1 < errs[0].1 / 1.6, "laplacian errors {errs:?}");
    assert!(errs[1].1 < 0.01);
}

#[test]
fn diffusion_reduces_to_scaled_laplacian() {
    let disc = discretize(sampled(paper_torus(), 1200, 0.3, 2), 2, false);
    let b = disc.builder().unwrap();
    let lap = b.laplacian(&LaplacianOptions::default()).unwrap();
    let n = disc.len();
    for c0 in [1.0, 3.5] {
        let d = b
            .diffusion(
                &DiffusionField::Scalar(vec![c0; n]),
                &DiffusionOptions::default(),
            )
            .unwrap();
        for (a, l) in d.stencil.values().iter().zip(lap.values()) {
            assert!((a - c0 * l).abs() <= 1e-10 * c0 * l.abs().max(1.0));
        }
    }
    // an isotropic tensor gives the same rows
    let t = DMatrix::identity(3, 3) * 2.0;
    let d = b
        .diffusion(
            &DiffusionField::Tensor(vec![t; n]),
            &DiffusionOptions::default(),
        )
        .unwrap();
    for (a, l) in d.stencil.values().iter().zip(lap.values()) {
        assert!((a - 2.0 * l).abs() <= 1e-10 * l.abs().max(1.0));
    }
}

#[test]
fn invalid_diffusion_fields_are_rejected() {
    let disc = discretize(sampled(unit_sphere(), 300, 0.0, 0), 2, true);
    let b = disc.builder().unwrap();
    let n = disc.len();
    let mut kappa = vec![1.0; n];
    kappa[7] = -1.0;
    assert!(matches!(
        b.diffusion(&DiffusionField::Scalar(kappa), &DiffusionOptions::default()),
        Err(GfdmError::NonSpd { point: 7 })
    ));
    let mut t = vec![DMatrix::identity(3, 3); n];
    t[3][(0, 1)] = 0.5;
    assert!(matches!(
        b.diffusion(&DiffusionField::Tensor(t), &DiffusionOptions::default()),
        Err(GfdmError::NonSpd { point: 3 })
    ));
    let jump = DiffusionOptions {
        jump: true,
        ..Default::default()
    };
    assert!(b
        .diffusion(
            &DiffusionField::Tensor(vec![DMatrix::identity(3, 3); n]),
            &jump
        )
        .is_err());
}

#[test]
fn jump_rows_meet_extra_conditions_on_a_two_region_field() {
    let w = Surface::WavePatch {
        x_range: (0.0, 4.0),
        y_range: (0.0, 2.0),
    };
    let cloud = gfdm::pointcloud::sample_surface(&w, 0.12, 0.3, 9).unwrap();
    let disc = discretize(cloud, 2, false);
    let kappa: Vec<f64> = disc
        .cloud
        .points()
        .map(|p| if p[0] < 2.0 { 100.0 } else { 1.0 })
        .collect();
    let b = disc.builder().unwrap();
    let opts = DiffusionOptions {
        jump: true,
        ..Default::default()
    };
    let d = b
        .diffusion(&DiffusionField::Scalar(kappa.clone()), &opts)
        .unwrap();
    // away from the interface the extra conditions hold exactly and the row
    // applied to 1/kappa gives -lap log kappa = 0
    let inv: Vec<f64> = kappa.iter().map(|k| 1.0 / k).collect();
    for i in 0..disc.len() {
        let far = disc.neighborhoods[i]
            .members
            .iter()
            .all(|&j| (kappa[j] - kappa[i]).abs() == 0.0);
        if far {
            assert!(
                d.jump_residual[i] < 1e-9,
                "point {i}: {}",
                d.jump_residual[i]
            );
            let v = d.stencil.apply_at(i, &inv);
            let (_, c) = d.stencil.row(i);
            let scale: f64 = c.iter().map(|x| x.abs()).sum::<f64>() / kappa[i];
            assert!(v.abs() < 1e-9 * scale, "point {i}: {v}");
        }
    }
    // monomial consistency holds everywhere, including interface rows
    let targets = |i: usize| Target::ScalarDiffusion {
        kappa: kappa[i],
        gradient: {
            let f = &disc.frames[i];
            let g = &d.grad_log_kappa[i * 3..i * 3 + 3];
            (0..2)
                .map(|a| kappa[i] * f.tangent(a).iter().zip(g).map(|(t, x)| t * x).sum::<f64>())
                .collect()
        },
    };
    assert!(b.consistency_residual(&d.stencil, targets) < 1e-9);
}

#[test]
fn optimized_laplacian_has_larger_central_weight() {
    let disc = discretize(sampled(paper_torus(), 1500, 0.3, 3), 2, false);
    let b = disc.builder().unwrap();
    let plain = b.laplacian(&LaplacianOptions::default()).unwrap();
    let opt = b
        .laplacian(&LaplacianOptions {
            optimize: true,
            center_value: None,
        })
        .unwrap();
    let g = |row: &[f64]| row.iter().map(|c| c * c).sum::<f64>() / (row[0] * row[0]);
    for i in 0..disc.len() {
        assert!(g(opt.row(i).1) <= g(plain.row(i).1) * (1.0 + 1e-12) + 1e-12);
    }
    assert!(b.consistency_residual(&opt, |_| Target::Laplacian) < 1e-9);
    assert!(b.consistency_residual(&plain, |_| Target::Laplacian) < 1e-9);
}

/// KKT oracle: minimize sum (c/W)^2 subject to M^T c = b.
fn kkt(weights: &[f64], m: &DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let (rows, cols) = m.shape();
    let mut k = DMatrix::zeros(rows + cols, rows + cols);
    for j in 0..rows {
        k[(j, j)] = 2.0 / (weights[j] * weights[j]);
    }
    k.view_mut((0, rows), (rows, cols)).copy_from(m);
    k.view_mut((rows, 0), (cols, rows))
        .copy_from(&m.transpose());
    let mut rhs = DVector::zeros(rows + cols);
    for a in 0..cols {
        rhs[rows + a] = b[a];
    }
    let sol = k.lu().solve(&rhs).expect("kkt solve");
    sol.iter().take(rows).copied().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rows_match_the_kkt_oracle(
        pts in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 7..=7),
        order in 1usize..=2,
        wf in 0.5f64..4.0,
    ) {
        let mut offsets = vec![[0.0, 0.0]];
        offsets.extend(pts.iter().map(|&(x, y)| [x, y]));
        let pr = plane_neighborhood(&offsets);
        let basis = MonomialBasis::new(2, order).unwrap();
        let w = pr.weights(wf);
        let m = DMatrix::from_fn(offsets.len(), basis.len(), |j, a| basis.eval(&offsets[j])[a]);
        let gram = m.transpose() * DMatrix::from_diagonal(&DVector::from_iterator(w.len(), w.iter().map(|v| v * v))) * &m;
        let svd = gram.clone().svd(false, false);
        prop_assume!(svd.singular_values.min() > 1e-6 * svd.singular_values.max());
        let targets: Vec<Vec<f64>> = (0..basis.len()).map(|a| {
            let mut b = vec![0.0; basis.len()];
            b[a] = 1.0;
            b
        }).collect();
        let rows = build_wls(&pr, &basis, wf, &targets).unwrap();
        for (b, row) in targets.iter().zip(&rows) {
            let oracle = kkt(&w, &m, b);
            let scale = oracle.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
            for (x, y) in row.iter().zip(&oracle) {
                prop_assert!((x - y).abs() < 1e-8 * scale, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn gradient_rows_annihilate_constants(seed in 0u64..1000) {
        let disc = discretize(sampled(unit_sphere(), 200, 0.4, seed), 2, false);
        let b = disc.builder().unwrap();
        let grad = b.surface_gradient().unwrap();
        for g in &grad {
            for i in 0..g.len() {
                let (_, v) = g.row(i);
                let scale: f64 = v.iter().map(|x| x.abs()).sum();
                prop_assert!(v.iter().sum::<f64>().abs() < 1e-10 * scale.max(1.0));
            }
        }
    }
}
