mod common;

use common::*;
use gfdm::advection::{superbee, Reconstruction, UpwindScheme};
use gfdm::Discretization;
use proptest::prelude::*;

fn scheme(disc: &Discretization, mode: Reconstruction, v: [f64; 3]) -> UpwindScheme {
    let grad = disc.builder().unwrap().surface_gradient().unwrap();
    let vel: Vec<f64> = (0..disc.len()).flat_map(|_| v).collect();
    UpwindScheme::new(mode, &disc.cloud, &grad, &vel).unwrap()
}

fn interior(disc: &Discretization, margin: f64, lo: f64, hi: f64) -> Vec<usize> {
    (0..disc.len())
        .filter(|&i| {
            let p = disc.cloud.point(i);
            p[0] > lo + margin && p[0] < hi - margin && p[1] > lo + margin && p[1] < hi - margin
        })
        .collect()
}

#[test]
fn constants_are_stationary() {
    let disc = discretize(
        sampled(
            gfdm::Surface::Cone {
                slope: 1.0,
                z_min: -6.0,
                z_max: 0.0,
            },
            1500,
            0.3,
            3,
        ),
        2,
        false,
    );
    let vel: Vec<f64> = disc
        .cloud
        .points()
        .flat_map(|p| [-p[1], p[0], 0.0])
        .collect();
    let grad = disc.builder().unwrap().surface_gradient().unwrap();
    for mode in [Reconstruction::PureUpwind, Reconstruction::MusclSuperbee] {
        let s = UpwindScheme::new(mode, &disc.cloud, &grad, &vel).unwrap();
        let r = s.rhs(&vec![0.7; disc.len()]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12), "{mode}");
    }
}

#[test]
fn upwind_on_linear_data_in_a_flat_patch() {
    let (nx, s) = (14, 0.1);
    // radius neighborhoods are symmetric on a grid
    let mut cloud = flat_grid(nx, nx, s, false);
    cloud.set_smoothing_lengths(vec![2.1 * s; nx * nx]).unwrap();
    let disc = discretize_with(cloud, gfdm::NeighborStrategy::Radius);
    let phi: Vec<f64> = disc.cloud.points().map(|p| p[0]).collect();
    let hi = (nx - 1) as f64 * s;
    let pts = interior(&disc, 2.5 * s, 0.0, hi);
    assert!(!pts.is_empty());
    let up = scheme(&disc, Reconstruction::PureUpwind, [1.0, 0.0, 0.0])
        .rhs(&phi)
        .unwrap();
    let mu = scheme(&disc, Reconstruction::MusclSuperbee, [1.0, 0.0, 0.0])
        .rhs(&phi)
        .unwrap();
    for &i in &pts {
        // symmetric stencils split the derivative evenly between both sides
        assert!((up[i] + 1.0).abs() < 1e-8, "upwind at {i}: {}", up[i]);
        // linear data gives r = 1, so the reconstruction is exact
        assert!((mu[i] + 1.0).abs() < 1e-8, "muscl at {i}: {}", mu[i]);
    }
}

#[test]
fn zero_limiter_reduces_muscl_to_upwind() {
    let disc = discretize(sampled(paper_torus(), 900, 0.3, 8), 2, false);
    let vel: Vec<f64> = disc
        .cloud
        .points()
        .flat_map(|p| [-p[1], p[0], 0.0])
        .collect();
    let grad = disc.builder().unwrap().surface_gradient().unwrap();
    let phi: Vec<f64> = disc
        .cloud
        .points()
        .map(|p| (2.0 * p[0]).sin() + p[2])
        .collect();
    let up = UpwindScheme::new(Reconstruction::PureUpwind, &disc.cloud, &grad, &vel)
        .unwrap()
        .rhs(&phi)
        .unwrap();
    let mu = UpwindScheme::new(Reconstruction::MusclSuperbee, &disc.cloud, &grad, &vel)
        .unwrap()
        .with_limiter(|_| 0.0)
        .rhs(&phi)
        .unwrap();
    assert_eq!(up, mu);
}

#[test]
fn linearization_reproduces_the_rhs() {
    let disc = discretize(sampled(paper_torus(), 900, 0.3, 8), 2, false);
    let vel: Vec<f64> = disc
        .cloud
        .points()
        .flat_map(|p| [-p[1], p[0], 0.0])
        .collect();
    let grad = disc.builder().unwrap().surface_gradient().unwrap();
    let phi: Vec<f64> = disc
        .cloud
        .points()
        .map(|p| (-4.0 * (p[0] - 1.0).powi(2)).exp())
        .collect();
    for mode in [Reconstruction::PureUpwind, Reconstruction::MusclSuperbee] {
        let s = UpwindScheme::new(mode, &disc.cloud, &grad, &vel).unwrap();
        let a = s.linearize(&phi).unwrap().matvec(&phi);
        let r = s.rhs(&phi).unwrap();
        assert!(max_abs_diff(&a, &r) < 1e-10);
    }
}

proptest! {
    #[test]
    fn superbee_stays_in_range(r in -10.0f64..10.0) {
        let v = superbee(r);
        prop_assert!((0.0..=2.0).contains(&v));
        if r <= 0.0 {
            prop_assert_eq!(v, 0.0);
        }
        // symmetry property of the limiter: Psi(r) / r = Psi(1 / r)
        if r > 0.0 {
            prop_assert!((v / r - superbee(1.0 / r)).abs() < 1e-12);
        }
    }
}
