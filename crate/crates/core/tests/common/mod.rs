#![allow(dead_code)]

use gfdm::frames::NormalSource;
use gfdm::pointcloud::sample_surface;
use gfdm::{Discretization, DiscretizationOptions, PointCloud, Surface};

pub fn flat_grid(nx: usize, ny: usize, s: f64, boundary: bool) -> PointCloud {
    let mut p = Vec::new();
    let mut b = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            p.extend([i as f64 * s, j as f64 * s, 0.0]);
            b.push(boundary && (i == 0 || j == 0 || i == nx - 1 || j == ny - 1));
        }
    }
    let n = b.len();
    PointCloud::new(p, 3, 2, vec![s / 0.3; n], b).unwrap()
}

pub fn sampled(surface: Surface, n_target: usize, jitter: f64, seed: u64) -> PointCloud {
    let spacing = (surface.area() / n_target as f64).sqrt();
    sample_surface(&surface, spacing, jitter, seed).unwrap()
}

pub fn discretize(cloud: PointCloud, order: usize, analytic: bool) -> Discretization {
    let mut opts = DiscretizationOptions::default();
    opts.stencil.order = order;
    if analytic {
        opts.normals = NormalSource::Analytic;
    }
    Discretization::new(cloud, opts).unwrap()
}

pub fn unit_sphere() -> Surface {
    Surface::Sphere { radius: 1.0 }
}

pub fn paper_torus() -> Surface {
    Surface::Torus {
        major: 1.0,
        minor: 1.0 / 3.0,
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

pub fn discretize_with(cloud: PointCloud, strategy: gfdm::NeighborStrategy) -> Discretization {
    let opts = DiscretizationOptions {
        strategy,
        ..Default::default()
    };
    Discretization::new(cloud, opts).unwrap()
}
