//! The standard pipeline from a cloud to tangent-plane neighborhoods.

use crate::error::Result;
use crate::frames::{boundary_normals, estimate_frames, Frame, FrameOptions, NormalSource};
use crate::pointcloud::{
    adopt_support_radii, build_neighborhoods, NeighborStrategy, Neighborhood, PointCloud,
};
use crate::projection::{project_all, ProjectedNeighborhood, ProjectionMode};
use crate::stencils::{StencilBuilder, StencilOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscretizationOptions {
    pub strategy: NeighborStrategy,
    pub normals: NormalSource,
    pub projection: ProjectionMode,
    pub stencil: StencilOptions,
    /// With kNN neighborhoods, replace smoothing lengths by the support radii.
    pub adopt_support_radii: bool,
}

impl Default for DiscretizationOptions {
    fn default() -> Self {
        DiscretizationOptions {
            strategy: NeighborStrategy::Knn(15),
            normals: NormalSource::WeightedPca,
            projection: ProjectionMode::CentralNormal,
            stencil: StencilOptions::default(),
            adopt_support_radii: true,
        }
    }
}

pub struct Discretization {
    pub cloud: PointCloud,
    pub neighborhoods: Vec<Neighborhood>,
    pub frames: Vec<Frame>,
    pub projections: Vec<ProjectedNeighborhood>,
    pub options: DiscretizationOptions,
}

impl Discretization {
    pub fn new(mut cloud: PointCloud, options: DiscretizationOptions) -> Result<Self> {
        let neighborhoods = build_neighborhoods(&cloud, options.strategy)?;
        if options.adopt_support_radii
            && matches!(options.strategy, NeighborStrategy::Knn(k) if k > 1)
        {
            adopt_support_radii(&mut cloud, &neighborhoods)?;
        }
        let frame_opts = FrameOptions {
            source: options.normals,
            weight_factor: options.stencil.weight_factor,
        };
        let mut frames = estimate_frames(&cloud, &neighborhoods, &frame_opts)?;
        if cloud.boundary_flags().iter().any(|&b| b) {
            boundary_normals(&cloud, &neighborhoods, &mut frames)?;
        }
        let projections = project_all(&cloud, &frames, &neighborhoods, options.projection)?;
        Ok(Discretization {
            cloud,
            neighborhoods,
            frames,
            projections,
            options,
        })
    }

    pub fn len(&self) -> usize {
        self.cloud.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    pub fn builder(&self) -> Result<StencilBuilder<'_>> {
        StencilBuilder::new(&self.projections, &self.frames, &self.options.stencil)
    }

    /// Mean support radius, the length scale used for refinement studies.
    pub fn mean_support_radius(&self) -> f64 {
        self.neighborhoods.iter().map(|n| n.radius).sum::<f64>() / self.len() as f64
    }
}
