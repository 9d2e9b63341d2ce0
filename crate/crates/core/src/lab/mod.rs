//! Concrete limsup families and empirical dimension estimates.

pub mod content;
pub mod covering;
pub mod family;

pub use content::{outer_content_estimate, ContentEstimate, ContentSet, DyadicCube};
pub use covering::{
    count_cells, covering_counts, dyadic_starts, intersect_unions, intersection_experiment, AxisBox,
    CoveringCountCurve, IntersectionReport, DEFAULT_CELL_CAP,
};
pub use family::{
    generate_diophantine, generate_diophantine_scaled, DiophantineFamily, FamilyKind, Generation, LimsupFamily,
    RadiusLaw, VITALI_RADIUS_CAP,
};
