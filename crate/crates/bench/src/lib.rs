//! Shared fixtures for the criterion benches.

use latrem_core::{ConvexBody, Rotation};

/// The bodies the benches sweep over.
pub fn bench_bodies() -> Vec<(&'static str, ConvexBody)> {
    vec![
        ("disk", ConvexBody::ball(2)),
        ("supersphere8", ConvexBody::supersphere(2, 8).expect("valid supersphere")),
        ("ball3", ConvexBody::ball(3)),
    ]
}

/// A fixed generic planar rotation.
pub fn generic_rotation(d: usize) -> Rotation {
    if d == 2 {
        Rotation::from_angle(0.61803398875)
    } else {
        Rotation::identity(d)
    }
}
