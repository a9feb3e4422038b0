//! Built-in objects, grippers and noise profiles.
//!
//! The objects are coarse parametric analogs of a household benchmark set.
//! Only their relative properties matter: three clamp sizes sharing one
//! outline, a heavy mustard bottle with a small cap on top, slippery
//! strawberry and pear.

use std::f64::consts::FRAC_PI_2;

use super::noise::NoiseProfile;
use super::object::ObjectModel;
use super::primitive::Primitive;
use crate::domain::GripperSpec;

pub const OBJECT_NAMES: [&str; 10] = [
    "ball",
    "screwdriver",
    "medium_clamp",
    "large_clamp",
    "xl_clamp",
    "banana",
    "strawberry",
    "pear",
    "mug",
    "mustard",
];

fn clamp(scale: f64, mass: f64) -> (Vec<Primitive>, f64, f64) {
    let outline = [
        [-0.06, -0.012],
        [0.04, -0.012],
        [0.04, -0.03],
        [0.065, -0.03],
        [0.065, 0.03],
        [0.04, 0.03],
        [0.04, 0.012],
        [-0.06, 0.012],
    ]
    .map(|[x, y]| [x * scale, y * scale])
    .to_vec();
    (
        vec![Primitive::Prism {
            outline,
            z_min: 0.0,
            z_max: 0.03 * scale,
        }],
        mass,
        0.6,
    )
}

fn definition(name: &str) -> (Vec<Primitive>, f64, f64) {
    match name {
        "ball" => (
            vec![Primitive::Sphere {
                center: [0.0, 0.0, 0.0335],
                radius: 0.0335,
            }],
            0.058,
            0.8,
        ),
        "screwdriver" => (
            vec![
                Primitive::Capsule {
                    a: [-0.07, 0.0, 0.016],
                    b: [-0.005, 0.0, 0.016],
                    radius: 0.016,
                },
                Primitive::Cylinder {
                    a: [-0.01, 0.0, 0.016],
                    b: [0.09, 0.0, 0.016],
                    radius: 0.003,
                },
            ],
            0.1,
            0.5,
        ),
        "medium_clamp" => clamp(0.7, 0.06),
        "large_clamp" => clamp(1.0, 0.125),
        "xl_clamp" => clamp(1.3, 0.2),
        "banana" => (
            vec![Primitive::SweptArc {
                center: [-0.088, 0.0, 0.018],
                arc_radius: 0.1,
                tube_radius: 0.018,
                half_angle: 0.87,
                yaw: 0.0,
                vertical: false,
            }],
            0.12,
            0.5,
        ),
        "strawberry" => (
            vec![
                Primitive::Frustum {
                    base: [0.0, 0.0, 0.0],
                    height: 0.035,
                    bottom_radius: 0.01,
                    top_radius: 0.022,
                },
                Primitive::Sphere {
                    center: [0.0, 0.0, 0.03],
                    radius: 0.025,
                },
            ],
            0.02,
            0.3,
        ),
        "pear" => (
            vec![
                Primitive::Sphere {
                    center: [0.0, 0.0, 0.033],
                    radius: 0.033,
                },
                Primitive::Sphere {
                    center: [0.0, 0.0, 0.075],
                    radius: 0.022,
                },
            ],
            0.15,
            0.35,
        ),
        "mug" => (
            vec![
                Primitive::Tube {
                    base: [0.0, 0.0, 0.0],
                    height: 0.085,
                    outer_radius: 0.035,
                    inner_radius: 0.031,
                    floor: 0.006,
                },
                Primitive::SweptArc {
                    center: [0.033, 0.0, 0.045],
                    arc_radius: 0.022,
                    tube_radius: 0.005,
                    half_angle: FRAC_PI_2,
                    yaw: 0.0,
                    vertical: true,
                },
            ],
            0.12,
            0.5,
        ),
        "mustard" => (
            vec![
                Primitive::Cuboid {
                    center: [0.0, 0.0, 0.08],
                    half_extents: [0.0475, 0.029, 0.08],
                    yaw: 0.0,
                    rounding: 0.01,
                },
                Primitive::Cylinder {
                    a: [0.025, 0.0, 0.155],
                    b: [0.025, 0.0, 0.185],
                    radius: 0.012,
                },
            ],
            0.6,
            0.35,
        ),
        other => unreachable!("unknown catalog object {other}"),
    }
}

/// The ten built-in objects in catalog order.
pub fn default_catalog() -> Vec<ObjectModel> {
    OBJECT_NAMES
        .iter()
        .map(|name| {
            let (prims, mass, mu) = definition(name);
            ObjectModel::new(*name, prims, mass, mu).expect("built-in object is valid")
        })
        .collect()
}

/// Built-in grippers: `franka-like` and `robotiq-like`. Forces and strokes
/// are configurable defaults, not measured hardware values.
pub fn default_grippers() -> Vec<(String, GripperSpec)> {
    vec![
        ("franka-like".to_string(), GripperSpec::franka_like()),
        ("robotiq-like".to_string(), GripperSpec::robotiq_like()),
    ]
}

/// Lighting and camera conditions expressed as depth noise.
pub fn default_noise_profiles() -> Vec<(String, NoiseProfile)> {
    vec![
        ("clean".to_string(), NoiseProfile::clean()),
        (
            "realsense@60lux".to_string(),
            NoiseProfile::new(0.001, 0.005, 0, 0),
        ),
        (
            "realsense@340lux".to_string(),
            NoiseProfile::new(0.003, 0.02, 0, 0),
        ),
        ("zed".to_string(), NoiseProfile::new(0.0005, 0.0, 2, 0)),
    ]
}
