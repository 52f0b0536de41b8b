//! Trajectory generation and end-effector tracing.
//!
//! A trajectory is a short program for the whole stack: bend toward a compass
//! direction, twist about the stack axis, or contract every joint. Each step
//! yields one rigid pose per module above the base; the inverse solver turns a
//! step into cable rest lengths, and [`relax`] replays those rest lengths
//! through an independent forward model to check that the structure settles
//! where the solver said it would.
//!
//! Bending treats each joint as a ball joint at the center of its saddle
//! cable network and splits the commanded angle evenly across the joints;
//! twisting does the same about the stack axis; contraction scales the
//! inter-module spacing. Steps interpolate linearly from the rest stack to
//! the final shape.

mod relax;

pub use relax::{
    free_node_forces, member_force, relax, total_potential, Damping, RelaxationParams,
    RelaxationReport, DEFAULT_NODE_MASS,
};

use crate::error::{Error, Result};
use crate::statics::Configuration;
use crate::structure::{
    reference_pose, route_lengths, ModulePose, TensegrityModel, TetraParams,
};
use nalgebra::{Isometry3, Matrix3, Point3, Rotation3, Unit, UnitQuaternion, Vector3};

/// Which family of shapes a trajectory drives through.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionMode {
    /// Tilt the stack toward a horizontal direction.
    Bend,
    /// Rotate successive modules about the stack axis.
    Twist,
    /// Shrink the spacing between modules.
    Contract,
}

/// A commanded motion: the final shape plus how many interpolation steps to
/// take getting there.
///
/// `magnitude` is an angle in radians for [`MotionMode::Bend`] and
/// [`MotionMode::Twist`] and a spacing ratio in (0, 1] for
/// [`MotionMode::Contract`]. `azimuth` picks the bending plane (radians from
/// the +y axis toward +x); it is ignored by the other modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySpec {
    pub mode: MotionMode,
    pub magnitude: f64,
    pub azimuth: f64,
    pub steps: usize,
}

impl TrajectorySpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidParameter(
                "trajectory needs at least one step".into(),
            ));
        }
        if !self.azimuth.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "azimuth must be finite, got {}",
                self.azimuth
            )));
        }
        match self.mode {
            MotionMode::Bend | MotionMode::Twist => {
                if !self.magnitude.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "angle must be finite, got {}",
                        self.magnitude
                    )));
                }
            }
            MotionMode::Contract => {
                if !(self.magnitude > 0.0 && self.magnitude <= 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "contraction ratio must lie in (0, 1], got {}",
                        self.magnitude
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Generates the per-step module poses for a trajectory on a `module_count`
/// stack built from `params` and `joint_gap`.
///
/// Returns one pose list per step (step fractions 1/steps .. 1); each list
/// holds absolute placements for modules 2..=k, ready for
/// [`crate::ik::solve_pose`]. The base module never moves. Bend and Twist
/// distribute the commanded angle equally over the k-1 joints; Bend rotates
/// about the horizontal axis at `azimuth` through each joint center (the
/// center of the joint's saddle cable network, half a gap below the lower
/// triangle plane); Contract scales the inter-module spacing by the ratio.
///
/// A single-module stack has no joints, so Bend and Twist reject it.
pub fn pose_sequence(
    module_count: usize,
    params: &TetraParams,
    joint_gap: f64,
    spec: &TrajectorySpec,
) -> Result<Vec<Vec<ModulePose>>> {
    spec.validate()?;
    if module_count == 0 {
        return Err(Error::InvalidParameter(
            "module count must be at least 1".into(),
        ));
    }
    let h = params.height;
    if !(params.radius > 0.0 && h > 0.0 && params.radius.is_finite() && h.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "radius and height must be positive and finite, got {} and {}",
            params.radius, h
        )));
    }
    if !(joint_gap > 0.0 && joint_gap < h) {
        return Err(Error::InvalidParameter(format!(
            "joint gap must lie strictly between 0 and the module height {}, got {}",
            h, joint_gap
        )));
    }
    let k = module_count;
    if k < 2 && matches!(spec.mode, MotionMode::Bend | MotionMode::Twist) {
        return Err(Error::InvalidParameter(
            "bend and twist need at least two modules; a single module has no joints".into(),
        ));
    }
    let spacing = h - joint_gap;
    let mut sequence = Vec::with_capacity(spec.steps);
    for step in 1..=spec.steps {
        let fraction = step as f64 / spec.steps as f64;
        let mut poses = Vec::with_capacity(k - 1);
        match spec.mode {
            MotionMode::Bend => {
                // Horizontal rotation axis perpendicular to the bending
                // direction d = (sin az, cos az, 0); rotating about z x d
                // tilts +z toward d.
                let axis = Unit::new_normalize(Vector3::new(
                    -spec.azimuth.cos(),
                    spec.azimuth.sin(),
                    0.0,
                ));
                let per_joint = fraction * spec.magnitude / (k - 1) as f64;
                let mut carried = Isometry3::identity();
                for m in 2..=k {
                    let joint = m - 1;
                    let center = Point3::new(
                        0.0,
                        0.0,
                        (joint - 1) as f64 * spacing + h - 0.5 * joint_gap,
                    );
                    let turn = Isometry3::rotation_wrt_point(
                        UnitQuaternion::from_axis_angle(&axis, per_joint),
                        center,
                    );
                    // Each joint turns in as-built coordinates and is then
                    // carried along by everything below it.
                    carried *= turn;
                    let world = carried * reference_pose(m, params, joint_gap).isometry();
                    poses.push(ModulePose::from_isometry(&world));
                }
            }
            MotionMode::Twist => {
                let per_joint = fraction * spec.magnitude / (k - 1) as f64;
                for m in 2..=k {
                    let spin = Isometry3::new(
                        Vector3::zeros(),
                        Vector3::z() * ((m - 1) as f64 * per_joint),
                    );
                    let world = spin * reference_pose(m, params, joint_gap).isometry();
                    poses.push(ModulePose::from_isometry(&world));
                }
            }
            MotionMode::Contract => {
                let ratio = 1.0 + (spec.magnitude - 1.0) * fraction;
                for m in 2..=k {
                    let mut pose = reference_pose(m, params, joint_gap);
                    pose.translation.z = (m - 1) as f64 * spacing * ratio;
                    poses.push(pose);
                }
            }
        }
        sequence.push(poses);
    }
    Ok(sequence)
}

/// Current lengths of the actuated cable routes; one entry per route.
pub fn active_lengths(model: &TensegrityModel, config: &Configuration) -> Result<Vec<f64>> {
    route_lengths(model, config)
}

/// One sampled point of an end-effector trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    /// 1-based step index.
    pub step: usize,
    /// Centroid of the top module's triangle.
    pub position: Vector3<f64>,
    /// Angle between the top module's axis and vertical, degrees.
    pub bend_deg: f64,
    /// Rotation of the top module about its axis relative to the as-built
    /// stack, degrees.
    pub twist_deg: f64,
    /// Route lengths at this step, meters.
    pub active_lengths: Vec<f64>,
}

/// Traces the end effector through a sequence of configurations (posed or
/// relaxed). The top module's rigid orientation is recovered by a
/// least-squares fit against the module template, so slightly deformed
/// (relaxed) configurations are handled gracefully.
pub fn trace(model: &TensegrityModel, sequence: &[Configuration]) -> Result<Vec<TraceRecord>> {
    if sequence.is_empty() {
        return Err(Error::EmptySystem(
            "trace needs at least one configuration".into(),
        ));
    }
    let k = model.module_count();
    if model.node_count() != 4 * k {
        return Err(Error::InvalidParameter(format!(
            "model has {} nodes but {} modules; tracing needs four nodes per module",
            model.node_count(),
            k
        )));
    }
    let template: Vec<Vector3<f64>> =
        model.nodes()[0..4].iter().map(|n| n.position).collect();
    let top_ids: Vec<usize> = (0..4).map(|p| 4 * (k - 1) + p + 1).collect();
    let as_built: Vec<Vector3<f64>> = top_ids
        .iter()
        .map(|&id| model.nodes()[id - 1].position)
        .collect();
    let r_ref = fitted_rotation(&template, &as_built)?;
    let mut records = Vec::with_capacity(sequence.len());
    for (i, config) in sequence.iter().enumerate() {
        config.check_model(model)?;
        let top: Vec<Vector3<f64>> = top_ids.iter().map(|&id| config.position(id)).collect();
        let r_cur = fitted_rotation(&template, &top)?;
        let position = (top[1] + top[2] + top[3]) / 3.0;
        let axis_world = r_cur * Vector3::z();
        let bend_deg = axis_world.z.clamp(-1.0, 1.0).acos().to_degrees();
        // Twist: the z-component of the relative rotation, extracted by a
        // swing-twist split about the as-built axis.
        let rel = r_cur * r_ref.transpose();
        let quat =
            UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(rel));
        let mut w = quat.scalar();
        let mut vz = quat.vector().z;
        if w < 0.0 {
            w = -w;
            vz = -vz;
        }
        let twist_deg = (2.0 * vz.atan2(w)).to_degrees();
        records.push(TraceRecord {
            step: i + 1,
            position,
            bend_deg,
            twist_deg,
            active_lengths: route_lengths(model, config)?,
        });
    }
    Ok(records)
}

/// Best-fit rotation taking centered `local` points to centered `world`
/// points (Kabsch: SVD of the cross-covariance with a determinant
/// correction).
fn fitted_rotation(local: &[Vector3<f64>], world: &[Vector3<f64>]) -> Result<Matrix3<f64>> {
    let n = local.len() as f64;
    let lc: Vector3<f64> = local.iter().sum::<Vector3<f64>>() / n;
    let wc: Vector3<f64> = world.iter().sum::<Vector3<f64>>() / n;
    let mut h = Matrix3::zeros();
    for (a, b) in local.iter().zip(world) {
        h += (b - wc) * (a - lc).transpose();
    }
    let svd = h
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("orientation fit SVD did not converge".into()))?;
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let d = (u * v_t).determinant().signum();
    Ok(u * Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d)) * v_t)
}
