//! Dynamic relaxation: a forward model that settles a cable structure into
//! static equilibrium by integrating damped fictitious dynamics.
//!
//! Every member is a linear spring. Cables are unilateral: while stretched
//! they pull with K·(l - l0) and once slack they exert exactly nothing. Bars
//! are stiff bilateral springs around their as-built length, which keeps the
//! whole model smooth and solver-free at the cost of parts-per-million bar
//! strain. Free nodes carry a common fictitious mass and step forward with an
//! explicit Euler integrator; kinetic damping (zeroing all velocities
//! whenever the total kinetic energy drops) removes energy without biasing
//! the equilibrium, and a viscous drag term is available as an alternative.
//!
//! This integrator is deliberately independent of the static solve pipeline:
//! it never sees force densities or equilibrium matrices, so agreement
//! between the two is meaningful evidence that both are right.

use crate::error::{Error, Result};
use crate::statics::{Configuration, LoadVector};
use crate::structure::{MemberKind, NodeId, TensegrityModel};
use nalgebra::Vector3;

/// Fictitious mass per free node, kg. A built module weighs about 14 g, so a
/// quarter of that per node keeps the time-step heuristic near the physical
/// scale.
pub const DEFAULT_NODE_MASS: f64 = 0.0035;

/// How the fictitious dynamics lose energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Damping {
    /// Zero every velocity whenever total kinetic energy drops between
    /// steps. Parameter-free and robust; the default.
    Kinetic,
    /// Linear drag with the given coefficient, N·s/m.
    Viscous(f64),
}

/// Integration controls for [`relax`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationParams {
    /// Explicit Euler step, s.
    pub time_step: f64,
    /// Fictitious mass of each free node, kg.
    pub node_mass: f64,
    pub damping: Damping,
    pub max_iterations: usize,
    /// Convergence bound on the largest nodal residual force, N.
    pub force_tolerance: f64,
    /// Convergence bound on total kinetic energy, J.
    pub kinetic_tolerance: f64,
}

impl Default for RelaxationParams {
    fn default() -> Self {
        RelaxationParams {
            // Sized for a node carrying a few bar-stiffness members; prefer
            // `for_model`, which measures the actual model.
            time_step: 0.5
                * (DEFAULT_NODE_MASS / (4.0 * crate::structure::DEFAULT_BAR_STIFFNESS)).sqrt(),
            node_mass: DEFAULT_NODE_MASS,
            damping: Damping::Kinetic,
            max_iterations: 200_000,
            force_tolerance: 1e-5,
            kinetic_tolerance: 1e-12,
        }
    }
}

impl RelaxationParams {
    /// Defaults with the time step tuned to the model's stiffest node:
    /// dt = 0.5·sqrt(node_mass / K), where K is the largest sum of member
    /// stiffnesses meeting at one node. By the Gershgorin bound the stiffness
    /// matrix's largest eigenvalue is at most 2K, so the stability limit of
    /// the explicit integrator is no tighter than sqrt(2·node_mass/K) and
    /// this choice keeps a 2.8x margin. Sizing by the stiffest single member
    /// instead is not enough: three bars meet at every node here, and the
    /// resulting sqrt(3) frequency increase diverges in practice.
    pub fn for_model(model: &TensegrityModel) -> Self {
        let mut nodal = vec![0.0_f64; model.node_count()];
        for member in model.members() {
            nodal[member.k - 1] += member.stiffness;
            nodal[member.j - 1] += member.stiffness;
        }
        let k_max = nodal.iter().copied().fold(f64::MIN, f64::max);
        let mut params = RelaxationParams::default();
        params.time_step = 0.5 * (params.node_mass / k_max).sqrt();
        params
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("time step", self.time_step),
            ("node mass", self.node_mass),
            ("force tolerance", self.force_tolerance),
            ("kinetic tolerance", self.kinetic_tolerance),
        ];
        for (what, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{what} must be positive and finite, got {value}"
                )));
            }
        }
        if let Damping::Viscous(c) = self.damping {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "viscous coefficient must be nonnegative and finite, got {c}"
                )));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Diagnostics from a completed [`relax`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationReport {
    /// Integration steps taken before convergence.
    pub iterations: usize,
    /// Largest nodal residual force at the final state, N.
    pub peak_residual_force: f64,
    /// Total kinetic energy at the final state, J.
    pub kinetic_energy: f64,
    /// Smallest cable force observed at any step, N. Never negative: slack
    /// cables exert exactly zero.
    pub min_cable_force: f64,
    /// Final member forces in connectivity row order (cables then bars), N.
    /// Cable entries are tensions (nonnegative); bar entries are signed, with
    /// compression negative.
    pub member_forces: Vec<f64>,
}

/// Axial force of one member at the given current length. Cables pull only
/// while stretched; bars push back on both sides of their rest length.
pub fn member_force(kind: MemberKind, stiffness: f64, length: f64, rest_length: f64) -> f64 {
    let force = stiffness * (length - rest_length);
    match kind {
        MemberKind::Cable => force.max(0.0),
        MemberKind::Bar => force,
    }
}

/// Member table flattened for the integration loop: 0-based endpoint
/// indices, stiffness, rest length and kind per connectivity row.
struct ForceTable {
    ends: Vec<(usize, usize)>,
    stiffness: Vec<f64>,
    rest: Vec<f64>,
    kinds: Vec<MemberKind>,
    cable_count: usize,
}

impl ForceTable {
    /// Cable rest lengths come from the caller (typically an inverse solve);
    /// bars rest at their as-built length unless the model stores an
    /// explicit override.
    fn build(model: &TensegrityModel, cable_rest_lengths: &[f64]) -> Result<ForceTable> {
        if model.member_count() == 0 {
            return Err(Error::EmptySystem("model has no members to relax".into()));
        }
        if cable_rest_lengths.len() != model.cable_count() {
            return Err(Error::DimensionMismatch {
                what: "cable rest length count",
                expected: model.cable_count(),
                got: cable_rest_lengths.len(),
            });
        }
        let rows = model.row_members();
        let mut table = ForceTable {
            ends: Vec::with_capacity(rows.len()),
            stiffness: Vec::with_capacity(rows.len()),
            rest: Vec::with_capacity(rows.len()),
            kinds: Vec::with_capacity(rows.len()),
            cable_count: model.cable_count(),
        };
        for (row, member) in rows.iter().enumerate() {
            let rest = match member.kind {
                MemberKind::Cable => cable_rest_lengths[row],
                MemberKind::Bar => {
                    let as_built = (model.nodes()[member.j - 1].position
                        - model.nodes()[member.k - 1].position)
                        .norm();
                    member.rest_length.unwrap_or(as_built)
                }
            };
            if !(rest > 0.0 && rest.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "member {} rest length must be positive and finite, got {rest}",
                    member.id
                )));
            }
            table.ends.push((member.k - 1, member.j - 1));
            table.stiffness.push(member.stiffness);
            table.rest.push(rest);
            table.kinds.push(member.kind);
        }
        Ok(table)
    }

    /// Adds member forces onto `forces` and returns (member forces, smallest
    /// cable force). Zero-length members get no force: the direction is
    /// undefined and a diverging run is caught by the iteration cap instead.
    fn accumulate(&self, positions: &[Vector3<f64>], forces: &mut [Vector3<f64>]) -> (Vec<f64>, f64) {
        let mut member_forces = Vec::with_capacity(self.ends.len());
        let mut min_cable = f64::INFINITY;
        for i in 0..self.ends.len() {
            let (a, b) = self.ends[i];
            let span = positions[b] - positions[a];
            let length = span.norm();
            let force = if length < 1e-12 {
                0.0
            } else {
                member_force(self.kinds[i], self.stiffness[i], length, self.rest[i])
            };
            if i < self.cable_count {
                min_cable = min_cable.min(force);
            }
            if force != 0.0 {
                let pull = span * (force / length);
                forces[a] += pull;
                forces[b] -= pull;
            }
            member_forces.push(force);
        }
        if self.cable_count == 0 {
            min_cable = 0.0;
        }
        (member_forces, min_cable)
    }

    /// Total elastic energy at `positions`: ½K(l - l0)² per stretched member
    /// (slack cables store nothing).
    fn elastic_energy(&self, positions: &[Vector3<f64>]) -> f64 {
        let mut energy = 0.0;
        for i in 0..self.ends.len() {
            let (a, b) = self.ends[i];
            let length = (positions[b] - positions[a]).norm();
            let stretch = length - self.rest[i];
            if matches!(self.kinds[i], MemberKind::Cable) && stretch <= 0.0 {
                continue;
            }
            energy += 0.5 * self.stiffness[i] * stretch * stretch;
        }
        energy
    }
}

fn checked_positions(
    model: &TensegrityModel,
    loads: &LoadVector,
    initial: Option<&Configuration>,
) -> Result<Vec<Vector3<f64>>> {
    let free = model.free_nodes();
    if free.is_empty() {
        return Err(Error::EmptySystem(
            "every node is fixed; nothing to relax".into(),
        ));
    }
    if loads.free_ids() != free.as_slice() {
        return Err(Error::InvalidParameter(
            "load vector was built for a different node set".into(),
        ));
    }
    match initial {
        Some(config) => {
            config.check_model(model)?;
            Ok(config.positions().to_vec())
        }
        None => Ok(model.nodes().iter().map(|n| n.position).collect()),
    }
}

/// Settles the model into equilibrium under `loads` with the given cable
/// rest lengths (connectivity cable-row order). Starts from `initial`, or
/// from the as-built geometry when `initial` is `None`; fixed nodes never
/// move. Returns the equilibrium configuration and run diagnostics.
///
/// Convergence means the largest residual force on any free node fell below
/// `force_tolerance` while total kinetic energy sat below
/// `kinetic_tolerance`. Exceeding `max_iterations` yields
/// [`Error::NonConvergence`] carrying the last configuration for inspection.
pub fn relax(
    model: &TensegrityModel,
    cable_rest_lengths: &[f64],
    loads: &LoadVector,
    params: &RelaxationParams,
    initial: Option<&Configuration>,
) -> Result<(Configuration, RelaxationReport)> {
    params.validate()?;
    let table = ForceTable::build(model, cable_rest_lengths)?;
    let mut positions = checked_positions(model, loads, initial)?;
    let free: Vec<usize> = model.free_nodes().iter().map(|id| id - 1).collect();

    let mut external = vec![Vector3::zeros(); positions.len()];
    for (id, force) in loads.node_forces() {
        external[id - 1] = force;
    }

    let mut velocities = vec![Vector3::zeros(); positions.len()];
    let mut forces = vec![Vector3::zeros(); positions.len()];
    let dt = params.time_step;
    let inverse_mass = 1.0 / params.node_mass;
    let mut min_cable_force = f64::INFINITY;
    let mut kinetic_previous = 0.0_f64;

    for iteration in 0..=params.max_iterations {
        forces.copy_from_slice(&external);
        let (member_forces, min_cable) = table.accumulate(&positions, &mut forces);
        min_cable_force = min_cable_force.min(min_cable);

        let peak = free
            .iter()
            .map(|&i| forces[i].norm())
            .fold(0.0_f64, f64::max);
        let kinetic = 0.5
            * params.node_mass
            * free
                .iter()
                .map(|&i| velocities[i].norm_squared())
                .sum::<f64>();

        if peak < params.force_tolerance && kinetic < params.kinetic_tolerance {
            return Ok((
                Configuration::new(positions),
                RelaxationReport {
                    iterations: iteration,
                    peak_residual_force: peak,
                    kinetic_energy: kinetic,
                    min_cable_force,
                    member_forces,
                },
            ));
        }
        if iteration == params.max_iterations {
            return Err(Error::NonConvergence {
                iterations: iteration,
                residual: peak,
                last: Some(Box::new(Configuration::new(positions))),
            });
        }

        match params.damping {
            Damping::Kinetic => {
                for &i in &free {
                    velocities[i] += forces[i] * (inverse_mass * dt);
                    positions[i] += velocities[i] * dt;
                }
                let kinetic_next = 0.5
                    * params.node_mass
                    * free
                        .iter()
                        .map(|&i| velocities[i].norm_squared())
                        .sum::<f64>();
                if kinetic_next < kinetic_previous {
                    // Past a kinetic energy peak: freeze the structure and
                    // let it fall toward equilibrium again.
                    for &i in &free {
                        velocities[i] = Vector3::zeros();
                    }
                    kinetic_previous = 0.0;
                } else {
                    kinetic_previous = kinetic_next;
                }
            }
            Damping::Viscous(c) => {
                for &i in &free {
                    let acceleration = (forces[i] - velocities[i] * c) * inverse_mass;
                    velocities[i] += acceleration * dt;
                    positions[i] += velocities[i] * dt;
                }
            }
        }
    }
    unreachable!("loop exits by convergence or the iteration cap");
}

/// Total potential energy of the forward model at `config`: elastic energy
/// of all members plus the work potential -F·x of the constant external
/// loads. [`free_node_forces`] is exactly minus its gradient.
pub fn total_potential(
    model: &TensegrityModel,
    cable_rest_lengths: &[f64],
    loads: &LoadVector,
    config: &Configuration,
) -> Result<f64> {
    let table = ForceTable::build(model, cable_rest_lengths)?;
    let positions = checked_positions(model, loads, Some(config))?;
    let mut energy = table.elastic_energy(&positions);
    for (id, force) in loads.node_forces() {
        energy -= force.dot(&positions[id - 1]);
    }
    Ok(energy)
}

/// Net force on every free node at `config` under the forward model:
/// member forces plus external loads, in free-node order.
pub fn free_node_forces(
    model: &TensegrityModel,
    cable_rest_lengths: &[f64],
    loads: &LoadVector,
    config: &Configuration,
) -> Result<Vec<(NodeId, Vector3<f64>)>> {
    let table = ForceTable::build(model, cable_rest_lengths)?;
    let positions = checked_positions(model, loads, Some(config))?;
    let mut forces = vec![Vector3::zeros(); positions.len()];
    for (id, force) in loads.node_forces() {
        forces[id - 1] = force;
    }
    table.accumulate(&positions, &mut forces);
    Ok(model
        .free_nodes()
        .into_iter()
        .map(|id| (id, forces[id - 1]))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ik::{posed_configuration, solve_configuration, IkOptions};
    use crate::motion::{pose_sequence, MotionMode, TrajectorySpec};
    use crate::statics::{gravity_loads, standard_gravity_vector};
    use crate::structure::{
        build_hedra, member_lengths, CableClass, Member, Node, TetraParams,
    };
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::{BTreeMap, BTreeSet};

    const GAP: f64 = 0.02;

    fn cable(id: usize, k: NodeId, j: NodeId, stiffness: f64) -> Member {
        Member {
            id,
            kind: MemberKind::Cable,
            k,
            j,
            stiffness,
            rest_length: None,
            class: CableClass::None,
        }
    }

    /// One free node hanging below a fixed anchor on a single cable.
    fn hanging_node() -> TensegrityModel {
        TensegrityModel::new(
            vec![
                Node {
                    id: 1,
                    position: Vector3::zeros(),
                },
                Node {
                    id: 2,
                    position: Vector3::new(0.0, 0.0, -0.95),
                },
            ],
            vec![cable(1, 1, 2, 10_000.0)],
            BTreeSet::from([1]),
            vec![],
            1,
        )
        .unwrap()
    }

    use crate::structure::TensegrityModel;

    #[test]
    fn hanging_mass_stretches_to_the_spring_balance_length() {
        let model = hanging_node();
        let loads =
            LoadVector::from_node_forces(&model, &BTreeMap::from([(2, Vector3::new(0.0, 0.0, -9.81))]))
                .unwrap();
        let params = RelaxationParams::for_model(&model);
        let (config, report) = relax(&model, &[0.95], &loads, &params, None).unwrap();
        // K(l - l0) = mg gives l = 0.95 + 9.81/10000 = 0.950981 exactly.
        let length = (config.position(1) - config.position(2)).norm();
        assert_abs_diff_eq!(length, 0.950981, epsilon = 1e-6);
        assert_abs_diff_eq!(config.position(2).z, -0.950981, epsilon = 1e-6);
        assert_abs_diff_eq!(config.position(2).x, 0.0, epsilon = 1e-9);
        assert!(report.peak_residual_force < params.force_tolerance);
        assert_relative_eq!(report.member_forces[0], 9.81, epsilon = 1e-4);
        assert!(report.iterations > 0);
    }

    #[test]
    fn equilibrium_input_converges_immediately_and_unchanged() {
        let model = build_hedra(2, &TetraParams::default(), GAP, 3).unwrap();
        let rest: Vec<f64> = {
            let config = Configuration::from_model(&model);
            let lengths = member_lengths(&model, &config).unwrap();
            lengths[..model.cable_count()].to_vec()
        };
        let loads = LoadVector::zeros(&model);
        let params = RelaxationParams::for_model(&model);
        let (config, report) = relax(&model, &rest, &loads, &params, None).unwrap();
        assert_eq!(report.iterations, 0);
        assert_eq!(report.kinetic_energy, 0.0);
        for (node, position) in model.nodes().iter().zip(config.positions()) {
            assert_eq!(node.position, *position);
        }
        assert_eq!(report.member_forces.len(), model.member_count());
        for force in &report.member_forces {
            assert_abs_diff_eq!(*force, 0.0, epsilon = 1e-9);
        }
    }

    /// The validation loop: inverse-solve a bent pose, feed the rest lengths
    /// to the forward model, and require the relaxed geometry to land on the
    /// target within 2% of stack height.
    #[test]
    fn relaxation_reproduces_an_inverse_solved_bend() {
        let params = TetraParams::default();
        let model = build_hedra(2, &params, GAP, 3).unwrap();
        let spec = TrajectorySpec {
            mode: MotionMode::Bend,
            magnitude: 15.0_f64.to_radians(),
            azimuth: (-30.0_f64).to_radians(),
            steps: 1,
        };
        let poses = pose_sequence(2, &params, GAP, &spec).unwrap();
        let target = posed_configuration(&model, &poses[0]).unwrap();
        let loads = gravity_loads(
            &model,
            &target,
            0.05,
            &Default::default(),
            None,
            &standard_gravity_vector(),
        )
        .unwrap();
        let solution =
            solve_configuration(&model, &target, &loads, &IkOptions::default()).unwrap();

        // Seed the integrator at the commanded pose: the question under test
        // is whether that pose is an equilibrium of the forward model. Bars
        // start exactly force-free there, so the integrator still has to
        // move (they must pick up their compression share) and would walk
        // away if the solved rest lengths were wrong.
        let relax_params = RelaxationParams::for_model(&model);
        let (relaxed, report) = relax(
            &model,
            &solution.rest_lengths,
            &loads,
            &relax_params,
            Some(&target),
        )
        .unwrap();

        let stack_height = (params.height - GAP) + params.height;
        let worst = model
            .free_nodes()
            .iter()
            .map(|&id| (relaxed.position(id) - target.position(id)).norm())
            .fold(0.0_f64, f64::max);
        assert!(
            worst < 0.02 * stack_height,
            "relaxed geometry missed the target by {worst} m"
        );
        assert!(report.min_cable_force >= 0.0);
    }

    #[test]
    fn nodal_forces_match_the_energy_gradient() {
        let params = TetraParams::default();
        let model = build_hedra(2, &params, GAP, 3).unwrap();
        let rest: Vec<f64> = {
            let lengths =
                member_lengths(&model, &Configuration::from_model(&model)).unwrap();
            // Shorten every cable 10% so nothing sits near the slack kink.
            lengths[..model.cable_count()]
                .iter()
                .map(|l| 0.9 * l)
                .collect()
        };
        let base = Configuration::from_model(&model);
        let loads = gravity_loads(
            &model,
            &base,
            0.05,
            &Default::default(),
            None,
            &standard_gravity_vector(),
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..3 {
            let mut config = base.clone();
            for id in model.free_nodes() {
                let jitter =
                    Vector3::from_fn(|_, _| rng.gen_range(-2e-3..2e-3));
                config.set_position(id, config.position(id) + jitter);
            }
            let forces = free_node_forces(&model, &rest, &loads, &config).unwrap();
            let step = 1e-6;
            for (id, force) in forces {
                for axis in 0..3 {
                    let mut plus = config.clone();
                    let mut offset = Vector3::zeros();
                    offset[axis] = step;
                    plus.set_position(id, config.position(id) + offset);
                    let mut minus = config.clone();
                    minus.set_position(id, config.position(id) - offset);
                    let derivative = (total_potential(&model, &rest, &loads, &plus).unwrap()
                        - total_potential(&model, &rest, &loads, &minus).unwrap())
                        / (2.0 * step);
                    assert_relative_eq!(-derivative, force[axis], max_relative = 1e-4);
                }
            }
        }
    }

    #[test]
    fn slack_cables_exert_exactly_zero() {
        // Node 3 hangs from node 1; the long cable to node 2 stays slack the
        // whole run and must never contribute any force.
        let model = TensegrityModel::new(
            vec![
                Node {
                    id: 1,
                    position: Vector3::zeros(),
                },
                Node {
                    id: 2,
                    position: Vector3::new(1.0, 0.0, 0.0),
                },
                Node {
                    id: 3,
                    position: Vector3::new(0.0, 0.0, -0.95),
                },
            ],
            vec![cable(1, 1, 3, 10_000.0), cable(2, 2, 3, 10_000.0)],
            BTreeSet::from([1, 2]),
            vec![],
            1,
        )
        .unwrap();
        let loads =
            LoadVector::from_node_forces(&model, &BTreeMap::from([(3, Vector3::new(0.0, 0.0, -9.81))]))
                .unwrap();
        let params = RelaxationParams::for_model(&model);
        let (config, report) = relax(&model, &[0.95, 2.0], &loads, &params, None).unwrap();
        assert_abs_diff_eq!(config.position(3).z, -0.950981, epsilon = 1e-6);
        assert_abs_diff_eq!(config.position(3).x, 0.0, epsilon = 1e-9);
        assert_eq!(report.member_forces[1], 0.0);
        assert_eq!(report.min_cable_force, 0.0);
    }

    #[test]
    fn runs_are_bitwise_deterministic() {
        let model = hanging_node();
        let loads =
            LoadVector::from_node_forces(&model, &BTreeMap::from([(2, Vector3::new(0.3, -0.1, -9.81))]))
                .unwrap();
        let params = RelaxationParams::for_model(&model);
        let (first, first_report) = relax(&model, &[0.95], &loads, &params, None).unwrap();
        let (second, second_report) = relax(&model, &[0.95], &loads, &params, None).unwrap();
        assert_eq!(first.positions(), second.positions());
        assert_eq!(first_report, second_report);
    }

    #[test]
    fn viscous_damping_reaches_the_same_equilibrium() {
        let model = hanging_node();
        let loads =
            LoadVector::from_node_forces(&model, &BTreeMap::from([(2, Vector3::new(0.0, 0.0, -9.81))]))
                .unwrap();
        let mut params = RelaxationParams::for_model(&model);
        // Slightly under critical damping for the cable-mass pair.
        params.damping = Damping::Viscous(10.0);
        let (config, _) = relax(&model, &[0.95], &loads, &params, None).unwrap();
        assert_abs_diff_eq!(config.position(2).z, -0.950981, epsilon = 1e-6);
    }

    #[test]
    fn hitting_the_iteration_cap_reports_the_last_state() {
        let model = hanging_node();
        let loads =
            LoadVector::from_node_forces(&model, &BTreeMap::from([(2, Vector3::new(0.0, 0.0, -9.81))]))
                .unwrap();
        let mut params = RelaxationParams::for_model(&model);
        params.max_iterations = 3;
        let err = relax(&model, &[0.95], &loads, &params, None).unwrap_err();
        match err {
            Error::NonConvergence {
                iterations, last, ..
            } => {
                assert_eq!(iterations, 3);
                let last = last.expect("last configuration attached");
                assert!(last.position(2).z < -0.95);
            }
            other => panic!("expected NonConvergence, got {other}"),
        }
    }

    #[test]
    fn parameters_and_rest_lengths_are_validated() {
        let model = hanging_node();
        let loads = LoadVector::zeros(&model);
        let good = RelaxationParams::for_model(&model);

        let mut bad = good;
        bad.time_step = 0.0;
        assert!(relax(&model, &[0.95], &loads, &bad, None).is_err());
        let mut bad = good;
        bad.force_tolerance = -1.0;
        assert!(relax(&model, &[0.95], &loads, &bad, None).is_err());
        let mut bad = good;
        bad.damping = Damping::Viscous(-2.0);
        assert!(relax(&model, &[0.95], &loads, &bad, None).is_err());
        let mut bad = good;
        bad.max_iterations = 0;
        assert!(relax(&model, &[0.95], &loads, &bad, None).is_err());

        assert!(matches!(
            relax(&model, &[], &loads, &good, None).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
        assert!(matches!(
            relax(&model, &[-0.5], &loads, &good, None).unwrap_err(),
            Error::InvalidParameter(_)
        ));
        let wrong = Configuration::new(vec![Vector3::zeros(); 7]);
        assert!(relax(&model, &[0.95], &loads, &good, Some(&wrong)).is_err());
    }

    #[test]
    fn default_time_step_follows_the_stiffest_node() {
        let model = build_hedra(2, &TetraParams::default(), GAP, 3).unwrap();
        let params = RelaxationParams::for_model(&model);
        // The busiest nodes carry three bars plus three cables.
        assert_relative_eq!(
            params.time_step,
            0.5 * (DEFAULT_NODE_MASS / (3.0e6 + 3.0e4)).sqrt(),
            epsilon = 1e-15
        );
        assert_eq!(params.damping, Damping::Kinetic);
    }
}
