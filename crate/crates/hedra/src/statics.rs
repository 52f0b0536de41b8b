//! Equilibrium assembly: node positions, external loads, and the linear map
//! from member force densities to nodal forces.
//!
//! The force density of a member is its axial force divided by its current
//! length, q = f/l. Summing member contributions at every free node gives a
//! linear system A·q = p, where p stacks the external load components
//! axis-by-axis (all x, then all y, then all z) over the free nodes in
//! ascending id order. Row order of q follows
//! [`TensegrityModel::row_members`]: cables first, then bars.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, Vector3};

use crate::error::{Error, Result};
use crate::structure::{member_lengths, NodeId, TensegrityModel};

/// Standard gravitational acceleration, m/s².
pub const STANDARD_GRAVITY: f64 = 9.81;

/// Member linear density assumed by the load builders, kg/m.
pub const DEFAULT_MEMBER_MASS_PER_LENGTH: f64 = 0.05;

/// Gravity as a force-per-unit-mass vector, (0, 0, -9.81) m/s².
pub fn standard_gravity_vector() -> Vector3<f64> {
    Vector3::new(0.0, 0.0, -STANDARD_GRAVITY)
}

/// Node positions of a model in some (not necessarily as-built) state,
/// indexed by node id.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    positions: Vec<Vector3<f64>>,
}

impl Configuration {
    /// Positions indexed by node id − 1.
    pub fn new(positions: Vec<Vector3<f64>>) -> Self {
        Configuration { positions }
    }

    /// The as-built reference configuration stored in the model.
    pub fn from_model(model: &TensegrityModel) -> Self {
        Configuration {
            positions: model.nodes().iter().map(|n| n.position).collect(),
        }
    }

    /// Position of a node. Panics on an id outside 1..=node_count; ids are
    /// validated at model construction, so this indicates a caller bug.
    pub fn position(&self, id: NodeId) -> Vector3<f64> {
        self.positions[id - 1]
    }

    pub fn set_position(&mut self, id: NodeId, position: Vector3<f64>) {
        self.positions[id - 1] = position;
    }

    pub fn node_count(&self) -> usize {
        self.positions.len()
    }

    pub fn positions(&self) -> &[Vector3<f64>] {
        &self.positions
    }

    /// Errors unless this configuration has one position per model node.
    pub fn check_model(&self, model: &TensegrityModel) -> Result<()> {
        if self.positions.len() != model.node_count() {
            return Err(Error::DimensionMismatch {
                what: "configuration node count",
                expected: model.node_count(),
                got: self.positions.len(),
            });
        }
        Ok(())
    }
}

/// External loads on the free nodes, N. Stored stacked by axis over the free
/// nodes in ascending id order, matching the equilibrium matrix rows.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadVector {
    free_ids: Vec<NodeId>,
    values: DVector<f64>,
}

impl LoadVector {
    /// Zero load on every free node of the model.
    pub fn zeros(model: &TensegrityModel) -> Self {
        let free_ids = model.free_nodes();
        let values = DVector::zeros(3 * free_ids.len());
        LoadVector { free_ids, values }
    }

    /// Builds a load vector from per-node forces. Forces on fixed nodes are
    /// absorbed by the support and ignored; an id outside the model errors.
    pub fn from_node_forces(
        model: &TensegrityModel,
        forces: &BTreeMap<NodeId, Vector3<f64>>,
    ) -> Result<Self> {
        let mut load = LoadVector::zeros(model);
        for (&id, f) in forces {
            if id == 0 || id > model.node_count() {
                return Err(Error::UnknownNode(id));
            }
            load.add_force(id, *f);
        }
        Ok(load)
    }

    /// Adds a force to a node, ignoring fixed nodes. The id must belong to
    /// the model this vector was built from.
    pub fn add_force(&mut self, id: NodeId, force: Vector3<f64>) {
        let nf = self.free_ids.len();
        if let Ok(u) = self.free_ids.binary_search(&id) {
            self.values[u] += force.x;
            self.values[nf + u] += force.y;
            self.values[2 * nf + u] += force.z;
        }
    }

    /// Wraps an axis-stacked value vector (all x, all y, all z over the free
    /// nodes ascending) for the model's free nodes.
    pub fn from_stacked(model: &TensegrityModel, values: DVector<f64>) -> Result<Self> {
        let free_ids = model.free_nodes();
        if values.len() != 3 * free_ids.len() {
            return Err(Error::DimensionMismatch {
                what: "stacked load vector length",
                expected: 3 * free_ids.len(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "load vector has non-finite entries".into(),
            ));
        }
        Ok(LoadVector { free_ids, values })
    }

    /// The force currently applied to a free node; `None` for fixed nodes.
    pub fn force_at(&self, id: NodeId) -> Option<Vector3<f64>> {
        let nf = self.free_ids.len();
        self.free_ids.binary_search(&id).ok().map(|u| {
            Vector3::new(self.values[u], self.values[nf + u], self.values[2 * nf + u])
        })
    }

    pub fn free_ids(&self) -> &[NodeId] {
        &self.free_ids
    }

    /// Axis-stacked values, length 3 × free node count.
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Per-node view of the loads.
    pub fn node_forces(&self) -> BTreeMap<NodeId, Vector3<f64>> {
        self.free_ids
            .iter()
            .map(|&id| (id, self.force_at(id).unwrap()))
            .collect()
    }
}

/// The assembled equilibrium map A (3·n_free × m) together with the node and
/// member bookkeeping needed to interpret it.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumSystem {
    a: DMatrix<f64>,
    free_ids: Vec<NodeId>,
    cable_count: usize,
    bar_count: usize,
}

impl EquilibriumSystem {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn free_ids(&self) -> &[NodeId] {
        &self.free_ids
    }

    pub fn cable_count(&self) -> usize {
        self.cable_count
    }

    pub fn bar_count(&self) -> usize {
        self.bar_count
    }

    pub fn member_count(&self) -> usize {
        self.cable_count + self.bar_count
    }
}

/// Assembles the equilibrium matrix at the given configuration. Column i
/// belongs to row-order member i; the entry in node u's x-row is
/// (x_u − x_other) when u is an endpoint, zero otherwise.
pub fn assemble(model: &TensegrityModel, config: &Configuration) -> Result<EquilibriumSystem> {
    config.check_model(model)?;
    if model.member_count() == 0 {
        return Err(Error::EmptySystem("model has no members".into()));
    }
    let free_ids = model.free_nodes();
    if free_ids.is_empty() {
        return Err(Error::EmptySystem(
            "every node is fixed; nothing to balance".into(),
        ));
    }
    let nf = free_ids.len();
    let rows = model.row_members();
    let mut a = DMatrix::zeros(3 * nf, rows.len());
    for (i, member) in rows.iter().enumerate() {
        let d = config.position(member.k) - config.position(member.j);
        if let Ok(u) = free_ids.binary_search(&member.k) {
            a[(u, i)] = d.x;
            a[(nf + u, i)] = d.y;
            a[(2 * nf + u, i)] = d.z;
        }
        if let Ok(u) = free_ids.binary_search(&member.j) {
            a[(u, i)] = -d.x;
            a[(nf + u, i)] = -d.y;
            a[(2 * nf + u, i)] = -d.z;
        }
    }
    Ok(EquilibriumSystem {
        a,
        free_ids,
        cable_count: model.cable_count(),
        bar_count: model.bar_count(),
    })
}

/// Euclidean norm of the equilibrium defect A·q − p.
pub fn residual(system: &EquilibriumSystem, q: &DVector<f64>, loads: &LoadVector) -> Result<f64> {
    if q.len() != system.member_count() {
        return Err(Error::DimensionMismatch {
            what: "force density vector length",
            expected: system.member_count(),
            got: q.len(),
        });
    }
    if loads.values.len() != system.a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "load vector length",
            expected: system.a.nrows(),
            got: loads.values.len(),
        });
    }
    Ok((&system.a * q - &loads.values).norm())
}

/// Member axial forces from densities and current lengths, f = q·l.
pub fn forces_from_densities(q: &[f64], lengths: &[f64]) -> Result<Vec<f64>> {
    if q.len() != lengths.len() {
        return Err(Error::DimensionMismatch {
            what: "lengths for force recovery",
            expected: q.len(),
            got: lengths.len(),
        });
    }
    Ok(q.iter().zip(lengths).map(|(qi, li)| qi * li).collect())
}

/// Self-weight and payload loads. Each member's mass (linear density ×
/// current length) is lumped half to each endpoint; explicit node masses are
/// added; every lumped mass turns into a force via `gravity`; the payload is
/// a direct force on one node. Fixed nodes shed their share into the support.
pub fn gravity_loads(
    model: &TensegrityModel,
    config: &Configuration,
    member_mass_per_length: f64,
    node_masses: &BTreeMap<NodeId, f64>,
    payload: Option<(NodeId, Vector3<f64>)>,
    gravity: &Vector3<f64>,
) -> Result<LoadVector> {
    if !(member_mass_per_length >= 0.0) || !member_mass_per_length.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "member mass per length must be non-negative, got {member_mass_per_length}"
        )));
    }
    let lengths = member_lengths(model, config)?;
    let mut load = LoadVector::zeros(model);
    for (member, l) in model.row_members().iter().zip(&lengths) {
        let half_weight = gravity * (member_mass_per_length * l / 2.0);
        load.add_force(member.k, half_weight);
        load.add_force(member.j, half_weight);
    }
    for (&id, &mass) in node_masses {
        if id == 0 || id > model.node_count() {
            return Err(Error::UnknownNode(id));
        }
        if !(mass >= 0.0) || !mass.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "node {id} mass must be non-negative, got {mass}"
            )));
        }
        load.add_force(id, gravity * mass);
    }
    if let Some((id, force)) = payload {
        if id == 0 || id > model.node_count() {
            return Err(Error::UnknownNode(id));
        }
        load.add_force(id, force);
    }
    Ok(load)
}
