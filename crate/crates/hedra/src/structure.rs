//! Model geometry and construction.
//!
//! A manipulator is `module_count` identical rigid tetrahedra stacked along +z.
//! Each module has its apex at the module-local origin and its triangle at
//! local z = h, the three triangle nodes sitting on a circle of radius r at
//! angles 0, 2π/3, -2π/3 (measured from +y, so node positions are
//! (r sin θ, r cos θ, h)). Module i (1-based) is rotated by (i-1)·60° about z
//! and translated by (i-1)·(h − joint_gap) along z, which nests its apex
//! joint_gap below the triangle plane of the module beneath and places each
//! lower triangle node between two upper triangle nodes 60° away on either
//! side.
//!
//! Each joint carries 9 cables: 3 saddle cables from the lower triangle nodes
//! to the upper apex (they suspend the apex inside the lower triangle) and 6
//! axial cables from each lower triangle node to its two flanking upper
//! triangle nodes. Each module carries 6 bars: apex to each triangle node and
//! the three triangle edges. Members are numbered with all joint cables first
//! (joint by joint, 3 saddles then 6 axials), then all bars (module by
//! module).

use std::collections::BTreeSet;

use nalgebra::{DMatrix, Isometry3, Rotation3, Translation3, Vector3};

use crate::error::{Error, Result};
use crate::statics::Configuration;

/// 1-based node identifier.
pub type NodeId = usize;

/// Angular spacing of the triangle nodes, 2π/3.
pub const TRIANGLE_ANGLE: f64 = 2.0 * std::f64::consts::FRAC_PI_3;

/// Cable stiffness used by [`build_hedra`], N/m.
pub const DEFAULT_CABLE_STIFFNESS: f64 = 10_000.0;

/// Bar stiffness used by [`build_hedra`], N/m. Bars are modeled as very stiff
/// springs; this only matters to the dynamic-relaxation validator.
pub const DEFAULT_BAR_STIFFNESS: f64 = 1.0e6;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub id: NodeId,
    /// Position in the as-built reference configuration, meters.
    pub position: Vector3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberKind {
    /// Tension-only element: exerts force only while stretched.
    Cable,
    /// Rigid strut, carries compression or tension.
    Bar,
}

/// Structural role of a cable within a joint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CableClass {
    /// Lower triangle node to upper apex, nearly horizontal.
    Saddle,
    /// Lower triangle node to an upper triangle node.
    Axial,
    /// Segment of a routed actuation cable (only present in models loaded
    /// from files; [`build_hedra`] keeps actuation routes out of the
    /// connectivity).
    ActiveSegment,
    /// No class; used for bars.
    None,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Member {
    /// 1-based member identifier.
    pub id: usize,
    pub kind: MemberKind,
    /// Lower-numbered endpoint. Incidence convention: +1 at `k`, -1 at `j`.
    pub k: NodeId,
    /// Higher-numbered endpoint.
    pub j: NodeId,
    /// Axial stiffness, N/m.
    pub stiffness: f64,
    /// Unstressed length, meters. `None` until a solve fills it in.
    pub rest_length: Option<f64>,
    pub class: CableClass,
}

/// Tetrahedral module proportions.
///
/// `radius` is the circumradius of the triangle face, `height` the
/// apex-to-triangle-plane distance. The triangle edge is radius·√3.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TetraParams {
    pub radius: f64,
    pub height: f64,
}

impl Default for TetraParams {
    /// Reference manipulator proportions: 0.1 m radius, 0.15 m height.
    fn default() -> Self {
        TetraParams {
            radius: 0.1,
            height: 0.15,
        }
    }
}

impl TetraParams {
    pub fn new(radius: f64, height: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tetra radius must be positive, got {radius}"
            )));
        }
        if !(height > 0.0) || !height.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tetra height must be positive, got {height}"
            )));
        }
        Ok(TetraParams { radius, height })
    }
}

/// Rigid placement of one module: intrinsic Z-Y-X Euler rotation (yaw about
/// z, then pitch about y, then roll about x) followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModulePose {
    pub yaw: f64,
    pub pitch: f64,
    pub roll: f64,
    pub translation: Vector3<f64>,
}

impl ModulePose {
    pub fn identity() -> Self {
        ModulePose {
            yaw: 0.0,
            pitch: 0.0,
            roll: 0.0,
            translation: Vector3::zeros(),
        }
    }

    pub fn rotation(&self) -> Rotation3<f64> {
        Rotation3::from_euler_angles(self.roll, self.pitch, self.yaw)
    }

    pub fn isometry(&self) -> Isometry3<f64> {
        Isometry3::from_parts(
            Translation3::from(self.translation),
            self.rotation().into(),
        )
    }

    pub fn from_isometry(iso: &Isometry3<f64>) -> Self {
        let (roll, pitch, yaw) = iso.rotation.euler_angles();
        ModulePose {
            yaw,
            pitch,
            roll,
            translation: iso.translation.vector,
        }
    }
}

/// Member-node incidence. Row i holds +1 at the lower-numbered endpoint of
/// member i and -1 at the higher-numbered one; all cable rows come before all
/// bar rows, each group in ascending member id.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectivityMatrix {
    entries: DMatrix<f64>,
    cable_count: usize,
    bar_count: usize,
}

impl ConnectivityMatrix {
    /// Full (s+r) × n matrix.
    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Cable block, s × n.
    pub fn cables(&self) -> DMatrix<f64> {
        self.entries.rows(0, self.cable_count).into_owned()
    }

    /// Bar block, r × n.
    pub fn bars(&self) -> DMatrix<f64> {
        self.entries.rows(self.cable_count, self.bar_count).into_owned()
    }

    pub fn cable_count(&self) -> usize {
        self.cable_count
    }

    pub fn bar_count(&self) -> usize {
        self.bar_count
    }
}

/// A complete manipulator model. Immutable once constructed; solvers hand
/// back new data rather than mutating it.
#[derive(Debug, Clone, PartialEq)]
pub struct TensegrityModel {
    nodes: Vec<Node>,
    members: Vec<Member>,
    fixed_nodes: BTreeSet<NodeId>,
    active_routes: Vec<Vec<NodeId>>,
    module_count: usize,
}

impl TensegrityModel {
    /// Validates and assembles a model. Node ids must be exactly 1..=n and
    /// member ids 1..=m after sorting; endpoints must satisfy k < j; routes
    /// need at least two viapoints.
    pub fn new(
        mut nodes: Vec<Node>,
        mut members: Vec<Member>,
        fixed_nodes: BTreeSet<NodeId>,
        active_routes: Vec<Vec<NodeId>>,
        module_count: usize,
    ) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidParameter("model has no nodes".into()));
        }
        if module_count == 0 {
            return Err(Error::InvalidParameter(
                "module_count must be at least 1".into(),
            ));
        }
        nodes.sort_by_key(|n| n.id);
        for (i, node) in nodes.iter().enumerate() {
            if node.id != i + 1 {
                return Err(Error::InvalidParameter(format!(
                    "node ids must be contiguous from 1; missing or duplicate id near {}",
                    i + 1
                )));
            }
            if !node.position.iter().all(|c| c.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "node {} has a non-finite coordinate",
                    node.id
                )));
            }
        }
        let n = nodes.len();
        members.sort_by_key(|m| m.id);
        for (i, member) in members.iter().enumerate() {
            if member.id != i + 1 {
                return Err(Error::InvalidParameter(format!(
                    "member ids must be contiguous from 1; missing or duplicate id near {}",
                    i + 1
                )));
            }
            if member.k >= member.j {
                return Err(Error::InvalidParameter(format!(
                    "member {} endpoints must satisfy k < j, got ({}, {})",
                    member.id, member.k, member.j
                )));
            }
            if member.k == 0 || member.j > n {
                return Err(Error::UnknownNode(member.j.max(member.k)));
            }
            if !(member.stiffness > 0.0) || !member.stiffness.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "member {} stiffness must be positive, got {}",
                    member.id, member.stiffness
                )));
            }
            if let Some(l0) = member.rest_length {
                if !(l0 > 0.0) || !l0.is_finite() {
                    return Err(Error::InvalidParameter(format!(
                        "member {} rest length must be positive, got {l0}",
                        member.id
                    )));
                }
            }
            if member.kind == MemberKind::Bar && member.class != CableClass::None {
                return Err(Error::InvalidParameter(format!(
                    "member {} is a bar and cannot carry a cable class",
                    member.id
                )));
            }
        }
        for &id in &fixed_nodes {
            if id == 0 || id > n {
                return Err(Error::UnknownNode(id));
            }
        }
        for (ri, route) in active_routes.iter().enumerate() {
            if route.len() < 2 {
                return Err(Error::InvalidParameter(format!(
                    "active route {} needs at least two viapoints",
                    ri + 1
                )));
            }
            for &id in route {
                if id == 0 || id > n {
                    return Err(Error::UnknownNode(id));
                }
            }
        }
        Ok(TensegrityModel {
            nodes,
            members,
            fixed_nodes,
            active_routes,
            module_count,
        })
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    pub fn fixed_nodes(&self) -> &BTreeSet<NodeId> {
        &self.fixed_nodes
    }

    pub fn active_routes(&self) -> &[Vec<NodeId>] {
        &self.active_routes
    }

    pub fn module_count(&self) -> usize {
        self.module_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn cable_count(&self) -> usize {
        self.members
            .iter()
            .filter(|m| m.kind == MemberKind::Cable)
            .count()
    }

    pub fn bar_count(&self) -> usize {
        self.members.len() - self.cable_count()
    }

    pub fn is_fixed(&self, id: NodeId) -> bool {
        self.fixed_nodes.contains(&id)
    }

    /// Free (non-fixed) node ids, ascending.
    pub fn free_nodes(&self) -> Vec<NodeId> {
        self.nodes
            .iter()
            .map(|n| n.id)
            .filter(|id| !self.is_fixed(*id))
            .collect()
    }

    /// Members in connectivity row order: all cables (ascending id), then all
    /// bars (ascending id). Every per-member vector in this crate (lengths,
    /// densities, forces) follows this order.
    pub fn row_members(&self) -> Vec<&Member> {
        let mut rows: Vec<&Member> = self
            .members
            .iter()
            .filter(|m| m.kind == MemberKind::Cable)
            .collect();
        rows.extend(self.members.iter().filter(|m| m.kind == MemberKind::Bar));
        rows
    }
}

/// Module-local node positions: apex at the origin, then the three triangle
/// nodes at (r sin θ, r cos θ, h) for θ = 0, 2π/3, -2π/3.
pub fn base_tetra_nodes(params: &TetraParams) -> [Vector3<f64>; 4] {
    let TetraParams { radius: r, height: h } = *params;
    [
        Vector3::zeros(),
        Vector3::new(0.0, r, h),
        Vector3::new(r * TRIANGLE_ANGLE.sin(), r * TRIANGLE_ANGLE.cos(), h),
        Vector3::new(-r * TRIANGLE_ANGLE.sin(), r * TRIANGLE_ANGLE.cos(), h),
    ]
}

/// Applies a rigid pose to a set of points: p' = R·p + t.
pub fn apply_pose(points: &[Vector3<f64>], pose: &ModulePose) -> Vec<Vector3<f64>> {
    let rot = pose.rotation();
    points
        .iter()
        .map(|p| rot * p + pose.translation)
        .collect()
}

/// As-built placement of module `index` (1-based): yaw (index-1)·60° about z
/// and translation (index-1)·(height − joint_gap) along z.
pub fn reference_pose(index: usize, params: &TetraParams, joint_gap: f64) -> ModulePose {
    let i = (index - 1) as f64;
    ModulePose {
        yaw: i * std::f64::consts::FRAC_PI_3,
        pitch: 0.0,
        roll: 0.0,
        translation: Vector3::new(0.0, 0.0, i * (params.height - joint_gap)),
    }
}

/// Builds a stacked manipulator with [`DEFAULT_CABLE_STIFFNESS`] and
/// [`DEFAULT_BAR_STIFFNESS`].
pub fn build_hedra(
    module_count: usize,
    params: &TetraParams,
    joint_gap: f64,
    active_cable_count: usize,
) -> Result<TensegrityModel> {
    build_hedra_custom(
        module_count,
        params,
        joint_gap,
        active_cable_count,
        DEFAULT_CABLE_STIFFNESS,
        DEFAULT_BAR_STIFFNESS,
    )
}

/// [`build_hedra`] with explicit member stiffnesses.
///
/// The base module's four nodes are fixed. Per joint the member layout is
/// 3 saddle cables (lower triangle node p to upper apex, p = 0,1,2) then 6
/// axial cables (p to upper triangle p, p to upper triangle p+1 mod 3); per
/// module 6 bars (apex to each triangle node, then the three edges). With the
/// 60° stacking twist the two axials of a lower node land on its two flanking
/// upper nodes.
///
/// Active routes: one per actuation cable, threaded through one triangle node
/// of every module, advancing one triangle position every second module so
/// the polyline stays inside a 60° azimuthal sector. Route c starts at
/// triangle position c mod 3; counts of 3 and 6 are supported (6 doubles up
/// the routes). Single-module stacks get no routes.
pub fn build_hedra_custom(
    module_count: usize,
    params: &TetraParams,
    joint_gap: f64,
    active_cable_count: usize,
    cable_stiffness: f64,
    bar_stiffness: f64,
) -> Result<TensegrityModel> {
    let params = TetraParams::new(params.radius, params.height)?;
    if module_count == 0 {
        return Err(Error::InvalidParameter(
            "module count must be at least 1".into(),
        ));
    }
    if !(joint_gap > 0.0) || !joint_gap.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "joint gap must be positive, got {joint_gap}"
        )));
    }
    if joint_gap >= params.height {
        return Err(Error::InvalidParameter(format!(
            "joint gap {} must be smaller than the tetra height {}; the apex nests \
             that deep below the triangle plane of the module beneath",
            joint_gap, params.height
        )));
    }
    if active_cable_count != 3 && active_cable_count != 6 {
        return Err(Error::InvalidParameter(format!(
            "active cable count must be 3 or 6, got {active_cable_count}"
        )));
    }
    if !(cable_stiffness > 0.0) || !(bar_stiffness > 0.0) {
        return Err(Error::InvalidParameter(
            "stiffnesses must be positive".into(),
        ));
    }

    let k = module_count;
    let local = base_tetra_nodes(&params);
    let mut nodes = Vec::with_capacity(4 * k);
    for i in 1..=k {
        let placed = apply_pose(&local, &reference_pose(i, &params, joint_gap));
        for (p, position) in placed.into_iter().enumerate() {
            nodes.push(Node {
                id: 4 * (i - 1) + p + 1,
                position,
            });
        }
    }

    // Node ids within module i (0-based below): apex 4i+1, triangle 4i+2..4i+4.
    let apex = |m: usize| 4 * m + 1;
    let tri = |m: usize, p: usize| 4 * m + 2 + p % 3;

    let mut members = Vec::with_capacity(9 * (k - 1) + 6 * k);
    let mut next_id = 1;
    let mut push = |members: &mut Vec<Member>, kind, a: usize, b: usize, stiffness, class| {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        members.push(Member {
            id: next_id,
            kind,
            k: lo,
            j: hi,
            stiffness,
            rest_length: None,
            class,
        });
        next_id += 1;
    };

    for joint in 0..k.saturating_sub(1) {
        let (lo, up) = (joint, joint + 1);
        for p in 0..3 {
            push(
                &mut members,
                MemberKind::Cable,
                tri(lo, p),
                apex(up),
                cable_stiffness,
                CableClass::Saddle,
            );
        }
        for p in 0..3 {
            push(
                &mut members,
                MemberKind::Cable,
                tri(lo, p),
                tri(up, p),
                cable_stiffness,
                CableClass::Axial,
            );
            push(
                &mut members,
                MemberKind::Cable,
                tri(lo, p),
                tri(up, p + 1),
                cable_stiffness,
                CableClass::Axial,
            );
        }
    }
    for m in 0..k {
        for p in 0..3 {
            push(
                &mut members,
                MemberKind::Bar,
                apex(m),
                tri(m, p),
                bar_stiffness,
                CableClass::None,
            );
        }
        push(&mut members, MemberKind::Bar, tri(m, 0), tri(m, 1), bar_stiffness, CableClass::None);
        push(&mut members, MemberKind::Bar, tri(m, 0), tri(m, 2), bar_stiffness, CableClass::None);
        push(&mut members, MemberKind::Bar, tri(m, 1), tri(m, 2), bar_stiffness, CableClass::None);
    }

    let mut active_routes = Vec::new();
    if k >= 2 {
        for c in 0..active_cable_count {
            let sector = c % 3;
            let route: Vec<NodeId> = (0..k).map(|i| tri(i, sector + i / 2)).collect();
            active_routes.push(route);
        }
    }

    let fixed_nodes: BTreeSet<NodeId> = [1, 2, 3, 4].into_iter().collect();
    TensegrityModel::new(nodes, members, fixed_nodes, active_routes, k)
}

/// Incidence matrix of the model, rows in [`TensegrityModel::row_members`]
/// order.
pub fn connectivity(model: &TensegrityModel) -> ConnectivityMatrix {
    let n = model.node_count();
    let rows = model.row_members();
    let mut entries = DMatrix::zeros(rows.len(), n);
    for (i, member) in rows.iter().enumerate() {
        entries[(i, member.k - 1)] = 1.0;
        entries[(i, member.j - 1)] = -1.0;
    }
    ConnectivityMatrix {
        entries,
        cable_count: model.cable_count(),
        bar_count: model.bar_count(),
    }
}

/// Total polyline length of each active route at the given configuration,
/// in route order. These are the lengths the winches must pay out.
pub fn route_lengths(model: &TensegrityModel, config: &Configuration) -> Result<Vec<f64>> {
    config.check_model(model)?;
    Ok(model
        .active_routes()
        .iter()
        .map(|route| {
            route
                .windows(2)
                .map(|w| (config.position(w[1]) - config.position(w[0])).norm())
                .sum()
        })
        .collect())
}

/// Current member lengths, row order. Errors on a zero-length member.
pub fn member_lengths(model: &TensegrityModel, config: &Configuration) -> Result<Vec<f64>> {
    config.check_model(model)?;
    let mut lengths = Vec::with_capacity(model.member_count());
    for member in model.row_members() {
        let l = (config.position(member.j) - config.position(member.k)).norm();
        if l < 1e-12 {
            return Err(Error::DegenerateGeometry(format!(
                "member {} has coincident endpoints (nodes {} and {})",
                member.id, member.k, member.j
            )));
        }
        lengths.push(l);
    }
    Ok(lengths)
}
