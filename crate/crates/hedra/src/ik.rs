//! Inverse kinetostatics: cable force densities for a target pose.
//!
//! Given module poses, the solver finds force densities q (force per unit
//! length) that balance the external loads, A·q = p, while keeping every
//! cable at or above a minimum density so the loop stays taut when modules
//! tilt. Among all balancing densities it returns the one minimizing total
//! cable strain energy Σ (qᵢlᵢ)²/(2Kᵢ), a strictly convex quadratic program
//! over the self-stress space of the structure.
//!
//! The solve splits into three stages: a minimum-norm particular solution
//! and nullspace basis of A by singular value decomposition; a split of the
//! nullspace into directions that do and do not move cable densities (bars
//! whose endpoints are all fixed, for instance, can carry any density
//! without disturbing equilibrium, and keeping their coefficient at zero
//! leaves them at exactly zero); and the quadratic program over the
//! cable-affecting coefficients with one lower-bound constraint per cable.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::qp::{solve_qp, QpOptions};
use crate::statics::{
    assemble, forces_from_densities, residual, Configuration, EquilibriumSystem, LoadVector,
};
use crate::structure::{
    apply_pose, member_lengths, route_lengths, CableClass, ModulePose, TensegrityModel,
};

/// Default lower bound on cable force densities, N/m.
pub const DEFAULT_MIN_DENSITY: f64 = 500.0;

/// Default relative tolerance on the equilibrium residual.
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Relative singular value cutoff for separating cable-affecting from
/// cable-neutral self-stress directions.
const CABLE_SPLIT_CUTOFF: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct IkOptions {
    /// Lower bound on every cable's force density, N/m.
    pub min_density: f64,
    /// Per-class overrides of the density floor; cables whose class is not
    /// listed use `min_density`. Later entries win on duplicate classes.
    pub class_minimums: Vec<(CableClass, f64)>,
    /// Relative tolerance for declaring the load balanced.
    pub tolerance: f64,
}

impl Default for IkOptions {
    fn default() -> Self {
        IkOptions {
            min_density: DEFAULT_MIN_DENSITY,
            class_minimums: Vec::new(),
            tolerance: DEFAULT_TOLERANCE,
        }
    }
}

impl IkOptions {
    /// The density floor applying to a cable of the given class.
    pub fn floor(&self, class: CableClass) -> f64 {
        self.class_minimums
            .iter()
            .rev()
            .find(|(c, _)| *c == class)
            .map_or(self.min_density, |(_, floor)| *floor)
    }

    fn validate(&self) -> Result<()> {
        for &floor in std::iter::once(&self.min_density)
            .chain(self.class_minimums.iter().map(|(_, f)| f))
        {
            if !(floor >= 0.0) || !floor.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "minimum density must be non-negative, got {floor}"
                )));
            }
        }
        if !(self.tolerance > 0.0) || !self.tolerance.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        Ok(())
    }
}

/// Everything a pose solve produces. Per-member vectors follow
/// [`TensegrityModel::row_members`] order; `rest_lengths` covers the cables
/// (the first `cable_count` rows), since bars keep their as-built length.
#[derive(Debug, Clone)]
pub struct IkSolution {
    /// Force densities, N/m.
    pub q: Vec<f64>,
    /// Axial forces f = q·l, N. Positive is tension.
    pub forces: Vec<f64>,
    /// Cable rest lengths realizing the densities, l₀ = l(1 − q/K), m.
    pub rest_lengths: Vec<f64>,
    /// Active route polyline lengths at the target, m.
    pub active_lengths: Vec<f64>,
    /// Equilibrium defect ‖A·q − p‖, N.
    pub residual: f64,
    /// Total cable strain energy, J.
    pub objective: f64,
    /// Active-set changes inside the quadratic program.
    pub iterations: usize,
    /// Bound and tolerance the solve ran with.
    pub min_density: f64,
    pub tolerance: f64,
    /// The target node positions the densities were computed for.
    pub configuration: Configuration,
}

/// Minimum-norm balancing densities and a nullspace basis, with the default
/// residual tolerance.
pub fn solve_general(
    system: &EquilibriumSystem,
    loads: &LoadVector,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    solve_general_with(system, loads, DEFAULT_TOLERANCE)
}

/// Minimum-norm solution q with A·q = p plus an orthonormal basis of the
/// self-stress space null(A). Errors with [`Error::InfeasibleLoad`] when p
/// has a component no density vector can balance.
pub fn solve_general_with(
    system: &EquilibriumSystem,
    loads: &LoadVector,
    tolerance: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let a = system.matrix();
    if loads.values().len() != a.nrows() {
        return Err(Error::DimensionMismatch {
            what: "load vector length",
            expected: a.nrows(),
            got: loads.values().len(),
        });
    }
    let svd = linalg::decompose(a)?;
    let q_p = svd.solve_min_norm(loads.values())?;
    let defect = (a * &q_p - loads.values()).norm();
    if defect > tolerance * loads.values().norm().max(1.0) {
        return Err(Error::InfeasibleLoad { residual: defect });
    }
    Ok((q_p, svd.nullspace()))
}

/// Energy-minimal densities subject to A·q = p and q at or above its class
/// floor on the cables. `lengths`, `stiffness`, and `classes` are per member
/// in row order.
///
/// Returns the densities, the cable strain energy, and the quadratic program
/// iteration count.
pub fn optimize_densities(
    system: &EquilibriumSystem,
    loads: &LoadVector,
    lengths: &[f64],
    stiffness: &[f64],
    classes: &[CableClass],
    options: &IkOptions,
) -> Result<(DVector<f64>, f64, usize)> {
    options.validate()?;
    let m = system.member_count();
    let s = system.cable_count();
    if lengths.len() != m {
        return Err(Error::DimensionMismatch {
            what: "member length vector",
            expected: m,
            got: lengths.len(),
        });
    }
    if stiffness.len() != m {
        return Err(Error::DimensionMismatch {
            what: "member stiffness vector",
            expected: m,
            got: stiffness.len(),
        });
    }
    if classes.len() != m {
        return Err(Error::DimensionMismatch {
            what: "member class vector",
            expected: m,
            got: classes.len(),
        });
    }
    let (q_p, null) = solve_general_with(system, loads, options.tolerance)?;

    // Cable strain energy ½ Σ dᵢqᵢ² with dᵢ = lᵢ²/Kᵢ.
    let d: Vec<f64> = (0..s)
        .map(|i| lengths[i] * lengths[i] / stiffness[i])
        .collect();
    let energy =
        |q: &DVector<f64>| 0.5 * (0..s).map(|i| d[i] * q[i] * q[i]).sum::<f64>();
    let floors: Vec<f64> = (0..s).map(|i| options.floor(classes[i])).collect();
    let floor_phrase = if options.class_minimums.is_empty() {
        format!("density {}", options.min_density)
    } else {
        "its class floor".to_string()
    };
    let bound_met = |q: &DVector<f64>| {
        (0..s).all(|i| q[i] >= floors[i] - 1e-9 * floors[i].max(1.0))
    };

    if s == 0 {
        // No cables, no objective, no bounds: the minimum-norm solution is
        // as good as any.
        return Ok((q_p, 0.0, 0));
    }

    // Split the nullspace: which self-stress directions move cable
    // densities at all?
    let cable_rows = null.rows(0, s).into_owned();
    let split = linalg::decompose_with(&cable_rows, CABLE_SPLIT_CUTOFF)?;
    let (moving, _neutral) = split.right_vectors();
    let n_c = &null * &moving;
    let t_c = n_c.ncols();
    if t_c == 0 {
        if bound_met(&q_p) {
            return Ok((q_p.clone(), energy(&q_p), 0));
        }
        return Err(Error::Infeasible(format!(
            "cable densities are fully determined by the loads and some cable \
             falls below {floor_phrase}"
        )));
    }

    // Reduced strictly convex program over the cable-affecting coefficients.
    let b = n_c.rows(0, s).into_owned();
    let weighted = DMatrix::from_fn(s, t_c, |i, j| b[(i, j)] * d[i].sqrt());
    let hessian = weighted.transpose() * &weighted;
    let gradient = {
        let w = DVector::from_fn(s, |i, _| d[i] * q_p[i]);
        b.transpose() * w
    };
    let bounds = DVector::from_fn(s, |i, _| floors[i] - q_p[i]);
    let sol = solve_qp(&hessian, &gradient, &b, &bounds, &QpOptions::default())
        .map_err(|e| match e {
            Error::Infeasible(_) => Error::Infeasible(format!(
                "no self-stress keeps every cable at {floor_phrase} or more \
                 in this pose"
            )),
            other => other,
        })?;
    let q = &q_p + &n_c * &sol.x;
    let e = energy(&q);
    Ok((q, e, sol.iterations))
}

/// Cable rest lengths l₀ = l(1 − q/K) for the first cable_count row members.
/// Errors with [`Error::SlackImpossible`] when a density demands q ≥ K,
/// which would need a non-positive rest length.
pub fn cable_rest_lengths(
    model: &TensegrityModel,
    q: &[f64],
    lengths: &[f64],
) -> Result<Vec<f64>> {
    let rows = model.row_members();
    if q.len() != rows.len() || lengths.len() != rows.len() {
        return Err(Error::DimensionMismatch {
            what: "density and length vectors",
            expected: rows.len(),
            got: q.len().min(lengths.len()),
        });
    }
    let s = model.cable_count();
    let mut rest = Vec::with_capacity(s);
    for i in 0..s {
        let member = rows[i];
        if q[i] >= member.stiffness {
            return Err(Error::SlackImpossible {
                member_id: member.id,
                q: q[i],
                stiffness: member.stiffness,
            });
        }
        rest.push(lengths[i] * (1.0 - q[i] / member.stiffness));
    }
    Ok(rest)
}

/// Node positions for the given module poses. The base module keeps its
/// as-built position; `poses[i]` places module i+2 (the pose maps the
/// module-local template, the base module's node block, into the world).
pub fn posed_configuration(
    model: &TensegrityModel,
    poses: &[ModulePose],
) -> Result<Configuration> {
    let k = model.module_count();
    if model.node_count() != 4 * k {
        return Err(Error::InvalidParameter(format!(
            "model has {} nodes but {} modules; poses need four nodes per module",
            model.node_count(),
            k
        )));
    }
    if poses.len() != k - 1 {
        return Err(Error::DimensionMismatch {
            what: "module pose count",
            expected: k - 1,
            got: poses.len(),
        });
    }
    let local: Vec<_> = model.nodes()[0..4].iter().map(|n| n.position).collect();
    let mut positions: Vec<_> = model.nodes().iter().map(|n| n.position).collect();
    for (i, pose) in poses.iter().enumerate() {
        let placed = apply_pose(&local, pose);
        for (p, position) in placed.into_iter().enumerate() {
            positions[4 * (i + 1) + p] = position;
        }
    }
    Ok(Configuration::new(positions))
}

/// Full pose solve: assembles equilibrium at `config`, optimizes densities,
/// and packages forces, rest lengths and route lengths.
pub fn solve_configuration(
    model: &TensegrityModel,
    config: &Configuration,
    loads: &LoadVector,
    options: &IkOptions,
) -> Result<IkSolution> {
    options.validate()?;
    if model.fixed_nodes().is_empty() {
        return Err(Error::InvalidParameter(
            "model has no fixed nodes; anchor the base before solving".into(),
        ));
    }
    let system = assemble(model, config)?;
    let lengths = member_lengths(model, config)?;
    let stiffness: Vec<f64> = model.row_members().iter().map(|r| r.stiffness).collect();
    let classes: Vec<CableClass> = model.row_members().iter().map(|r| r.class).collect();
    let (q, objective, iterations) =
        optimize_densities(&system, loads, &lengths, &stiffness, &classes, options)?;
    let defect = residual(&system, &q, loads)?;
    let forces = forces_from_densities(q.as_slice(), &lengths)?;
    let rest_lengths = cable_rest_lengths(model, q.as_slice(), &lengths)?;
    let active_lengths = route_lengths(model, config)?;
    Ok(IkSolution {
        q: q.iter().copied().collect(),
        forces,
        rest_lengths,
        active_lengths,
        residual: defect,
        objective,
        iterations,
        min_density: options.min_density,
        tolerance: options.tolerance,
        configuration: config.clone(),
    })
}

/// [`solve_configuration`] at the pose list, with loads built by the caller
/// for that same configuration (see [`posed_configuration`]).
pub fn solve_pose(
    model: &TensegrityModel,
    poses: &[ModulePose],
    loads: &LoadVector,
    options: &IkOptions,
) -> Result<IkSolution> {
    let config = posed_configuration(model, poses)?;
    solve_configuration(model, &config, loads, options)
}
