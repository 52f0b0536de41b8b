//! File formats: JSON documents for models, solutions and relaxation
//! results, CSV traces and actuation schedules, and OBJ geometry.
//!
//! Every output file records the manifest that produced it: JSON documents
//! embed it, OBJ files carry it in a comment, and CSV files get a sidecar
//! `<name>.manifest.json`. All formats are deterministic: floats print in
//! shortest round-trip form, maps are sorted, and timestamps never come from
//! the wall clock (see [`manifest_timestamp`]), so identical inputs yield
//! bitwise-identical files.

use crate::error::{Error, Result};
use crate::ik::IkSolution;
use crate::motion::{RelaxationReport, TraceRecord};
use crate::statics::Configuration;
use crate::structure::{
    CableClass, Member, MemberKind, Node, TensegrityModel, TetraParams,
};
use nalgebra::Vector3;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const MODEL_SCHEMA: &str = "hedra_model_v1";
pub const SOLUTION_SCHEMA: &str = "hedra_solution_v1";
pub const RELAX_SCHEMA: &str = "hedra_relax_v1";

/// Unit declaration written into every document; lengths in meters, forces
/// in newtons. Readers reject anything else rather than guess.
pub const UNITS: &str = "m,N";

/// Provenance block recorded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// The command line or API call that produced the file.
    pub command: String,
    /// Input file paths, if any.
    pub inputs: Vec<String>,
    /// Output file paths written by the run.
    pub outputs: Vec<String>,
    /// Flag and parameter values, sorted by name.
    pub parameters: BTreeMap<String, String>,
    /// RFC 3339 timestamp; see [`manifest_timestamp`] for the policy.
    pub timestamp: String,
    pub version: String,
    /// Reserved for callers that seed randomized workflows; the solvers
    /// themselves use no randomness.
    pub seed: Option<u64>,
}

/// Timestamp for manifests: honors the `SOURCE_DATE_EPOCH` convention for
/// reproducible builds and otherwise pins the Unix epoch. The wall clock is
/// never consulted, so repeated runs produce bitwise-identical files.
pub fn manifest_timestamp() -> String {
    let epoch = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.parse::<i64>().ok())
        .unwrap_or(0);
    rfc3339_from_epoch(epoch)
}

/// RFC 3339 rendering of a Unix timestamp, UTC, whole seconds.
pub fn rfc3339_from_epoch(seconds: i64) -> String {
    chrono::DateTime::<chrono::Utc>::from_timestamp(seconds, 0)
        .unwrap_or(chrono::DateTime::UNIX_EPOCH)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub xyz: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberRecord {
    pub id: usize,
    /// "cable" or "bar".
    pub kind: String,
    pub k: usize,
    pub j: usize,
    pub stiffness: f64,
    /// "saddle", "axial", "active_segment" or "none".
    pub class: String,
    pub rest_length: Option<f64>,
}

/// Build parameters carried alongside the graph so downstream commands can
/// regenerate trajectories without re-deriving them from coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    /// Module count.
    pub k: usize,
    pub radius: f64,
    pub height: f64,
    pub gap: f64,
}

/// On-disk form of a model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema: String,
    pub units: String,
    pub nodes: Vec<NodeRecord>,
    pub members: Vec<MemberRecord>,
    pub fixed_nodes: Vec<usize>,
    pub active_routes: Vec<Vec<usize>>,
    pub meta: ModelMeta,
    pub manifest: RunManifest,
}

impl ModelFile {
    pub fn from_model(
        model: &TensegrityModel,
        params: &TetraParams,
        joint_gap: f64,
        manifest: RunManifest,
    ) -> ModelFile {
        ModelFile {
            schema: MODEL_SCHEMA.to_string(),
            units: UNITS.to_string(),
            nodes: model
                .nodes()
                .iter()
                .map(|n| NodeRecord {
                    id: n.id,
                    xyz: [n.position.x, n.position.y, n.position.z],
                })
                .collect(),
            members: model
                .members()
                .iter()
                .map(|m| MemberRecord {
                    id: m.id,
                    kind: kind_name(m.kind).to_string(),
                    k: m.k,
                    j: m.j,
                    stiffness: m.stiffness,
                    class: class_name(m.class).to_string(),
                    rest_length: m.rest_length,
                })
                .collect(),
            fixed_nodes: model.fixed_nodes().iter().copied().collect(),
            active_routes: model.active_routes().to_vec(),
            meta: ModelMeta {
                k: model.module_count(),
                radius: params.radius,
                height: params.height,
                gap: joint_gap,
            },
            manifest,
        }
    }

    /// Reassembles the in-memory model, re-running all structural
    /// validation.
    pub fn model(&self) -> Result<TensegrityModel> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| Node {
                id: n.id,
                position: Vector3::new(n.xyz[0], n.xyz[1], n.xyz[2]),
            })
            .collect();
        let members = self
            .members
            .iter()
            .map(|m| {
                Ok(Member {
                    id: m.id,
                    kind: kind_from_name(&m.kind)?,
                    k: m.k,
                    j: m.j,
                    stiffness: m.stiffness,
                    rest_length: m.rest_length,
                    class: class_from_name(&m.class)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TensegrityModel::new(
            nodes,
            members,
            BTreeSet::from_iter(self.fixed_nodes.iter().copied()),
            self.active_routes.clone(),
            self.meta.k,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub iterations: usize,
    pub tolerance: f64,
    pub min_density: f64,
}

/// On-disk form of an inverse-kinematics solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub schema: String,
    pub units: String,
    /// Member ids aligned with `q` and `f` (cables first, then bars).
    pub member_ids: Vec<usize>,
    pub q: Vec<f64>,
    /// Member forces f = q·l, stored under the key `f`.
    #[serde(rename = "f")]
    pub forces: Vec<f64>,
    /// Cable rest lengths, aligned with the cable prefix of `member_ids`.
    pub rest_lengths: Vec<f64>,
    pub active_lengths: Vec<f64>,
    pub residual: f64,
    pub objective: f64,
    pub solver: SolverInfo,
    /// Node positions of the solved configuration, in node id order.
    pub node_positions: Vec<[f64; 3]>,
    pub manifest: RunManifest,
}

impl SolutionFile {
    pub fn from_solution(
        model: &TensegrityModel,
        solution: &IkSolution,
        manifest: RunManifest,
    ) -> SolutionFile {
        SolutionFile {
            schema: SOLUTION_SCHEMA.to_string(),
            units: UNITS.to_string(),
            member_ids: model.row_members().iter().map(|m| m.id).collect(),
            q: solution.q.clone(),
            forces: solution.forces.clone(),
            rest_lengths: solution.rest_lengths.clone(),
            active_lengths: solution.active_lengths.clone(),
            residual: solution.residual,
            objective: solution.objective,
            solver: SolverInfo {
                iterations: solution.iterations,
                tolerance: solution.tolerance,
                min_density: solution.min_density,
            },
            node_positions: positions_to_rows(&solution.configuration),
            manifest,
        }
    }

    pub fn configuration(&self) -> Configuration {
        rows_to_configuration(&self.node_positions)
    }
}

/// On-disk form of a relaxation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxFile {
    pub schema: String,
    pub units: String,
    pub node_positions: Vec<[f64; 3]>,
    pub iterations: usize,
    pub peak_residual_force: f64,
    pub kinetic_energy: f64,
    pub min_cable_force: f64,
    pub member_forces: Vec<f64>,
    pub manifest: RunManifest,
}

impl RelaxFile {
    pub fn from_result(
        config: &Configuration,
        report: &RelaxationReport,
        manifest: RunManifest,
    ) -> RelaxFile {
        RelaxFile {
            schema: RELAX_SCHEMA.to_string(),
            units: UNITS.to_string(),
            node_positions: positions_to_rows(config),
            iterations: report.iterations,
            peak_residual_force: report.peak_residual_force,
            kinetic_energy: report.kinetic_energy,
            min_cable_force: report.min_cable_force,
            member_forces: report.member_forces.clone(),
            manifest,
        }
    }

    pub fn configuration(&self) -> Configuration {
        rows_to_configuration(&self.node_positions)
    }
}

pub fn write_model(
    path: &Path,
    model: &TensegrityModel,
    params: &TetraParams,
    joint_gap: f64,
    manifest: RunManifest,
) -> Result<()> {
    write_json(path, &ModelFile::from_model(model, params, joint_gap, manifest))
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let file: ModelFile = read_json(path)?;
    expect_schema(path, &file.schema, MODEL_SCHEMA)?;
    expect_units(path, &file.units)?;
    Ok(file)
}

pub fn write_solution(
    path: &Path,
    model: &TensegrityModel,
    solution: &IkSolution,
    manifest: RunManifest,
) -> Result<()> {
    write_json(path, &SolutionFile::from_solution(model, solution, manifest))
}

pub fn read_solution(path: &Path) -> Result<SolutionFile> {
    let file: SolutionFile = read_json(path)?;
    expect_schema(path, &file.schema, SOLUTION_SCHEMA)?;
    expect_units(path, &file.units)?;
    Ok(file)
}

pub fn write_relax(
    path: &Path,
    config: &Configuration,
    report: &RelaxationReport,
    manifest: RunManifest,
) -> Result<()> {
    write_json(path, &RelaxFile::from_result(config, report, manifest))
}

pub fn read_relax(path: &Path) -> Result<RelaxFile> {
    let file: RelaxFile = read_json(path)?;
    expect_schema(path, &file.schema, RELAX_SCHEMA)?;
    expect_units(path, &file.units)?;
    Ok(file)
}

/// Writes an end-effector trace as CSV plus a manifest sidecar. Columns are
/// `step,x,y,z,bend_deg,twist_deg` followed by one `cableN_m` column per
/// route and, when `relax_errors` is given (one entry per record), a final
/// `relax_err_m` column with the forward-model validation error.
pub fn write_trace_csv(
    path: &Path,
    records: &[TraceRecord],
    relax_errors: Option<&[f64]>,
    manifest: &RunManifest,
) -> Result<()> {
    let routes = records.first().map_or(0, |r| r.active_lengths.len());
    if records.iter().any(|r| r.active_lengths.len() != routes) {
        return Err(Error::InvalidParameter(
            "trace records disagree on route count".into(),
        ));
    }
    if let Some(errors) = relax_errors {
        if errors.len() != records.len() {
            return Err(Error::DimensionMismatch {
                what: "relaxation error count",
                expected: records.len(),
                got: errors.len(),
            });
        }
    }
    let mut text = String::from("step,x,y,z,bend_deg,twist_deg");
    for route in 1..=routes {
        text.push_str(&format!(",cable{route}_m"));
    }
    if relax_errors.is_some() {
        text.push_str(",relax_err_m");
    }
    text.push('\n');
    for (i, record) in records.iter().enumerate() {
        text.push_str(&format!(
            "{},{},{},{},{},{}",
            record.step,
            record.position.x,
            record.position.y,
            record.position.z,
            record.bend_deg,
            record.twist_deg
        ));
        for length in &record.active_lengths {
            text.push_str(&format!(",{length}"));
        }
        if let Some(errors) = relax_errors {
            text.push_str(&format!(",{}", errors[i]));
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    write_manifest_sidecar(path, manifest)
}

/// Writes a cable actuation schedule as CSV plus a manifest sidecar: one
/// `step,route_id,length_m` row per route per step, steps and routes both
/// 1-based.
pub fn write_actuation_csv(
    path: &Path,
    schedule: &[Vec<f64>],
    manifest: &RunManifest,
) -> Result<()> {
    let mut text = String::from("step,route_id,length_m\n");
    for (step, lengths) in schedule.iter().enumerate() {
        for (route, length) in lengths.iter().enumerate() {
            text.push_str(&format!("{},{},{}\n", step + 1, route + 1, length));
        }
    }
    std::fs::write(path, text)?;
    write_manifest_sidecar(path, manifest)
}

/// Exports the model at `config` as Wavefront OBJ: one `v` per node (node id
/// = vertex index) and one `l` per member, cables and bars in separate
/// groups. The manifest rides along in header comments.
pub fn write_obj(
    path: &Path,
    model: &TensegrityModel,
    config: &Configuration,
    manifest: &RunManifest,
) -> Result<()> {
    config.check_model(model)?;
    let manifest_line = serde_json::to_string(manifest)
        .map_err(|e| Error::Format(format!("manifest serialization failed: {e}")))?;
    let mut text = String::from("# tensegrity stack geometry\n");
    text.push_str(&format!("# manifest: {manifest_line}\n"));
    for id in 1..=model.node_count() {
        let p = config.position(id);
        text.push_str(&format!("v {} {} {}\n", p.x, p.y, p.z));
    }
    text.push_str("g cables\n");
    for member in model.row_members() {
        if member.kind == MemberKind::Cable {
            text.push_str(&format!("l {} {}\n", member.k, member.j));
        }
    }
    text.push_str("g bars\n");
    for member in model.row_members() {
        if member.kind == MemberKind::Bar {
            text.push_str(&format!("l {} {}\n", member.k, member.j));
        }
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// `foo.csv` gets its manifest at `foo.csv.manifest.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    path.with_file_name(name)
}

fn write_manifest_sidecar(path: &Path, manifest: &RunManifest) -> Result<()> {
    write_json(&sidecar_path(path), manifest)
}

fn kind_name(kind: MemberKind) -> &'static str {
    match kind {
        MemberKind::Cable => "cable",
        MemberKind::Bar => "bar",
    }
}

fn kind_from_name(name: &str) -> Result<MemberKind> {
    match name {
        "cable" => Ok(MemberKind::Cable),
        "bar" => Ok(MemberKind::Bar),
        other => Err(Error::Format(format!("unknown member kind \"{other}\""))),
    }
}

fn class_name(class: CableClass) -> &'static str {
    match class {
        CableClass::Saddle => "saddle",
        CableClass::Axial => "axial",
        CableClass::ActiveSegment => "active_segment",
        CableClass::None => "none",
    }
}

fn class_from_name(name: &str) -> Result<CableClass> {
    match name {
        "saddle" => Ok(CableClass::Saddle),
        "axial" => Ok(CableClass::Axial),
        "active_segment" => Ok(CableClass::ActiveSegment),
        "none" => Ok(CableClass::None),
        other => Err(Error::Format(format!("unknown cable class \"{other}\""))),
    }
}

fn positions_to_rows(config: &Configuration) -> Vec<[f64; 3]> {
    config.positions().iter().map(|p| [p.x, p.y, p.z]).collect()
}

fn rows_to_configuration(rows: &[[f64; 3]]) -> Configuration {
    Configuration::new(
        rows.iter()
            .map(|r| Vector3::new(r[0], r[1], r[2]))
            .collect(),
    )
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
    file.write_all(b"\n")?;
    file.flush()?;
    Ok(())
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn expect_schema(path: &Path, found: &str, want: &str) -> Result<()> {
    if found != want {
        return Err(Error::Format(format!(
            "{}: schema \"{found}\" is not \"{want}\"",
            path.display()
        )));
    }
    Ok(())
}

fn expect_units(path: &Path, found: &str) -> Result<()> {
    if found != UNITS {
        return Err(Error::Format(format!(
            "{}: units \"{found}\" are not \"{UNITS}\"; refusing to guess a conversion",
            path.display()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ik::{solve_configuration, IkOptions};
    use crate::motion::RelaxationReport;
    use crate::statics::LoadVector;
    use crate::structure::{build_hedra, connectivity, member_lengths};
    use approx::assert_abs_diff_eq;
    use tempfile::tempdir;

    fn manifest() -> RunManifest {
        RunManifest {
            command: "test".into(),
            inputs: vec![],
            outputs: vec!["out".into()],
            parameters: BTreeMap::from([("modules".into(), "2".into())]),
            timestamp: rfc3339_from_epoch(0),
            version: "0.0.0".into(),
            seed: None,
        }
    }

    #[test]
    fn model_files_round_trip_exactly() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let params = TetraParams::default();
        let model = build_hedra(3, &params, 0.02, 3).unwrap();
        write_model(&path, &model, &params, 0.02, manifest()).unwrap();

        let file = read_model(&path).unwrap();
        assert_eq!(file.meta.k, 3);
        assert_eq!(file.meta.radius, 0.1);
        assert_eq!(file.meta.gap, 0.02);
        let rebuilt = file.model().unwrap();
        assert_eq!(
            connectivity(&model).entries(),
            connectivity(&rebuilt).entries()
        );
        assert_eq!(model.active_routes(), rebuilt.active_routes());
        assert_eq!(model.fixed_nodes(), rebuilt.fixed_nodes());
        for (a, b) in model.members().iter().zip(rebuilt.members()) {
            assert_eq!(a, b);
        }
        for (a, b) in model.nodes().iter().zip(rebuilt.nodes()) {
            assert_eq!(a.position, b.position);
        }
    }

    #[test]
    fn solution_files_round_trip_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("solution.json");
        let model = build_hedra(2, &TetraParams::default(), 0.02, 3).unwrap();
        let config = Configuration::from_model(&model);
        let solution = solve_configuration(
            &model,
            &config,
            &LoadVector::zeros(&model),
            &IkOptions::default(),
        )
        .unwrap();
        write_solution(&path, &model, &solution, manifest()).unwrap();

        let file = read_solution(&path).unwrap();
        assert_eq!(file.q, solution.q);
        assert_eq!(file.forces, solution.forces);
        assert_eq!(file.rest_lengths, solution.rest_lengths);
        assert_eq!(file.residual, solution.residual);
        assert_eq!(file.objective, solution.objective);
        assert_eq!(file.member_ids.len(), model.member_count());
        assert_eq!(
            file.configuration().positions(),
            solution.configuration.positions()
        );
    }

    #[test]
    fn relax_files_round_trip_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("relaxed.json");
        let config = Configuration::new(vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(0.1, -0.2, 0.30000000000000004),
        ]);
        let report = RelaxationReport {
            iterations: 42,
            peak_residual_force: 9.5e-6,
            kinetic_energy: 1e-13,
            min_cable_force: 0.0,
            member_forces: vec![1.5, 0.0, -3.25],
        };
        write_relax(&path, &config, &report, manifest()).unwrap();
        let file = read_relax(&path).unwrap();
        assert_eq!(file.configuration().positions(), config.positions());
        assert_eq!(file.member_forces, report.member_forces);
        assert_eq!(file.iterations, 42);
    }

    #[test]
    fn trace_csv_is_exactly_as_documented() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        let records = vec![
            TraceRecord {
                step: 1,
                position: Vector3::new(0.25, -0.5, 0.125),
                bend_deg: 9.5,
                twist_deg: 0.0,
                active_lengths: vec![0.5, 0.625, 0.75],
            },
            TraceRecord {
                step: 2,
                position: Vector3::new(0.5, -1.0, 0.25),
                bend_deg: 19.0,
                twist_deg: -0.5,
                active_lengths: vec![0.4375, 0.625, 0.8125],
            },
        ];
        write_trace_csv(&path, &records, None, &manifest()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "step,x,y,z,bend_deg,twist_deg,cable1_m,cable2_m,cable3_m\n\
             1,0.25,-0.5,0.125,9.5,0,0.5,0.625,0.75\n\
             2,0.5,-1,0.25,19,-0.5,0.4375,0.625,0.8125\n"
        );
        let sidecar = sidecar_path(&path);
        assert!(sidecar.ends_with("trace.csv.manifest.json"));
        let stored: RunManifest =
            serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
        assert_eq!(stored, manifest());

        write_trace_csv(&path, &records, Some(&[0.001, 0.002]), &manifest()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with(
            "step,x,y,z,bend_deg,twist_deg,cable1_m,cable2_m,cable3_m,relax_err_m\n"
        ));
        assert!(text.contains(",0.001\n"));
        assert!(write_trace_csv(&path, &records, Some(&[0.1]), &manifest()).is_err());
    }

    #[test]
    fn actuation_csv_lists_every_route_per_step() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("actuation.csv");
        let schedule = vec![vec![0.5, 0.75], vec![0.25, 0.875]];
        write_actuation_csv(&path, &schedule, &manifest()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "step,route_id,length_m\n1,1,0.5\n1,2,0.75\n2,1,0.25\n2,2,0.875\n"
        );
        assert!(sidecar_path(&path).exists());
    }

    #[test]
    fn obj_export_round_trips_the_geometry() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("stack.obj");
        let model = build_hedra(2, &TetraParams::default(), 0.02, 3).unwrap();
        let config = Configuration::from_model(&model);
        write_obj(&path, &model, &config, &manifest()).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();

        let vertices: Vec<Vector3<f64>> = text
            .lines()
            .filter(|l| l.starts_with("v "))
            .map(|l| {
                let mut split = l.split_whitespace().skip(1);
                Vector3::new(
                    split.next().unwrap().parse().unwrap(),
                    split.next().unwrap().parse().unwrap(),
                    split.next().unwrap().parse().unwrap(),
                )
            })
            .collect();
        assert_eq!(vertices.len(), 8);
        let lines: Vec<(usize, usize)> = text
            .lines()
            .filter(|l| l.starts_with("l "))
            .map(|l| {
                let mut split = l.split_whitespace().skip(1);
                (
                    split.next().unwrap().parse().unwrap(),
                    split.next().unwrap().parse().unwrap(),
                )
            })
            .collect();
        assert_eq!(lines.len(), 21);
        let cables_at = text.find("g cables").unwrap();
        let bars_at = text.find("g bars").unwrap();
        assert!(cables_at < bars_at);
        assert!(text.starts_with("# tensegrity stack geometry\n# manifest: {"));

        // Lengths measured from the file match the in-memory model exactly.
        let lengths = member_lengths(&model, &config).unwrap();
        for (row, (a, b)) in lines.iter().enumerate() {
            let measured = (vertices[b - 1] - vertices[a - 1]).norm();
            assert_abs_diff_eq!(measured, lengths[row], epsilon = 1e-9);
        }
    }

    #[test]
    fn readers_reject_other_schemas_and_units() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("model.json");
        let params = TetraParams::default();
        let model = build_hedra(2, &params, 0.02, 3).unwrap();
        write_model(&path, &model, &params, 0.02, manifest()).unwrap();

        let mut file: ModelFile =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        file.schema = "hedra_model_v0".into();
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        assert!(matches!(read_model(&path).unwrap_err(), Error::Format(_)));

        file.schema = MODEL_SCHEMA.into();
        file.units = "mm,kN".into();
        std::fs::write(&path, serde_json::to_string(&file).unwrap()).unwrap();
        assert!(matches!(read_model(&path).unwrap_err(), Error::Format(_)));

        std::fs::write(&path, "not json").unwrap();
        assert!(matches!(read_model(&path).unwrap_err(), Error::Format(_)));
        assert!(matches!(
            read_model(&dir.path().join("missing.json")).unwrap_err(),
            Error::Io(_)
        ));
    }

    #[test]
    fn bad_member_kinds_fail_model_reconstruction() {
        let params = TetraParams::default();
        let model = build_hedra(2, &params, 0.02, 3).unwrap();
        let mut file = ModelFile::from_model(&model, &params, 0.02, manifest());
        file.members[0].kind = "strut".into();
        assert!(matches!(file.model().unwrap_err(), Error::Format(_)));
        file.members[0].kind = "cable".into();
        file.members[0].class = "diagonal".into();
        assert!(matches!(file.model().unwrap_err(), Error::Format(_)));
    }

    #[test]
    fn timestamps_are_deterministic() {
        assert_eq!(rfc3339_from_epoch(0), "1970-01-01T00:00:00Z");
        assert_eq!(rfc3339_from_epoch(1_000_000_000), "2001-09-09T01:46:40Z");
    }
}
