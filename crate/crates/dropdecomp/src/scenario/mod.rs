//! Scenario files, fixture generation and run reports.

mod fixtures;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub use fixtures::{
    boundary_loop, cluster_fixture, crossing_fixture, endpoint_mass_field, sdp_spectra, skeleton_fixture, witness_fixture,
    Mutation,
};

use crate::decomp_one::{decompose_theorem_i_with, TheoremOptions};
use crate::decomp_two::{
    cluster_projections, coordinate_functions, make_distinct_spectrum, min_gap, reduce_to_skeleton, uniform_mesh,
    verify_decomposition, verify_subcomplex_variant, ClusterRanks, SpaceFunction, SpaceHom,
};
use crate::error::{Error, Result};
use crate::linalg::{from_pairs, identity, to_pairs};
use crate::matrix_rep::{Block, DimensionDropElement, Fiber, HomField};
use crate::simplicial::{Point, SimplicialComplex2, SubComplex};

pub const SCHEMA_VERSION: &str = "dropdecomp/1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    DecomposeI,
    Skeletonize,
    Distinct,
    Cluster,
    VerifyIi,
    Generate,
}

impl Operation {
    pub const ALL: [Operation; 6] = [
        Operation::DecomposeI,
        Operation::Skeletonize,
        Operation::Distinct,
        Operation::Cluster,
        Operation::VerifyIi,
        Operation::Generate,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Operation::DecomposeI => "decompose-i",
            Operation::Skeletonize => "skeletonize",
            Operation::Distinct => "distinct",
            Operation::Cluster => "cluster",
            Operation::VerifyIi => "verify-ii",
            Operation::Generate => "generate",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|o| o.as_str() == name)
            .ok_or_else(|| Error::UnknownOperation(name.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Algebra {
    pub k: usize,
    #[serde(default = "one")]
    pub l: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranks: Option<ClusterRanks>,
}

fn one() -> usize {
    1
}

/// `interval`, `triangle`, `hexagon-disk`, `path-graph-<n>`, an inline
/// description or a JSON file relative to the scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ComplexSpec {
    Named(String),
    Inline {
        vertices: usize,
        #[serde(default)]
        edges: Vec<[usize; 2]>,
        #[serde(default)]
        triangles: Vec<[usize; 3]>,
    },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    EndpointMass,
    BoundaryLoop,
    Sdp,
    Skeleton,
    Crossing,
    Cluster,
    Witness,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecipeParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap_offset: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kprime: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub winding: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jitter: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation: Option<Mutation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcomplex: Option<SubComplex>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Recipe {
    pub kind: GeneratorKind,
    #[serde(default)]
    pub params: RecipeParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum HomSpec {
    /// Constant fiber with the given blocks; the frame defaults to the
    /// identity and is otherwise a matrix of `[re, im]` pairs.
    Explicit {
        blocks: Vec<Block>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        frame: Option<Vec<Vec<[f64; 2]>>>,
    },
    Generator(Recipe),
}

/// Test functions `F` (or `H`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `t` and `t²` on `[0, 1]`; vertex coordinates on a complex.
    #[default]
    Standard,
    /// `t^1, …, t^degree` on `[0, 1]`.
    Monomials { degree: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub epsilon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub algebra: Algebra,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complex: Option<ComplexSpec>,
    pub homomorphism: HomSpec,
    #[serde(default)]
    pub family: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<FamilySpec>,
    pub tolerances: Tolerances,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem: Option<TheoremOptions>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Directory against which file references resolve.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        let mut s = Self::from_json(&text)?;
        s.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(s)
    }

    /// Operation named in the file, if any, checked against `requested`.
    pub fn resolve_operation(&self, requested: Option<&str>) -> Result<Operation> {
        let named = self.operation.as_deref().map(Operation::parse).transpose()?;
        let req = requested.map(Operation::parse).transpose()?;
        match (named, req) {
            (Some(a), Some(b)) if a != b => Err(Error::Schema(format!(
                "scenario names operation {} but {} was requested",
                a.as_str(),
                b.as_str()
            ))),
            (_, Some(b)) => Ok(b),
            (Some(a), None) => Ok(a),
            (None, None) => Err(Error::Schema("no operation given".into())),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            return Err(Error::Schema(format!("version {:?}, expected {SCHEMA_VERSION:?}", self.version)));
        }
        if self.algebra.k == 0 || self.algebra.l == 0 {
            return Err(Error::Schema("k and l must be positive".into()));
        }
        let t = &self.tolerances;
        if !(t.epsilon > 0.0) || !(t.tol > 0.0) || t.eta.is_some_and(|e| !(e > 0.0)) || t.delta.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::Schema("tolerances must be positive".into()));
        }
        if matches!(self.homomorphism, HomSpec::Generator(_)) && self.seed.is_none() {
            return Err(Error::Schema("a generator recipe needs a seed".into()));
        }
        if let Some(ComplexSpec::File(p)) = &self.complex {
            let full = self.base_dir.join(p);
            if !full.exists() {
                return Err(Error::NotFound(full.display().to_string()));
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("serializable"))
    }

    fn complex(&self) -> Result<SimplicialComplex2> {
        match &self.complex {
            None => Err(Error::Schema("this operation needs a complex".into())),
            Some(ComplexSpec::Named(name)) => named_complex(name),
            Some(ComplexSpec::Inline { vertices, edges, triangles }) => SimplicialComplex2::new(*vertices, edges, triangles),
            Some(ComplexSpec::File(p)) => {
                let full = self.base_dir.join(p);
                let text = std::fs::read_to_string(&full).map_err(|e| io_error(&full, e))?;
                let v: Value = serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", full.display())))?;
                SimplicialComplex2::from_json(&v)
            }
        }
    }

    fn recipe(&self) -> Result<(&Recipe, u64)> {
        match &self.homomorphism {
            HomSpec::Generator(r) => Ok((r, self.seed.ok_or_else(|| Error::Schema("missing seed".into()))?)),
            HomSpec::Explicit { .. } => Err(Error::Schema("this operation needs a generator recipe".into())),
        }
    }

    fn expect_kind(&self, kinds: &[GeneratorKind]) -> Result<(&Recipe, u64)> {
        let (r, seed) = self.recipe()?;
        if !kinds.contains(&r.kind) {
            return Err(Error::Schema(format!("generator {:?} does not fit this operation", r.kind)));
        }
        Ok((r, seed))
    }

    fn eta(&self) -> Result<f64> {
        self.tolerances.eta.ok_or_else(|| Error::Schema("tolerances.eta is required".into()))
    }
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::NotFound {
        Error::NotFound(path.display().to_string())
    } else {
        Error::Io(format!("{}: {e}", path.display()))
    }
}

pub fn named_complex(name: &str) -> Result<SimplicialComplex2> {
    match name {
        "interval" => Ok(SimplicialComplex2::interval()),
        "triangle" => Ok(SimplicialComplex2::triangle()),
        "hexagon-disk" => Ok(SimplicialComplex2::hexagon_disk()),
        _ => match name.strip_prefix("path-graph-").and_then(|n| n.parse::<usize>().ok()) {
            Some(n) if n >= 2 => Ok(SimplicialComplex2::path_graph(n)),
            _ => Err(Error::Schema(format!("unknown complex {name:?}"))),
        },
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

fn interval_family(spec: &FamilySpec, k: usize) -> Vec<DimensionDropElement> {
    match spec {
        FamilySpec::Standard => vec![
            DimensionDropElement::identity_function(k),
            DimensionDropElement::scalar(k, "t^2", |t| t * t),
        ],
        FamilySpec::Monomials { degree } => (1..=*degree)
            .map(|d| DimensionDropElement::scalar(k, format!("t^{d}"), move |t| t.powi(d as i32)))
            .collect(),
    }
}

fn space_family(spec: &FamilySpec, complex: &SimplicialComplex2) -> Vec<SpaceFunction> {
    let coords = coordinate_functions(complex);
    match spec {
        FamilySpec::Standard => coords,
        FamilySpec::Monomials { degree } => {
            let mut out = Vec::new();
            for d in 1..=*degree {
                for (v, _) in coords.iter().enumerate() {
                    out.push(SpaceFunction::new(format!("x{v}^{d}"), move |p: &Point| p.weight(v).powi(d as i32)));
                }
            }
            out
        }
    }
}

/// Host data recorded next to every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub crate_version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        let threads = std::env::var("DROPDECOMP_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
        Self {
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            threads,
        }
    }
}

/// A named CSV table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario_hash: String,
    pub operation: Operation,
    pub wall_time_ms: f64,
    pub pass: bool,
    /// Certificate or verdict; deterministic given the scenario.
    pub payload: Value,
    pub payload_hash: String,
    pub environment: Environment,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl RunReport {
    /// `0` on pass, `2` when the computed data miss their bounds.
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            2
        }
    }

    /// Write `certificate.json`, `report.json` and the CSV tables.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let put = |name: &str, bytes: &[u8]| {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| io_error(&p, e))
        };
        put("certificate.json", &payload_bytes(&self.payload))?;
        put("report.json", &serde_json::to_vec_pretty(self).expect("serializable"))?;
        for t in &self.tables {
            put(&format!("{}.csv", t.name), t.csv.as_bytes())?;
        }
        Ok(())
    }
}

pub fn payload_bytes(payload: &Value) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(payload).expect("serializable");
    v.push(b'\n');
    v
}

struct Outcome {
    pass: bool,
    payload: Value,
    tables: Vec<Table>,
}

fn table(name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> Table {
    let mut csv = format!("{header}\n");
    for r in rows {
        csv.push_str(&r);
        csv.push('\n');
    }
    Table { name: name.into(), csv }
}

/// Validate and execute `scenario` as `op`.
pub fn run(scenario: &Scenario, op: Operation) -> Result<RunReport> {
    scenario.validate()?;
    let start = Instant::now();
    let out = match op {
        Operation::DecomposeI => run_decompose(scenario)?,
        Operation::Skeletonize => run_skeleton(scenario)?,
        Operation::Distinct => run_distinct(scenario)?,
        Operation::Cluster => run_cluster(scenario)?,
        Operation::VerifyIi => run_verify(scenario)?,
        Operation::Generate => run_generate(scenario)?,
    };
    Ok(RunReport {
        scenario_hash: scenario.hash(),
        operation: op,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        pass: out.pass,
        payload_hash: sha256_hex(&payload_bytes(&out.payload)),
        payload: out.payload,
        environment: Environment::current(),
        tables: out.tables,
    })
}

fn hom_field(s: &Scenario) -> Result<HomField> {
    let complex = s.complex()?;
    let k = s.algebra.k;
    match &s.homomorphism {
        HomSpec::Explicit { blocks, frame } => {
            let width: usize = blocks.iter().map(|b| b.width(k, 1)).sum();
            let frame = match frame {
                Some(rows) => from_pairs(rows)?,
                None => identity(width),
            };
            let fiber = Fiber::new(frame, blocks.clone(), k, 1)?;
            Ok(HomField::new(k, complex, std::sync::Arc::new(move |_: &Point| Ok(fiber.clone()))))
        }
        HomSpec::Generator(_) => {
            let (r, seed) = s.expect_kind(&[GeneratorKind::EndpointMass])?;
            let rank = r.params.rank.ok_or_else(|| Error::Schema("endpoint-mass needs params.rank".into()))?;
            endpoint_mass_field(
                &complex,
                k,
                rank,
                r.params.amplitude.unwrap_or(0.0),
                r.params.cap_offset.unwrap_or(0.0),
                seed,
            )
        }
    }
}

fn run_decompose(s: &Scenario) -> Result<Outcome> {
    let phi = hom_field(s)?;
    let family = interval_family(&s.family, s.algebra.k);
    let mut opts = s.theorem.clone().unwrap_or_default();
    if opts.eta.is_none() {
        opts.eta = s.tolerances.eta;
    }
    let d = decompose_theorem_i_with(&phi, &family, s.tolerances.epsilon, &opts)?;
    let c = &d.certificate;
    let pass = c.passes(s.tolerances.tol);
    Ok(Outcome {
        pass,
        payload: json!({ "operation": "decompose-i", "pass": pass, "certificate": c }),
        tables: vec![Table {
            name: "errors".into(),
            csv: c.error_csv(),
        }],
    })
}

fn run_skeleton(s: &Scenario) -> Result<Outcome> {
    let (_, seed) = s.expect_kind(&[GeneratorKind::Skeleton])?;
    let (eps, eta) = (s.tolerances.epsilon, s.eta()?);
    let phi = skeleton_fixture(s.algebra.l, s.algebra.k, seed);
    let family = space_family(&s.family, &phi.complex);
    let r = reduce_to_skeleton(&phi, &family, eps, eta)?;
    let pass = r.error < eps && r.pairing < eta && r.sigma > 0.0;
    let punctures: Vec<Value> = r
        .punctures
        .iter()
        .map(|p| json!({ "triangle": p.triangle, "point": p.point, "margin": p.margin, "moved": p.moved }))
        .collect();
    Ok(Outcome {
        pass,
        payload: json!({
            "operation": "skeletonize",
            "pass": pass,
            "error": r.error,
            "pairing": r.pairing,
            "eta_prime": r.eta_prime,
            "sigma": r.sigma,
            "reduced_clearance": r.reduced_clearance,
            "mesh_steps": r.mesh.len().saturating_sub(1),
            "refined_vertices": r.complex.num_vertices(),
            "punctures": punctures,
        }),
        tables: vec![table(
            "punctures",
            "triangle,margin,moved",
            r.punctures
                .iter()
                .map(|p| format!("{:?},{:.6e},{}", p.triangle, p.margin, p.moved).replace(", ", " ")),
        )],
    })
}

fn gap_rows(hom: &SpaceHom, samples: &[f64]) -> Vec<String> {
    samples
        .iter()
        .enumerate()
        .map(|(i, &y)| format!("{i},{y:.6},{:.6e}", min_gap(&hom.complex, &hom.fiber(y).points)))
        .collect()
}

fn run_distinct(s: &Scenario) -> Result<Outcome> {
    let (_, seed) = s.expect_kind(&[GeneratorKind::Crossing])?;
    let (eps, eta) = (s.tolerances.epsilon, s.eta()?);
    let phi = crossing_fixture(s.algebra.l, s.algebra.k, seed);
    let family = space_family(&s.family, &phi.complex);
    let r = make_distinct_spectrum(&phi, &family, eps, eta)?;
    let ends = r.psi.fiber(0.0) == phi.fiber(0.0) && r.psi.fiber(1.0) == phi.fiber(1.0);
    let pass = ends && r.min_gap > 0.0 && r.error < eps;
    Ok(Outcome {
        pass,
        payload: json!({
            "operation": "distinct",
            "pass": pass,
            "unchanged": r.unchanged,
            "endpoints_exact": ends,
            "min_gap": r.min_gap,
            "error": r.error,
            "pairing": r.pairing,
            "spread_radius": r.spread_radius,
            "mesh_steps": r.mesh.len().saturating_sub(1),
        }),
        tables: vec![table("gaps", "sample-id,y,min-gap", gap_rows(&r.psi, &r.samples))],
    })
}

fn run_cluster(s: &Scenario) -> Result<Outcome> {
    let (recipe, seed) = s.expect_kind(&[GeneratorKind::Cluster])?;
    let ranks = s.algebra.ranks.ok_or_else(|| Error::Schema("algebra.ranks is required".into()))?;
    let (eps, eta, tol) = (s.tolerances.epsilon, s.eta()?, s.tolerances.tol);
    let k = s.algebra.k;
    let (phi, base) = cluster_fixture(ranks, k, recipe.params.jitter.unwrap_or(0.01), eta, seed)?;
    let f = cluster_projections(&phi, &base, eta, ranks, recipe.params.steps.unwrap_or(16))?;
    let family = space_family(&s.family, &phi.complex);
    let err = f.conclusion_error(&phi, &family);
    let pass = f.ranks_exact
        && f.resolution_defect <= tol
        && f.orthogonality_defect <= tol
        && f.endpoint_defect <= tol
        && err < eps;
    let rows = f.samples.iter().enumerate().map(|(i, y)| {
        let ranks: Vec<String> = (0..ranks.l1).map(|j| f.subprojection_rank(i, j).to_string()).collect();
        format!("{i},{y:.6},{}", ranks.join(","))
    });
    let header = std::iter::once("sample-id,y".to_string())
        .chain((1..=ranks.l1).map(|j| format!("rank-p{j}")))
        .collect::<Vec<_>>()
        .join(",");
    Ok(Outcome {
        pass,
        payload: json!({
            "operation": "cluster",
            "pass": pass,
            "ranks": ranks,
            "k": k,
            "target_ranks": f.target_ranks,
            "ranks_exact": f.ranks_exact,
            "p0_rank": f.p0_rank,
            "separation": f.separation,
            "pairing": f.pairing,
            "resolution_defect": f.resolution_defect,
            "orthogonality_defect": f.orthogonality_defect,
            "containment_defect": f.containment_defect,
            "endpoint_defect": f.endpoint_defect,
            "patch_defect": f.patch_defect,
            "windows": f.windows,
            "conclusion_error": err,
        }),
        tables: vec![table("ranks", &header, rows)],
    })
}

fn run_verify(s: &Scenario) -> Result<Outcome> {
    let (recipe, seed) = s.expect_kind(&[GeneratorKind::Witness])?;
    let inst = witness_fixture(recipe.params.mutation.unwrap_or(Mutation::None), seed);
    let mut params = inst.params.clone();
    params.epsilon = s.tolerances.epsilon;
    params.tol = s.tolerances.tol;
    if let Some(d) = s.tolerances.delta {
        params.delta = d;
    }
    let verdict = match &recipe.params.subcomplex {
        Some(x1) => verify_subcomplex_variant(&inst.decomp, &inst.phi, &inst.psi, x1, &inst.family, &params)?,
        None => verify_decomposition(&inst.decomp, &inst.phi, &inst.psi, &inst.family, &params)?,
    };
    Ok(Outcome {
        pass: verdict.pass,
        tables: vec![table(
            "clauses",
            "clause,pass,value",
            verdict.clauses.iter().map(|c| format!("{},{},{:.6e}", c.name, c.pass, c.value)),
        )],
        payload: json!({ "operation": "verify-ii", "pass": verdict.pass, "verdict": verdict }),
    })
}

fn space_samples(hom: &SpaceHom, m: usize) -> Vec<Value> {
    uniform_mesh(m)
        .into_iter()
        .map(|y| {
            let f = hom.fiber(y);
            json!({ "y": y, "frame": to_pairs(&f.frame), "points": f.points })
        })
        .collect()
}

fn run_generate(s: &Scenario) -> Result<Outcome> {
    let (recipe, seed) = s.recipe()?;
    let p = &recipe.params;
    let k = s.algebra.k;
    let samples = p.samples.unwrap_or(8);
    let data = match recipe.kind {
        GeneratorKind::EndpointMass => {
            let field = hom_field(s)?;
            let pts = field.complex.sample_points(2);
            let fibers = pts
                .iter()
                .map(|x| {
                    let f = field.fiber(x)?;
                    Ok(json!({ "point": x, "frame": to_pairs(&f.frame), "blocks": f.blocks }))
                })
                .collect::<Result<Vec<_>>>()?;
            json!({ "complex": field.complex.to_json(), "fibers": fibers })
        }
        GeneratorKind::BoundaryLoop => {
            let kp = p.kprime.ok_or_else(|| Error::Schema("boundary-loop needs params.kprime".into()))?;
            let lp = boundary_loop(k, kp, p.winding.unwrap_or(0), samples.max(3), seed);
            let fibers: Vec<Value> = lp
                .iter()
                .map(|f| json!({ "frame": to_pairs(&f.frame), "blocks": f.blocks }))
                .collect();
            json!({ "loop": fibers })
        }
        GeneratorKind::Sdp => {
            let n = p.n.ok_or_else(|| Error::Schema("sdp needs params.n".into()))?;
            let delta = s.tolerances.delta.ok_or_else(|| Error::Schema("tolerances.delta is required".into()))?;
            let spectra = sdp_spectra(n, k, samples, s.eta()?, delta, seed)?;
            let lists: Vec<Vec<f64>> = spectra.iter().map(|m| m.expand()).collect();
            json!({ "spectra": lists })
        }
        GeneratorKind::Skeleton => json!({ "samples": space_samples(&skeleton_fixture(s.algebra.l, k, seed), samples) }),
        GeneratorKind::Crossing => json!({ "samples": space_samples(&crossing_fixture(s.algebra.l, k, seed), samples) }),
        GeneratorKind::Cluster => {
            let ranks = s.algebra.ranks.ok_or_else(|| Error::Schema("algebra.ranks is required".into()))?;
            let (phi, base) = cluster_fixture(ranks, k, p.jitter.unwrap_or(0.01), s.eta()?, seed)?;
            json!({ "base": base, "samples": space_samples(&phi, samples) })
        }
        GeneratorKind::Witness => {
            let inst = witness_fixture(p.mutation.unwrap_or(Mutation::None), seed);
            json!({ "points": inst.decomp.points, "arc": inst.decomp.arc, "samples": space_samples(&inst.phi, samples) })
        }
    };
    Ok(Outcome {
        pass: true,
        payload: json!({ "operation": "generate", "kind": recipe.kind, "seed": seed, "hypothesis_rechecked": true, "data": data }),
        tables: Vec::new(),
    })
}
