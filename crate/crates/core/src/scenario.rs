//! Scenario files: which model, which jets, which pipelines. Running a scenario
//! file produces a JSON report whose bytes depend only on the file and seed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::holonomy::homogeneity_verdict;
use crate::jet::{self, check_infinitesimal_model, JetJson, TwoJet};
use crate::lie::{CatalogSpec, ModelJson, SymmetricSpaceModel};
use crate::nomizu;
use crate::numeric::{self, Subspace, Tolerances};
use crate::rspace::{self, RSpaceSearch};

pub const SCHEMA_VERSION: u32 = 1;
pub const RSPACE_ATTEMPTS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub schema: u32,
    pub scenarios: Vec<Scenario>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    pub model: ModelSpec,
    pub jets: Vec<JetSpec>,
    pub pipelines: Vec<Pipeline>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerances: Option<ToleranceOverride>,
    pub rng_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    Catalog(CatalogSpec),
    Scaled {
        catalog: CatalogSpec,
        scale: f64,
    },
    Inline {
        inline: Box<ModelJson>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum JetSpec {
    /// b(x, y) = κ<x, y> ν on W spanned by `tangent` (or the first `tangent_dim` axes).
    Umbilic {
        kappa: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tangent: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tangent_dim: Option<usize>,
        normal: Vec<f64>,
    },
    /// Unit tangent x/|x| with acceleration y.
    Circle { x: Vec<f64>, y: Vec<f64> },
    TotallyGeodesic { tangent: Vec<Vec<f64>> },
    Inline {
        #[serde(rename = "W_onb")]
        w_onb: Vec<Vec<f64>>,
        b: Vec<Vec<Vec<f64>>>,
    },
    /// Veronese jet of an m-dimensional tangent space; λ defaults to the
    /// parallel radius in the unit sphere, sqrt(m/(m+1)).
    Veronese {
        m: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lambda: Option<f64>,
    },
}

impl JetSpec {
    pub fn label(&self) -> &'static str {
        match self {
            JetSpec::Umbilic { .. } => "umbilic",
            JetSpec::Circle { .. } => "circle",
            JetSpec::TotallyGeodesic { .. } => "totally_geodesic",
            JetSpec::Inline { .. } => "inline",
            JetSpec::Veronese { .. } => "veronese",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pipeline {
    ModelCheck,
    Nomizu,
    Holonomy,
    FlatCase,
    Rspace,
}

impl Pipeline {
    pub fn name(self) -> &'static str {
        match self {
            Pipeline::ModelCheck => "model_check",
            Pipeline::Nomizu => "nomizu",
            Pipeline::Holonomy => "holonomy",
            Pipeline::FlatCase => "flat_case",
            Pipeline::Rspace => "rspace",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceOverride {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub feas_rel: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub indeterminate_band: Option<f64>,
}

impl ToleranceOverride {
    pub fn apply(&self, base: Tolerances) -> Result<Tolerances> {
        let t = Tolerances {
            rank_rel: self.rank_rel.unwrap_or(base.rank_rel),
            residual_abs: self.residual_abs.unwrap_or(base.residual_abs),
            feas_rel: self.feas_rel.unwrap_or(base.feas_rel),
            indeterminate_band: self.indeterminate_band.unwrap_or(base.indeterminate_band),
        };
        t.validate()?;
        Ok(t)
    }
}

/// A failure to load or resolve a scenario file, with a location.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadError {
    pub location: String,
    pub message: String,
    /// The input parsed but a model or jet failed a structural check.
    pub structural: bool,
}

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

pub fn parse_scenario_file(text: &str, source: &str) -> std::result::Result<ScenarioFile, LoadError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| LoadError {
        location: format!("{source}:{}:{}", e.line(), e.column()),
        message: e.to_string(),
        structural: false,
    })?;
    if file.schema != SCHEMA_VERSION {
        return Err(LoadError {
            location: format!("{source}: schema"),
            message: format!("unsupported schema {} (expected {SCHEMA_VERSION})", file.schema),
            structural: false,
        });
    }
    let mut seen = std::collections::BTreeSet::new();
    for (i, s) in file.scenarios.iter().enumerate() {
        if !seen.insert(s.id.as_str()) {
            return Err(LoadError {
                location: format!("{source}: scenarios[{i}].id"),
                message: format!("duplicate scenario id '{}'", s.id),
                structural: false,
            });
        }
    }
    Ok(file)
}

pub fn build_model(spec: &ModelSpec, tol: &Tolerances) -> Result<SymmetricSpaceModel> {
    match spec {
        ModelSpec::Catalog(c) => c.build(tol),
        ModelSpec::Scaled { catalog, scale } => catalog.build_scaled(*scale, tol),
        ModelSpec::Inline { inline } => SymmetricSpaceModel::from_json(inline, tol),
    }
}

fn tangent_space(vs: &[Vec<f64>], n: usize, tol: &Tolerances) -> Result<Subspace> {
    let vs: Vec<DVector<f64>> = vs.iter().map(|v| DVector::from_column_slice(v)).collect();
    let w = numeric::span(&vs, n, tol)?;
    if w.dim() != vs.len() {
        return Err(Error::Input("tangent vectors are linearly dependent".into()));
    }
    Ok(w.canonical_signs())
}

fn vector(v: &[f64], n: usize, what: &str) -> Result<DVector<f64>> {
    if v.len() != n {
        return Err(Error::Input(format!("{what} has length {}, model has dim p = {n}", v.len())));
    }
    Ok(DVector::from_column_slice(v))
}

pub fn build_jet(space: &Arc<SymmetricSpaceModel>, spec: &JetSpec, tol: &Tolerances) -> Result<TwoJet> {
    let n = space.dim_p();
    match spec {
        JetSpec::Umbilic {
            kappa,
            tangent,
            tangent_dim,
            normal,
        } => {
            let w = match (tangent, tangent_dim) {
                (Some(t), None) => tangent_space(t, n, tol)?,
                (None, Some(k)) if *k <= n => Subspace::axes(n, 0..*k),
                _ => {
                    return Err(Error::Input(
                        "umbilic needs exactly one of tangent / tangent_dim (<= dim p)".into(),
                    ))
                }
            };
            let nu = vector(normal, n, "normal")?;
            if nu.norm() == 0.0 || w.project(&nu).norm() > tol.residual_abs * nu.norm().max(1.0) {
                return Err(Error::Input("umbilic normal must be nonzero and orthogonal to W".into()));
            }
            jet::umbilic(space.clone(), w, &nu, *kappa, tol)
        }
        JetSpec::Circle { x, y } => jet::circle(
            space.clone(),
            &vector(x, n, "x")?,
            &vector(y, n, "y")?,
            tol,
        ),
        JetSpec::TotallyGeodesic { tangent } => {
            jet::totally_geodesic(space.clone(), tangent_space(tangent, n, tol)?, tol)
        }
        JetSpec::Inline { w_onb, b } => TwoJet::from_json(
            space.clone(),
            &JetJson {
                model_ref: String::new(),
                w_onb: w_onb.clone(),
                b: b.clone(),
            },
            tol,
        ),
        JetSpec::Veronese { m, lambda } => {
            let lambda = lambda.unwrap_or_else(|| (*m as f64 / (*m as f64 + 1.0)).sqrt());
            jet::veronese(space.clone(), *m, lambda, tol)
        }
    }
}

/// Outcome of one pipeline on one jet (or on the model for `rspace`).
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Ok { result: Value },
    NotApplicable { reason: String },
    Error { kind: String, message: String, residuals: BTreeMap<String, f64> },
}

impl Outcome {
    fn from_result<T: Serialize>(r: Result<T>) -> Self {
        match r {
            Ok(v) => Outcome::Ok {
                result: serde_json::to_value(v).expect("report types serialize"),
            },
            Err(Error::Precondition(reason)) => Outcome::NotApplicable { reason },
            Err(e) => {
                let (kind, residuals) = match &e {
                    Error::Structural { what, residual } => {
                        ("structural", BTreeMap::from([(what.clone(), *residual)]))
                    }
                    Error::Construction { residuals } => ("construction", residuals.clone()),
                    Error::Input(_) => ("input", BTreeMap::new()),
                    Error::Precondition(_) => unreachable!(),
                };
                Outcome::Error {
                    kind: kind.into(),
                    message: e.to_string(),
                    residuals,
                }
            }
        }
    }

    pub fn is_error(&self) -> bool {
        matches!(self, Outcome::Error { .. })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ModelSummary {
    pub name: String,
    pub dim_g: usize,
    pub dim_k: usize,
    pub dim_p: usize,
    pub rank: usize,
    pub compact: bool,
}

impl ModelSummary {
    pub fn of(space: &SymmetricSpaceModel, tol: &Tolerances) -> Self {
        ModelSummary {
            name: space.name.clone(),
            dim_g: space.dim_g(),
            dim_k: space.dim_k(),
            dim_p: space.dim_p(),
            rank: space.rank(tol),
            compact: space.is_compact_type(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct JetReport {
    pub index: usize,
    pub generator: String,
    pub dim_w: usize,
    pub results: BTreeMap<String, Outcome>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScenarioReport {
    pub id: String,
    pub model: ModelSummary,
    pub rng_seed: u64,
    pub tolerances: Tolerances,
    pub model_results: BTreeMap<String, Outcome>,
    pub jets: Vec<JetReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub artifact_version: String,
    pub tolerances: Tolerances,
    pub scenarios: Vec<ScenarioReport>,
}

impl RunReport {
    pub fn has_errors(&self) -> bool {
        self.scenarios.iter().any(|s| {
            s.model_results.values().any(Outcome::is_error)
                || s.jets.iter().any(|j| j.results.values().any(Outcome::is_error))
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    pub tolerances: Option<ToleranceOverride>,
    pub seed: Option<u64>,
    pub timing: bool,
}

fn run_pipeline(p: Pipeline, jet: &TwoJet, tol: &Tolerances) -> Outcome {
    match p {
        Pipeline::ModelCheck => Outcome::from_result(check_infinitesimal_model(jet, tol)),
        Pipeline::Nomizu => Outcome::from_result(nomizu::construct(jet, tol).and_then(|r| {
            let brute = nomizu::generated_algebra_dim(jet.space(), &r.hat_gamma, tol)?;
            let mut v = serde_json::to_value(&r).expect("serializes");
            v["generated_algebra_dim"] = json!(brute);
            Ok(v)
        })),
        Pipeline::Holonomy => Outcome::from_result(homogeneity_verdict(jet, tol)),
        Pipeline::FlatCase => Outcome::from_result(rspace::flat_case_pipeline(jet, tol)),
        Pipeline::Rspace => unreachable!("model-level pipeline"),
    }
}

fn rspace_outcome(space: &SymmetricSpaceModel, seed: u64, tol: &Tolerances) -> Outcome {
    let found = match rspace::find_rspace_element(space, RSPACE_ATTEMPTS, seed, tol) {
        Ok(RSpaceSearch::Found(d)) => d,
        Ok(RSpaceSearch::NotFound { reason }) => return Outcome::NotApplicable { reason },
        Err(e) => return Outcome::from_result::<()>(Err(e)),
    };
    let run = || -> Result<Value> {
        let mut v = serde_json::to_value(&*found).expect("serializes");
        let k0 = rspace::verify_k0_equals_bracket(space, &found, tol)?;
        v["k0_equals_bracket"] = serde_json::to_value(k0).expect("serializes");
        v["commutant_is_center"] = match rspace::verify_commutant_is_center(space, &found, tol) {
            Ok(c) => serde_json::to_value(c).expect("serializes"),
            Err(Error::Precondition(m)) => json!({ "not_applicable": m }),
            Err(e) => return Err(e),
        };
        v["center_meets_kminus_dim"] = json!(rspace::verify_center_meets_kminus(&found, tol)?);
        v["orbit_jet"] = serde_json::to_value(rspace::verify_orbit_jet(space, &found, tol)?)
            .expect("serializes");
        Ok(v)
    };
    Outcome::from_result(run())
}

/// Runs every scenario; jet specs that fail to resolve are reported as load errors.
pub fn run_file(file: &ScenarioFile, opts: &RunOptions) -> std::result::Result<RunReport, LoadError> {
    let base = match &opts.tolerances {
        Some(o) => o.apply(Tolerances::default()).map_err(|e| LoadError {
            location: "--tolerances".into(),
            message: e.to_string(),
            structural: false,
        })?,
        None => Tolerances::default(),
    };
    let mut scenarios = Vec::new();
    for (si, sc) in file.scenarios.iter().enumerate() {
        let start = Instant::now();
        let at = |what: String| {
            move |e: Error| LoadError {
                location: format!("scenarios[{si}]{what}"),
                structural: matches!(e, Error::Structural { .. } | Error::Construction { .. }),
                message: e.to_string(),
            }
        };
        let tol = match &sc.tolerances {
            Some(o) => o.apply(base).map_err(at(".tolerances".into()))?,
            None => base,
        };
        let seed = opts.seed.unwrap_or(sc.rng_seed);
        let space = Arc::new(build_model(&sc.model, &tol).map_err(at(".model".into()))?);
        let jets = sc
            .jets
            .iter()
            .enumerate()
            .map(|(ji, spec)| build_jet(&space, spec, &tol).map_err(at(format!(".jets[{ji}]"))))
            .collect::<std::result::Result<Vec<_>, _>>()?;

        let mut pipelines = sc.pipelines.clone();
        pipelines.sort();
        pipelines.dedup();
        let mut model_results = BTreeMap::new();
        if pipelines.contains(&Pipeline::Rspace) {
            model_results.insert("rspace".to_string(), rspace_outcome(&space, seed, &tol));
        }
        let jet_reports = jets
            .iter()
            .zip(&sc.jets)
            .enumerate()
            .map(|(index, (jet, spec))| JetReport {
                index,
                generator: spec.label().into(),
                dim_w: jet.dim_w(),
                results: pipelines
                    .iter()
                    .filter(|p| **p != Pipeline::Rspace)
                    .map(|p| (p.name().to_string(), run_pipeline(*p, jet, &tol)))
                    .collect(),
            })
            .collect();
        scenarios.push(ScenarioReport {
            id: sc.id.clone(),
            model: ModelSummary::of(&space, &tol),
            rng_seed: seed,
            tolerances: tol,
            model_results,
            jets: jet_reports,
            wall_time_ms: opts.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
        });
    }
    Ok(RunReport {
        schema: SCHEMA_VERSION,
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        tolerances: base,
        scenarios,
    })
}

/// Catalog entries listed by `symjet catalog`.
pub fn catalog_examples() -> Vec<CatalogSpec> {
    use CatalogSpec::*;
    vec![
        Sphere(2),
        Sphere(3),
        Sphere(4),
        Euclidean(2),
        Euclidean(3),
        Cp(1),
        Cp(2),
        GrassmannianSu(2, 2),
        Hyperbolic(2),
        Hyperbolic(3),
        Dual(Box::new(Cp(2))),
        Product(vec![Sphere(2), Sphere(2)]),
        Product(vec![Sphere(2), Cp(2)]),
        Product(vec![Sphere(2), Sphere(2), Sphere(2)]),
    ]
}

pub fn catalog_table(tol: &Tolerances) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "families:").unwrap();
    for (name, range) in crate::lie::FAMILIES {
        writeln!(out, "  {name:<16} {range}").unwrap();
    }
    writeln!(out).unwrap();
    writeln!(
        out,
        "{:<40} {:>6} {:>6} {:>6} {:>5}  type",
        "model", "dim g", "dim k", "dim p", "rank"
    )
    .unwrap();
    for spec in catalog_examples() {
        let s = spec.build(tol)?;
        let m = ModelSummary::of(&s, tol);
        writeln!(
            out,
            "{:<40} {:>6} {:>6} {:>6} {:>5}  {:?}",
            spec.to_string(),
            m.dim_g,
            m.dim_k,
            m.dim_p,
            m.rank,
            s.type_tag
        )
        .unwrap();
    }
    Ok(out)
}

fn fmt_num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.3e}"),
        None => v.to_string(),
    }
}

fn sub_dim(v: &Value) -> usize {
    v["onb"].as_array().map_or(0, Vec::len)
}

fn holds(v: &Value) -> &'static str {
    match v.as_bool() {
        Some(true) => "holds",
        Some(false) => "FAILS",
        None => "n/a",
    }
}

/// The first link of semiparallel → model → feasibility that fails, if any.
pub fn failing_link(jet: &Value) -> Option<&'static str> {
    let mc = &jet["results"]["model_check"];
    if mc["status"] == "ok" {
        let r = &mc["result"];
        if r["curvature_invariant"] == false {
            return Some("curvature_invariance");
        }
        if r["semiparallel"] == false {
            return Some("semiparallel");
        }
        if r["overall"] == "fails" || r["overall"] == "indeterminate" {
            return Some("gamma_feasibility");
        }
    }
    let h = &jet["results"]["holonomy"];
    if h["status"] == "ok" && h["result"]["verdict"] != "homogeneous" {
        return Some("gamma_feasibility");
    }
    None
}

/// Narrative rendering of a report produced by [`run_file`].
pub fn explain(report: &Value) -> String {
    let mut out = String::new();
    let scenarios = report["scenarios"].as_array().cloned().unwrap_or_default();
    let mut any = false;
    for sc in &scenarios {
        let jets = sc["jets"].as_array().cloned().unwrap_or_default();
        let name = sc["model"]["name"].as_str().unwrap_or("?");
        writeln!(out, "scenario {} on {}", sc["id"].as_str().unwrap_or("?"), name).unwrap();
        if let Some(r) = sc["model_results"].get("rspace") {
            explain_rspace(&mut out, r);
        }
        for j in &jets {
            any = true;
            writeln!(
                out,
                "  jet {} ({}, dim W = {})",
                j["index"], j["generator"].as_str().unwrap_or("?"), j["dim_w"]
            )
            .unwrap();
            explain_jet(&mut out, j);
        }
    }
    if !any {
        writeln!(out, "no jets evaluated").unwrap();
    }
    out
}

fn explain_rspace(out: &mut String, r: &Value) {
    if r["status"] != "ok" {
        writeln!(out, "  rspace: {}", r["status"].as_str().unwrap_or("?")).unwrap();
        return;
    }
    let d = &r["result"];
    writeln!(
        out,
        "  rspace: X found by {}, dim k0 = {}, dim k- = {}, ad(X)^3 + ad(X) = {}, k0 = [k-, k-] {}, dim(c ∩ k-) = {}",
        d["method"].as_str().unwrap_or("?"),
        sub_dim(&d["k0_basis"]),
        sub_dim(&d["kminus_basis"]),
        fmt_num(&d["residuals"]["ad_cubic"]),
        holds(&d["k0_equals_bracket"]["holds"]),
        d["center_meets_kminus_dim"]
    )
    .unwrap();
}

fn explain_jet(out: &mut String, j: &Value) {
    let results = &j["results"];
    let mc = &results["model_check"];
    if mc["status"] == "ok" {
        let r = &mc["result"];
        writeln!(out, "    curvature invariance: {} ({})", holds(&r["curvature_invariant"]), fmt_num(&r["curvature_residual"])).unwrap();
        writeln!(out, "    semiparallel: {} ({})", holds(&r["semiparallel"]), fmt_num(&r["semiparallel_residual"])).unwrap();
        if let Some(note) = r["semiparallel_note"].as_str() {
            writeln!(out, "      note: {note}").unwrap();
        }
        for (i, g) in r["gamma_feasible_per_basis"].as_array().into_iter().flatten().enumerate() {
            writeln!(
                out,
                "    gamma_feasibility[w{i}]: {} (residual {}, target {})",
                g["verdict"].as_str().unwrap_or("?"),
                fmt_num(&g["residual"]),
                fmt_num(&g["target_norm"])
            )
            .unwrap();
        }
        writeln!(out, "    infinitesimal model: {}", r["overall"].as_str().unwrap_or("?")).unwrap();
    } else if !mc.is_null() {
        writeln!(out, "    model_check: {}", mc["status"].as_str().unwrap_or("?")).unwrap();
    }
    let h = &results["holonomy"];
    if h["status"] == "ok" {
        let r = &h["result"];
        let norms: Vec<String> = r["defect_norms"]
            .as_array()
            .into_iter()
            .flatten()
            .map(fmt_num)
            .collect();
        writeln!(out, "    defect norms: [{}]", norms.join(", ")).unwrap();
        if let Some(c) = r.get("chain").filter(|c| !c.is_null()) {
            writeln!(
                out,
                "    chain: centralizer dim {}, defect zero {}, implies homogeneous {}",
                c["centralizer_minus_dim"], c["defect_zero"], c["implies_homogeneous"]
            )
            .unwrap();
        }
        writeln!(out, "    verdict: {}", r["verdict"].as_str().unwrap_or("?")).unwrap();
    } else if !h.is_null() {
        writeln!(out, "    holonomy: {}", h["status"].as_str().unwrap_or("?")).unwrap();
    }
    for p in ["nomizu", "flat_case"] {
        let o = &results[p];
        match o["status"].as_str() {
            Some("ok") if p == "nomizu" => {
                let d = &o["result"]["dims"];
                writeln!(out, "    nomizu: dim m = {}, dim h = {}, dim g = {}", d["m"], d["h"], d["g"]).unwrap();
            }
            Some("ok") => {
                let r = &o["result"];
                writeln!(
                    out,
                    "    flat_case: first normal isotropic {}, centralizer dim {}, osculating isotropic {}",
                    r["first_normal_isotropic"], r["centralizer_minus_dim"], r["osc_isotropic"]
                )
                .unwrap();
            }
            Some(s) => writeln!(out, "    {p}: {s}").unwrap(),
            None => {}
        }
    }
    match failing_link(j) {
        Some(link) => writeln!(out, "    failing link: {link}").unwrap(),
        None if !results["holonomy"].is_null() || !results["model_check"].is_null() => {
            writeln!(out, "    failing link: none").unwrap()
        }
        None => {}
    }
}

#[cfg(test)]
mod tests;
