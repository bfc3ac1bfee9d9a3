//! Payload schemas and the work behind each subcommand.

use std::fmt;
use std::fmt::Write as _;
use std::io;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use rugose_core::analytic::{residual_check, solve_limit, LimitSolution, ResidualReport};
use rugose_core::fem::{l2_norm, solve_rugose, RobinProblem, SolverStats, TOP_TARGET};
use rugose_core::geometry::{build_mesh, MeshParams, SlabDomain};
use rugose_core::homogenize::{
    homogenize_energy, homogenize_polynomial, ldg_effective, oseen_frank_effective, polynomial_energy,
    slab_effective, CoefficientMap, Combine, DoublyPeriodicSampler, EffectiveAnchoringOF, LdGEffective3D,
    SlabBoundarySampler, SlabEffective, DEFAULT_TIE_TOL,
};
use rugose_core::profile::PeriodicProfile;
use rugose_core::quadrature::QuadratureRule;
use rugose_core::study::{run_sweep, SweepConfig};
use rugose_core::tensor::{QTensor2, QTensor3};

use crate::artifacts::{provenance_header, toolkit, Artifact, Envelope};

pub struct RunOptions {
    pub seed: u64,
    pub timings: bool,
}

pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    pub stdout: Option<String>,
    /// Set when the result is degenerate; fatal under `--strict`.
    pub degenerate: Option<String>,
}

#[derive(Debug)]
pub enum Failure {
    Validation { kind: &'static str, message: String },
    Core(rugose_core::Error),
    Io(io::Error),
    Degenerate(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Validation { .. } => 2,
            Failure::Core(e) if e.is_numerical() => 3,
            Failure::Core(_) => 2,
            Failure::Degenerate(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Failure::Validation { kind, .. } => kind,
            Failure::Core(e) => e.kind(),
            Failure::Io(_) => "io",
            Failure::Degenerate(_) => "degenerate_result",
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation { message, .. } => write!(f, "{message}"),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Io(e) => write!(f, "i/o error: {e}"),
            Failure::Degenerate(reason) => write!(f, "degenerate result: {reason}"),
        }
    }
}

impl From<rugose_core::Error> for Failure {
    fn from(e: rugose_core::Error) -> Self {
        Failure::Core(e)
    }
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure::Validation {
        kind: "invalid_payload",
        message: message.into(),
    }
}

fn serialization(e: serde_json::Error) -> Failure {
    Failure::Io(io::Error::new(io::ErrorKind::Other, e))
}

/// Deserialises the payload and returns it with its fully resolved form.
fn parse<T: DeserializeOwned + Serialize>(payload: Value) -> Result<(T, Value), Failure> {
    let typed: T = serde_json::from_value(payload).map_err(|e| invalid(format!("invalid payload: {e}")))?;
    let resolved = serde_json::to_value(&typed).map_err(serialization)?;
    Ok((typed, resolved))
}

fn envelope<T: Serialize>(name: &str, command: &str, opts: &RunOptions, config: &Value, result: T) -> Result<Artifact, Failure> {
    Artifact::json(
        name,
        &Envelope {
            toolkit: toolkit(),
            command,
            seed: opts.seed,
            config,
            result,
        },
    )
    .map_err(serialization)
}

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> u8 {
    2
}
fn default_tie_tol() -> f64 {
    DEFAULT_TIE_TOL
}
fn default_cg_tol() -> f64 {
    1e-10
}
fn default_samples() -> usize {
    11
}
fn default_top() -> QTensor2 {
    TOP_TARGET
}
fn default_combine() -> Combine {
    Combine::Sum
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfacePayload {
    pub profile_u: PeriodicProfile,
    #[serde(default = "PeriodicProfile::flat")]
    pub profile_v: PeriodicProfile,
    #[serde(default = "default_combine")]
    pub combine: Combine,
}

/// Resolves `profile`/`surface` into the geometry of the requested dimension.
fn resolve_geometry(
    dimension: u8,
    profile: &Option<PeriodicProfile>,
    surface: &Option<SurfacePayload>,
) -> Result<Geometry, Failure> {
    match (dimension, profile, surface) {
        (2, Some(p), None) => Ok(Geometry::Slab(p.clone())),
        (2, _, _) => Err(invalid("dimension 2 needs `profile` and no `surface`")),
        (3, None, Some(s)) => Ok(Geometry::Surface(DoublyPeriodicSampler::new(
            s.profile_u.clone(),
            s.profile_v.clone(),
            s.combine,
        )?)),
        (3, Some(p), None) => Ok(Geometry::Surface(DoublyPeriodicSampler::new(
            p.clone(),
            PeriodicProfile::flat(),
            Combine::Sum,
        )?)),
        (3, _, _) => Err(invalid("dimension 3 needs exactly one of `profile` or `surface`")),
        (d, _, _) => Err(invalid(format!("dimension must be 2 or 3, got {d}"))),
    }
}

enum Geometry {
    Slab(PeriodicProfile),
    Surface(DoublyPeriodicSampler),
}

// ---------------------------------------------------------------- effective

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EffectivePayload {
    #[serde(default = "two")]
    pub dimension: u8,
    #[serde(default)]
    pub profile: Option<PeriodicProfile>,
    #[serde(default)]
    pub surface: Option<SurfacePayload>,
    #[serde(default = "one")]
    pub w0: f64,
    #[serde(default = "one")]
    pub s0: f64,
    #[serde(default)]
    pub rule: QuadratureRule,
    #[serde(default = "default_tie_tol")]
    pub tie_tol: f64,
}

#[derive(Serialize)]
struct SlabReport {
    #[serde(flatten)]
    slab: SlabEffective,
    ldg_remainder: f64,
}

#[derive(Serialize)]
struct SurfaceReport {
    oseen_frank: EffectiveAnchoringOF,
    landau_de_gennes: LdGEffective3D,
    ldg_remainder: f64,
}

pub fn effective(payload: Value, opts: &RunOptions) -> Result<Outcome, Failure> {
    let (p, config): (EffectivePayload, Value) = parse(payload)?;
    positive("w0", p.w0)?;
    p.rule.check()?;
    let artifact = match resolve_geometry(p.dimension, &p.profile, &p.surface)? {
        Geometry::Slab(profile) => {
            let slab = slab_effective(&profile, p.w0, &p.rule)?;
            let ldg_remainder = slab.ldg_remainder();
            envelope("effective.json", "effective", opts, &config, SlabReport { slab, ldg_remainder })?
        }
        Geometry::Surface(sampler) => {
            let oseen_frank = oseen_frank_effective(&sampler, p.w0, &p.rule, p.tie_tol)?;
            let landau_de_gennes = ldg_effective(&sampler, p.w0, p.s0, &p.rule)?;
            let ldg_remainder = landau_de_gennes.remainder();
            envelope(
                "effective.json",
                "effective",
                opts,
                &config,
                SurfaceReport {
                    oseen_frank,
                    landau_de_gennes,
                    ldg_remainder,
                },
            )?
        }
    };
    Ok(Outcome {
        artifacts: vec![artifact],
        stdout: None,
        degenerate: None,
    })
}

// --------------------------------------------------------------- homogenize

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnchoringModel {
    /// `(w0/2)|Q − s0(ν⊗ν − I/d)|²` (with `s0 = 1` in two dimensions).
    LandauDeGennes,
    /// `(w0/2)(n·ν)²`.
    RapiniPapoular,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomogenizePayload {
    #[serde(default = "two")]
    pub dimension: u8,
    #[serde(default)]
    pub profile: Option<PeriodicProfile>,
    #[serde(default)]
    pub surface: Option<SurfacePayload>,
    pub model: AnchoringModel,
    #[serde(default = "one")]
    pub w0: f64,
    #[serde(default = "one")]
    pub s0: f64,
    /// Explicit states: Q components or directors.
    #[serde(default)]
    pub states: Vec<Vec<f64>>,
    /// Additional states drawn from the run seed.
    #[serde(default)]
    pub random_states: usize,
    #[serde(default)]
    pub rule: QuadratureRule,
}

#[derive(Serialize)]
struct Evaluation {
    state: Vec<f64>,
    homogenized: f64,
    closed_form: f64,
    difference: f64,
}

#[derive(Serialize)]
struct HomogenizeReport {
    state_dim: usize,
    evaluations: Vec<Evaluation>,
    max_difference: f64,
}

fn state_dim(dimension: u8, model: AnchoringModel) -> usize {
    match (dimension, model) {
        (2, AnchoringModel::LandauDeGennes) => 2,
        (3, AnchoringModel::LandauDeGennes) => 5,
        (d, AnchoringModel::RapiniPapoular) => d as usize,
        _ => unreachable!("dimension validated earlier"),
    }
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize, model: AnchoringModel) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        match model {
            AnchoringModel::LandauDeGennes => return v,
            AnchoringModel::RapiniPapoular => {
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 0.1 {
                    return v.iter().map(|x| x / n).collect();
                }
            }
        }
    }
}

fn normalized(v: &[f64]) -> Result<Vec<f64>, Failure> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0 && n.is_finite()) {
        return Err(invalid("directors must be nonzero"));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

pub fn homogenize(payload: Value, opts: &RunOptions) -> Result<Outcome, Failure> {
    let (p, config): (HomogenizePayload, Value) = parse(payload)?;
    positive("w0", p.w0)?;
    if !p.s0.is_finite() {
        return Err(invalid("s0 must be finite"));
    }
    p.rule.check()?;
    let geometry = resolve_geometry(p.dimension, &p.profile, &p.surface)?;
    let dim = state_dim(p.dimension, p.model);
    let mut states = p.states.clone();
    if let Some(bad) = states.iter().find(|s| s.len() != dim) {
        return Err(invalid(format!("states must have {dim} components, got {}", bad.len())));
    }
    if states.is_empty() && p.random_states == 0 {
        return Err(invalid("give `states` or a positive `random_states`"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    states.extend((0..p.random_states).map(|_| random_state(&mut rng, dim, p.model)));
    if matches!(p.model, AnchoringModel::RapiniPapoular) {
        states = states.iter().map(|s| normalized(s)).collect::<Result<_, _>>()?;
    }

    let (w0, s0, rule) = (p.w0, p.s0, &p.rule);
    let mut evaluations = Vec::with_capacity(states.len());
    match (&geometry, p.model) {
        (Geometry::Slab(profile), AnchoringModel::LandauDeGennes) => {
            let eff = slab_effective(profile, w0, rule)?;
            let sampler = SlabBoundarySampler { profile: profile.clone() };
            for s in &states {
                let q = QTensor2::new(s[0], s[1]);
                let h = homogenize_energy(
                    &sampler,
                    |nu: &[f64; 2], q: &QTensor2| 0.5 * w0 * (*q - QTensor2::from_director(*nu)).norm_sq(),
                    &q,
                    rule,
                )?;
                evaluations.push((s.clone(), h, eff.homogenised_energy(q)));
            }
        }
        (Geometry::Slab(profile), AnchoringModel::RapiniPapoular) => {
            let sampler = SlabBoundarySampler { profile: profile.clone() };
            let map = CoefficientMap::<2> {
                order: 2,
                state_dim: 2,
                map: Box::new(move |n: &[f64; 2]| {
                    vec![0.5 * w0 * n[0] * n[0], 0.5 * w0 * n[0] * n[1], 0.5 * w0 * n[1] * n[0], 0.5 * w0 * n[1] * n[1]]
                }),
            };
            let forms = homogenize_polynomial(&sampler, &[map], rule)?;
            for s in &states {
                let n = [s[0], s[1]];
                let h = homogenize_energy(
                    &sampler,
                    |nu: &[f64; 2], n: &[f64; 2]| 0.5 * w0 * (nu[0] * n[0] + nu[1] * n[1]).powi(2),
                    &n,
                    rule,
                )?;
                evaluations.push((s.clone(), h, polynomial_energy(&forms, s)));
            }
        }
        (Geometry::Surface(sampler), AnchoringModel::LandauDeGennes) => {
            let eff = ldg_effective(sampler, w0, s0, rule)?;
            for s in &states {
                let q = QTensor3::new([s[0], s[1], s[2], s[3], s[4]]);
                let h = homogenize_energy(
                    sampler,
                    |nu: &[f64; 3], q: &QTensor3| {
                        let d = (*q - QTensor3::uniaxial(s0, *nu)).norm();
                        0.5 * w0 * d * d
                    },
                    &q,
                    rule,
                )?;
                evaluations.push((s.clone(), h, eff.energy(q)));
            }
        }
        (Geometry::Surface(sampler), AnchoringModel::RapiniPapoular) => {
            let eff = oseen_frank_effective(sampler, w0, rule, DEFAULT_TIE_TOL)?;
            for s in &states {
                let n = [s[0], s[1], s[2]];
                let h = homogenize_energy(
                    sampler,
                    |nu: &[f64; 3], n: &[f64; 3]| 0.5 * w0 * (nu[0] * n[0] + nu[1] * n[1] + nu[2] * n[2]).powi(2),
                    &n,
                    rule,
                )?;
                evaluations.push((s.clone(), h, eff.energy(n)));
            }
        }
    }
    let evaluations: Vec<Evaluation> = evaluations
        .into_iter()
        .map(|(state, homogenized, closed_form)| Evaluation {
            state,
            homogenized,
            closed_form,
            difference: (homogenized - closed_form).abs(),
        })
        .collect();
    let max_difference = evaluations.iter().fold(0.0, |m, e| f64::max(m, e.difference));
    let artifact = envelope(
        "homogenize.json",
        "homogenize",
        opts,
        &config,
        HomogenizeReport {
            state_dim: dim,
            evaluations,
            max_difference,
        },
    )?;
    Ok(Outcome {
        artifacts: vec![artifact],
        stdout: None,
        degenerate: None,
    })
}

// --------------------------------------------------------------------- mesh

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshPayload {
    pub profile: PeriodicProfile,
    #[serde(rename = "R")]
    pub height: f64,
    pub eps: f64,
    pub mesh: MeshParams,
}

#[derive(Serialize)]
struct MeshSummary {
    nodes: usize,
    triangles: usize,
    nx: usize,
    ny: usize,
    h_max: f64,
    total_area: f64,
    domain_area: f64,
    bottom_length: f64,
    bilipschitz_constant: f64,
}

pub fn mesh(payload: Value, opts: &RunOptions) -> Result<Outcome, Failure> {
    let (p, config): (MeshPayload, Value) = parse(payload)?;
    let domain = SlabDomain::new(p.height, p.eps, p.profile.clone())?;
    let mesh = build_mesh(&domain, p.mesh)?;
    let summary = MeshSummary {
        nodes: mesh.node_count(),
        triangles: mesh.triangles.len(),
        nx: mesh.nx,
        ny: mesh.ny,
        h_max: mesh.h_max,
        total_area: mesh.total_area(),
        domain_area: domain.area(),
        bottom_length: mesh.bottom_edges.iter().map(|e| e.weight).sum(),
        bilipschitz_constant: domain.bilipschitz_constant(),
    };
    let body = mesh.to_text();
    let (first, rest) = body.split_once('\n').unwrap_or((&body, ""));
    let text = format!("{first}\n{}{rest}", provenance_header("mesh", opts.seed, &config));
    Ok(Outcome {
        artifacts: vec![
            Artifact::text("mesh.txt", text),
            envelope("mesh.json", "mesh", opts, &config, summary)?,
        ],
        stdout: None,
        degenerate: None,
    })
}

// -------------------------------------------------------------------- solve

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolvePayload {
    pub profile: PeriodicProfile,
    #[serde(rename = "R")]
    pub height: f64,
    pub eps: f64,
    pub c: f64,
    pub w0: f64,
    pub mesh: MeshParams,
    #[serde(default = "default_cg_tol")]
    pub cg_tol: f64,
}

#[derive(Serialize)]
struct SolveReport {
    stats: SolverStats,
    l2_norm: f64,
    /// Distance to the closed-form homogenised solution.
    error_closed_form: f64,
    effective: SlabEffective,
    limit: LimitSolution,
}

pub fn solve(payload: Value, opts: &RunOptions) -> Result<Outcome, Failure> {
    let (p, config): (SolvePayload, Value) = parse(payload)?;
    positive("c", p.c)?;
    positive("w0", p.w0)?;
    if !(p.cg_tol > 0.0 && p.cg_tol < 1.0) {
        return Err(invalid(format!("cg_tol must lie in (0, 1), got {}", p.cg_tol)));
    }
    let domain = SlabDomain::new(p.height, p.eps, p.profile.clone())?;
    let effective = slab_effective(&p.profile, p.w0, &QuadratureRule::default())?;
    let limit = solve_limit(p.c, effective.w_ef, p.w0, p.height, effective.q_ef, TOP_TARGET)?;
    let sol = solve_rugose(&domain, &RobinProblem::rugose(p.c, p.w0), p.mesh, p.cg_tol)?;

    let (e1, e2): (Vec<f64>, Vec<f64>) = sol
        .mesh
        .nodes
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let q = limit.eval(pt[1]);
            (sol.nodal_q1[i] - q.q1, sol.nodal_q2[i] - q.q2)
        })
        .unzip();
    let mut stats = sol.stats();
    if !opts.timings {
        stats.assembly_seconds = 0.0;
        stats.solve_seconds = 0.0;
    }
    let report = SolveReport {
        stats,
        l2_norm: l2_norm(&sol.mesh, &sol.nodal_q1, &sol.nodal_q2),
        error_closed_form: l2_norm(&sol.mesh, &e1, &e2),
        effective,
        limit,
    };
    let csv = provenance_header("solve", opts.seed, &config) + &sol.to_csv();
    Ok(Outcome {
        artifacts: vec![
            Artifact::text("solution.csv", csv),
            envelope("solve.json", "solve", opts, &config, report)?,
        ],
        stdout: None,
        degenerate: None,
    })
}

// -------------------------------------------------------------------- limit

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitPayload {
    pub c: f64,
    pub w0: f64,
    #[serde(rename = "R")]
    pub height: f64,
    /// Supplies `w_ef` and `Q_ef` when they are not given directly.
    #[serde(default)]
    pub profile: Option<PeriodicProfile>,
    #[serde(default)]
    pub w_ef: Option<f64>,
    #[serde(default, rename = "Q_ef")]
    pub q_ef: Option<QTensor2>,
    #[serde(default = "default_top", rename = "Q_R")]
    pub q_r: QTensor2,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Serialize)]
struct Sample {
    y: f64,
    q1: f64,
    q2: f64,
}

#[derive(Serialize)]
struct LimitReport {
    solution: LimitSolution,
    samples: Vec<Sample>,
    residuals: ResidualReport,
}

pub fn limit(payload: Value, opts: &RunOptions) -> Result<Outcome, Failure> {
    let (p, config): (LimitPayload, Value) = parse(payload)?;
    positive("c", p.c)?;
    positive("R", p.height)?;
    if !p.w0.is_finite() {
        return Err(invalid("w0 must be finite"));
    }
    if p.samples < 3 {
        return Err(invalid(format!("samples must be at least 3, got {}", p.samples)));
    }
    let (w_ef, q_ef) = match (&p.profile, p.w_ef, p.q_ef) {
        (None, Some(w), Some(q)) => (w, q),
        (Some(profile), None, None) => {
            let eff = slab_effective(profile, p.w0, &QuadratureRule::default())?;
            (eff.w_ef, eff.q_ef)
        }
        _ => return Err(invalid("give either `profile` or both `w_ef` and `Q_ef`")),
    };
    let solution = solve_limit(p.c, w_ef, p.w0, p.height, q_ef, p.q_r)?;
    let residuals = residual_check(&solution, p.samples)?;
    let samples = (0..p.samples)
        .map(|i| {
            let y = p.height * i as f64 / (p.samples - 1) as f64;
            let q = solution.eval(y);
            Sample { y, q1: q.q1, q2: q.q2 }
        })
        .collect();
    let artifact = envelope(
        "limit.json",
        "limit",
        opts,
        &config,
        LimitReport {
            solution,
            samples,
            residuals,
        },
    )?;
    let stdout = Some(artifact.contents.trim_end().to_string());
    Ok(Outcome {
        artifacts: vec![artifact],
        stdout,
        degenerate: None,
    })
}

// -------------------------------------------------------------------- sweep

pub fn sweep(payload: Value, opts: &RunOptions) -> Result<Outcome, Failure> {
    let (cfg, config): (SweepConfig, Value) = parse(payload)?;
    cfg.validate()?;
    let mut report = run_sweep(&cfg)?;
    if !opts.timings {
        for row in &mut report.rows {
            row.wall_time = 0.0;
        }
    }
    let mut csv = provenance_header("sweep", opts.seed, &config);
    csv.push_str("eps,h_max,nx,ny,cg_iters,error,error_closed_form,wall_time\n");
    for r in &report.rows {
        let _ = writeln!(
            csv,
            "{:.17e},{:.17e},{},{},{},{:.17e},{:.17e},{:.6}",
            r.eps, r.h_max, r.nx, r.ny, r.cg_iters, r.error, r.error_closed_form, r.wall_time
        );
    }
    let degenerate = report.degenerate.then(|| {
        format!(
            "all errors are at most 10 * cg_tol = {:e}; the rate was not fitted",
            10.0 * cfg.cg_tol
        )
    });
    let summary = envelope("sweep.json", "sweep", opts, &config, &report)?;
    Ok(Outcome {
        artifacts: vec![Artifact::text("sweep.csv", csv), summary],
        stdout: None,
        degenerate,
    })
}
