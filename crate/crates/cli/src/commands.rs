use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use glms_core::io::{
    generate_instance, lift_shift, read_matrix, read_vector, sha256_file, to_json_string, GenKind,
    GenSpec, RunManifest,
};
use glms_core::losses::{certify_properties, GridSpec, LossSpec, ThresholdSpec};
use glms_core::rng::StreamSeed;
use glms_core::solve::{solve_glm, solve_huber, solve_lp, solve_lp_dual, RefinementConfig};
use glms_core::sparsify::{
    audit_ball, audit_outside, audit_sparsifier, build_scheme, huber_sparsify, sparsify,
    tukey_sparsify, AuditConfig, AuditReport, SparsifiedModel, SparsifyConfig, TukeyConfig,
};
use glms_core::{Error, LossFamily, ProblemInstance, Result};

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct InstanceArgs {
    /// Matrix file (`.mtx` MatrixMarket or CSV).
    #[arg(long)]
    pub matrix: PathBuf,
    /// Shift vector `b`; zero when absent.
    #[arg(long)]
    pub rhs: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct LossArgs {
    /// `power` (alias `lp`), `gamma`, `huber`, `tukey-proxy`, `tukey`, or a
    /// JSON loss file.
    #[arg(long, default_value = "power")]
    pub loss: String,
    #[arg(long)]
    pub p: Option<f64>,
    /// Uniform threshold for `gamma` and `huber`.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// JSON output path; stdout when absent.
    #[arg(long, visible_alias = "report")]
    pub out: Option<PathBuf>,
    /// Manifest path; defaults to the output path with `.manifest.json` appended.
    #[arg(long)]
    #[serde(skip)]
    pub manifest: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SparsifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub loss: LossArgs,
    #[arg(long)]
    pub eps: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub s_max: f64,
    #[arg(long)]
    pub seed: u64,
    /// Sample budget constant.
    #[arg(long)]
    pub c_m: Option<f64>,
    /// Huber model valid at every scale (ignores the scale range).
    #[arg(long)]
    pub global: bool,
    /// Tukey: bound on every `‖(a_i, b_i)‖₂`.
    #[arg(long)]
    pub row_norm_bound: Option<f64>,
    /// Tukey: radius of the ball the model must cover.
    #[arg(long)]
    pub x_norm_bound: Option<f64>,
    /// Skip the built-in audit and budget doubling.
    #[arg(long)]
    pub no_audit: bool,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AuditArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub loss: LossArgs,
    /// Model written by `glms sparsify`.
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 64)]
    pub gaussian_dirs: usize,
    #[arg(long, default_value_t = 256)]
    pub row_dirs: usize,
    #[arg(long, default_value_t = 24)]
    pub scales: usize,
    /// Points outside the validity range (global models; default 10).
    #[arg(long)]
    pub outside: Option<usize>,
    /// Points in the validity ball (ball models; default 400).
    #[arg(long)]
    pub ball: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub loss: LossArgs,
    /// Relative accuracy.
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub max_steps: Option<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DualArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Right-hand side of `Aᵀy = c`.
    #[arg(long)]
    pub c: PathBuf,
    #[arg(long)]
    pub q: f64,
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct WeightsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub instance: InstanceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub loss: LossArgs,
    #[arg(long, default_value_t = 1.0)]
    pub s_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub s_max: f64,
    /// Leverage sketch accuracy.
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long)]
    pub seed: u64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CertifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub loss: LossArgs,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenArgs {
    /// `gaussian`, `scale-separated`, `near-duplicate` or `outlier-regression`.
    #[arg(long)]
    pub kind: GenKind,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Directory for `matrix.mtx`, `shift.mtx` and `truth.json`.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

/// Collects the manifest while a command runs.
struct Run {
    manifest: RunManifest,
}

impl Run {
    fn new(command: &str, args: &impl Serialize, seed: Option<u64>) -> Result<Self> {
        let mut manifest = RunManifest::new(command);
        if let serde_json::Value::Object(map) = serde_json::to_value(args)? {
            manifest.params = map.into_iter().collect();
        }
        manifest.seed = seed;
        Ok(Run { manifest })
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.manifest.add_input(path)
    }

    fn stage<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        self.manifest.time(name, f)
    }

    /// Writes `json` and, when it goes to a file, the manifest.
    fn finish(self, output: &OutputArgs, json: &str) -> Result<()> {
        match &output.out {
            None => print!("{json}"),
            Some(out) => {
                std::fs::write(out, json)?;
                let path = output.manifest.clone().unwrap_or_else(|| {
                    let mut p = out.clone().into_os_string();
                    p.push(".manifest.json");
                    PathBuf::from(p)
                });
                self.manifest.save(path)?;
            }
        }
        Ok(())
    }
}

fn absolute(path: &mut PathBuf) -> Result<()> {
    *path = std::path::absolute(&*path)?;
    Ok(())
}

impl InstanceArgs {
    fn resolve(&mut self) -> Result<()> {
        absolute(&mut self.matrix)?;
        if let Some(b) = &mut self.rhs {
            absolute(b)?;
        }
        Ok(())
    }

    fn record(&self, run: &mut Run) -> Result<()> {
        run.input(&self.matrix)?;
        if let Some(b) = &self.rhs {
            run.input(b)?;
        }
        Ok(())
    }

    fn load(&self, loss: LossFamily) -> Result<ProblemInstance> {
        let a = read_matrix(&self.matrix)?;
        let b = self.rhs.as_ref().map(read_vector).transpose()?;
        ProblemInstance::new(a, b, loss)
    }
}

impl LossArgs {
    fn file(&self) -> Option<PathBuf> {
        self.loss
            .ends_with(".json")
            .then(|| PathBuf::from(&self.loss))
    }

    fn resolve(&mut self) -> Result<()> {
        if let Some(mut p) = self.file() {
            absolute(&mut p)?;
            self.loss = p.display().to_string();
        }
        Ok(())
    }

    fn record(&self, run: &mut Run) -> Result<()> {
        match self.file() {
            Some(p) => run.input(&p),
            None => Ok(()),
        }
    }

    fn family(&self) -> Result<LossFamily> {
        if let Some(p) = self.file() {
            return LossFamily::from_json(&std::fs::read_to_string(p)?);
        }
        let spec = LossSpec {
            kind: self.loss.clone(),
            p: self.p,
            thresholds: self.threshold.map(ThresholdSpec::Uniform),
            eta: self.eta,
            constants: None,
        };
        LossFamily::from_spec(&spec)
    }
}

pub fn run_sparsify(mut args: SparsifyArgs) -> Result<()> {
    args.instance.resolve()?;
    args.loss.resolve()?;
    let mut run = Run::new("sparsify", &args, Some(args.seed))?;
    args.instance.record(&mut run)?;
    args.loss.record(&mut run)?;
    let inst = run.stage("load", || args.instance.load(args.loss.family()?))?;
    let mut cfg = SparsifyConfig::new(args.eps, args.s_min, args.s_max, args.seed);
    if let Some(c) = args.c_m {
        cfg.c_m = c;
    }
    cfg.audit = !args.no_audit;
    let model = run.stage("sparsify", || {
        if args.global {
            huber_sparsify(&inst, &cfg)
        } else if args.row_norm_bound.is_some() || args.x_norm_bound.is_some() {
            let tukey = TukeyConfig {
                row_norm_bound: args.row_norm_bound,
                x_norm_bound: args.x_norm_bound,
                eta: args.loss.eta,
            };
            tukey_sparsify(&inst, &cfg, &tukey)
        } else {
            sparsify(&inst, &cfg)
        }
    })?;
    let json = model.to_json()?;
    run.finish(&args.output, &json)
}

#[derive(Debug, Serialize)]
struct AuditSummary {
    eps: f64,
    in_range: Option<AuditReport>,
    outside: Option<AuditReport>,
    ball: Option<AuditReport>,
    pass: bool,
}

pub fn run_audit(mut args: AuditArgs) -> Result<()> {
    args.instance.resolve()?;
    args.loss.resolve()?;
    absolute(&mut args.model)?;
    let mut run = Run::new("audit", &args, Some(args.seed))?;
    args.instance.record(&mut run)?;
    args.loss.record(&mut run)?;
    run.input(&args.model)?;
    let inst = run.stage("load", || args.instance.load(args.loss.family()?))?;
    let model: SparsifiedModel = serde_json::from_str(&std::fs::read_to_string(&args.model)?)?;
    if model.indices.iter().any(|&i| i >= inst.rows()) {
        return Err(Error::Dimension(
            "model refers to rows beyond the instance".into(),
        ));
    }
    let cfg = AuditConfig {
        gaussian_dirs: args.gaussian_dirs,
        coordinate_dirs: true,
        max_row_dirs: args.row_dirs,
        n_scales: args.scales,
        seed: args.seed,
    };
    let summary = run.stage("audit", || -> Result<AuditSummary> {
        let eps = model.eps;
        if let Some(radius) = model.ball_radius {
            let ball = audit_ball(&inst, &model, radius, args.ball.unwrap_or(400), args.seed)?;
            let pass = ball.max_rel_error <= eps;
            return Ok(AuditSummary {
                eps,
                in_range: None,
                outside: None,
                ball: Some(ball),
                pass,
            });
        }
        let in_range = audit_sparsifier(&inst, &model, &cfg)?;
        let mut pass = in_range.max_rel_error <= eps;
        let count = args.outside.unwrap_or(if model.global { 10 } else { 0 });
        let outside = if count > 0 {
            let r = audit_outside(&inst, &model, count, StreamSeed::new(args.seed).child(1).0)?;
            pass &= !model.global || r.max_rel_error <= 2.0 * eps;
            Some(r)
        } else {
            None
        };
        Ok(AuditSummary {
            eps,
            in_range: Some(in_range),
            outside,
            ball: None,
            pass,
        })
    })?;
    let pass = summary.pass;
    let json = to_json_string(&summary)?;
    run.finish(&args.output, &json)?;
    if !pass {
        return Err(Error::Audit("relative error above the model's eps".into()));
    }
    Ok(())
}

pub fn run_solve(mut args: SolveArgs) -> Result<()> {
    args.instance.resolve()?;
    args.loss.resolve()?;
    let mut run = Run::new("solve", &args, Some(args.seed))?;
    args.instance.record(&mut run)?;
    args.loss.record(&mut run)?;
    let family = args.loss.family()?;
    let inst = run.stage("load", || args.instance.load(family.clone()))?;
    let json = run.stage("solve", || -> Result<String> {
        if family.is_huber() {
            return to_json_string(&solve_huber(
                inst.matrix(),
                inst.shift(),
                args.eps,
                args.seed,
            )?);
        }
        if let (Some(p), None) = (family.p(), args.max_steps) {
            if family.thresholds().is_none() {
                return to_json_string(&solve_lp(
                    inst.matrix(),
                    inst.shift(),
                    p,
                    args.eps,
                    args.seed,
                )?);
            }
        }
        let x0 = vec![0.0; inst.cols()];
        let gamma = inst.objective(&x0);
        let mut cfg =
            RefinementConfig::for_family(&family, gamma.max(f64::MIN_POSITIVE), 1e-30 * gamma)?;
        cfg.rel_tol = Some(args.eps);
        cfg.seed = args.seed;
        cfg.max_steps = args.max_steps;
        to_json_string(&solve_glm(&inst, &x0, &cfg)?)
    })?;
    run.finish(&args.output, &json)
}

pub fn run_dual(mut args: DualArgs) -> Result<()> {
    absolute(&mut args.matrix)?;
    absolute(&mut args.c)?;
    let mut run = Run::new("solve-dual", &args, Some(args.seed))?;
    run.input(&args.matrix)?;
    run.input(&args.c)?;
    let (a, c) = run.stage("load", || -> Result<_> {
        Ok((read_matrix(&args.matrix)?, read_vector(&args.c)?))
    })?;
    let sol = run.stage("solve", || {
        solve_lp_dual(&a, &c, args.q, args.eps, args.seed)
    })?;
    run.finish(&args.output, &to_json_string(&sol)?)
}

pub fn run_weights(mut args: WeightsArgs) -> Result<()> {
    args.instance.resolve()?;
    args.loss.resolve()?;
    let mut run = Run::new("weights", &args, Some(args.seed))?;
    args.instance.record(&mut run)?;
    args.loss.record(&mut run)?;
    let inst = run.stage("load", || args.instance.load(args.loss.family()?))?;
    let lifted = if inst.has_shift() {
        lift_shift(&inst)
    } else {
        inst
    };
    let scheme = run.stage("weights", || {
        build_scheme(&lifted, args.s_min, args.s_max, args.eps, args.seed)
    })?;
    run.finish(&args.output, &to_json_string(&scheme)?)
}

pub fn run_certify(mut args: CertifyArgs) -> Result<()> {
    args.loss.resolve()?;
    let mut run = Run::new("certify-loss", &args, None)?;
    args.loss.record(&mut run)?;
    let family = args.loss.family()?;
    let grid = GridSpec {
        tol: args.tol,
        ..GridSpec::default()
    };
    let cert = run.stage("certify", || certify_properties(&family, &grid))?;
    let pass = cert.pass;
    run.finish(&args.output, &to_json_string(&cert)?)?;
    if !pass {
        return Err(Error::Audit(
            "loss fails at least one property check".into(),
        ));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct GenFile {
    name: String,
    sha256: String,
}

#[derive(Debug, Serialize)]
struct GenOutput<'a> {
    files: Vec<GenFile>,
    sidecar: &'a glms_core::io::Sidecar,
}

pub fn run_gen(mut args: GenArgs) -> Result<()> {
    absolute(&mut args.out_dir)?;
    let mut run = Run::new("gen", &args, Some(args.seed))?;
    let spec = GenSpec {
        kind: args.kind,
        m: args.m,
        n: args.n,
        seed: args.seed,
    };
    let generated = run.stage("generate", || generate_instance(&spec))?;
    let paths = run.stage("write", || generated.write(&args.out_dir))?;
    let files = paths
        .iter()
        .map(|p| {
            let name = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok(GenFile {
                name,
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let json = to_json_string(&GenOutput {
        files,
        sidecar: &generated.sidecar,
    })?;
    run.finish(&args.output, &json)
}

fn params_as<T: serde::de::DeserializeOwned>(manifest: &RunManifest) -> Result<T> {
    let map: serde_json::Map<String, serde_json::Value> =
        manifest.params.clone().into_iter().collect();
    serde_json::from_value(serde_json::Value::Object(map)).map_err(|e| {
        Error::Config(format!(
            "manifest parameters do not fit '{}': {e}",
            manifest.command
        ))
    })
}

pub fn rerun(path: &Path, out: Option<PathBuf>, out_dir: Option<PathBuf>) -> Result<()> {
    let manifest = RunManifest::load(path)?;
    manifest.verify_inputs()?;
    let output = |mut o: OutputArgs| {
        if out.is_some() {
            o.out = out.clone();
        }
        o
    };
    match manifest.command.as_str() {
        "sparsify" => {
            let mut a: SparsifyArgs = params_as(&manifest)?;
            a.output = output(a.output);
            run_sparsify(a)
        }
        "audit" => {
            let mut a: AuditArgs = params_as(&manifest)?;
            a.output = output(a.output);
            run_audit(a)
        }
        "solve" => {
            let mut a: SolveArgs = params_as(&manifest)?;
            a.output = output(a.output);
            run_solve(a)
        }
        "solve-dual" => {
            let mut a: DualArgs = params_as(&manifest)?;
            a.output = output(a.output);
            run_dual(a)
        }
        "weights" => {
            let mut a: WeightsArgs = params_as(&manifest)?;
            a.output = output(a.output);
            run_weights(a)
        }
        "certify-loss" => {
            let mut a: CertifyArgs = params_as(&manifest)?;
            a.output = output(a.output);
            run_certify(a)
        }
        "gen" => {
            let mut a: GenArgs = params_as(&manifest)?;
            a.output = output(a.output);
            if let Some(d) = out_dir {
                a.out_dir = d;
            }
            run_gen(a)
        }
        other => Err(Error::Config(format!(
            "unknown command '{other}' in manifest"
        ))),
    }
}
