use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use deepwave::halfplane::{bvp_residual, conformal_trace, dirichlet_to_neumann};
use deepwave::identities::{commutator_defect, pohozaev_pairing, seeded_family, skew_pairing, IdentityReport};
use deepwave::io::{export_report, num, operator_bytes, to_json, ExportFormat, Report};
use deepwave::linearized::{linear_residual, schrodinger_matrix, schrodinger_spectrum, solve_linear_inhomogeneous};
use deepwave::probe::{decay_rate_fit, newton_probe_line, DecayFit, ProbeReport};
use deepwave::steady::{residual_bernoulli, residual_deep};
use deepwave::stokes::{continue_branch, onset_coefficient, solve_at_amplitude, NewtonOptions, SolveOutcome};
use deepwave::transforms::conjugate_derivative;
use deepwave::{Grid, Profile, Transforms, WaveState};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Command, RunConfig, Shape, Template};
use crate::RunError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ok,
    Failed,
}

#[derive(Clone, Debug, Serialize)]
pub struct TaskRecord {
    pub name: String,
    pub status: TaskStatus,
    pub message: Option<String>,
    pub files: Vec<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub toolkit_version: String,
    pub command: String,
    pub config: RunConfig,
    pub started: String,
    pub finished: String,
    pub tasks: Vec<TaskRecord>,
    /// Every file written under the output directory, relative, sorted.
    /// The manifest itself is not listed.
    pub files: Vec<String>,
}

impl RunManifest {
    pub fn failed_tasks(&self) -> usize {
        self.tasks.iter().filter(|t| t.status == TaskStatus::Failed).count()
    }

    pub fn exit_code(&self) -> i32 {
        if self.failed_tasks() == 0 {
            0
        } else {
            1
        }
    }
}

/// Single place where files are created, so the index stays exact.
struct Sink {
    root: PathBuf,
    written: Mutex<BTreeSet<String>>,
}

type TaskResult = Result<Option<String>, String>;

impl Sink {
    fn put(&self, rel: &str, bytes: &[u8]) -> Result<String, String> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        }
        let mut w = self.written.lock().expect("index lock");
        if !w.insert(rel.to_string()) {
            return Err(format!("{rel} written twice"));
        }
        drop(w);
        fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(rel.to_string())
    }

    fn report<R: Report + ?Sized>(&self, rel: &str, r: &R, format: ExportFormat) -> Result<String, String> {
        let text = export_report(r, format).map_err(|e| e.to_string())?;
        self.put(rel, text.as_bytes())
    }

    fn json<T: Serialize + ?Sized>(&self, rel: &str, v: &T) -> Result<String, String> {
        let text = to_json(v).map_err(|e| e.to_string())?;
        self.put(rel, text.as_bytes())
    }
}

/// Collects task records; each task lists the files it wrote.
struct Tasks<'a> {
    sink: &'a Sink,
    records: Vec<TaskRecord>,
}

impl<'a> Tasks<'a> {
    fn record(&mut self, name: String, files: Vec<String>, result: TaskResult) {
        let (status, message) = match result {
            Ok(m) => (TaskStatus::Ok, m),
            Err(m) => (TaskStatus::Failed, Some(m)),
        };
        self.records.push(TaskRecord { name, status, message, files });
    }

    /// A task that only writes files; any error fails it.
    fn single(&mut self, name: &str, f: impl FnOnce(&Sink, &mut Vec<String>) -> TaskResult) {
        let mut files = Vec::new();
        let r = f(self.sink, &mut files);
        self.record(name.to_string(), files, r);
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// Keeps `[A-Za-z0-9._-]`, everything else becomes `_`.
fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect()
}

fn mu_tag(mu: f64) -> String {
    file_stem(&format!("mu{mu}"))
}

/// Runs the configured command, writing every report under `config.out`.
/// Task failures are recorded in the manifest, not returned as errors.
pub fn run_command(config: &RunConfig, threads: Option<usize>) -> Result<RunManifest, RunError> {
    let started = chrono::Utc::now().to_rfc3339();
    fs::create_dir_all(&config.out).map_err(|e| RunError::Output { path: config.out.clone(), source: e })?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Threads(e.to_string()))?;
    let sink = Sink { root: config.out.clone(), written: Mutex::new(BTreeSet::new()) };
    let mut tasks = Tasks { sink: &sink, records: Vec::new() };
    let grid = config.grid.build()?;
    let tf = config.transforms.build();
    pool.install(|| match config.command {
        Command::VerifyIdentities => verify_identities(config, grid, &tf, &mut tasks),
        Command::StokesContinue => stokes_continue(config, grid, &tf, &mut tasks),
        Command::SolitaryProbe => solitary_probe(config, grid, &tf, &mut tasks),
        Command::Spectrum => spectrum(config, grid, &tf, &mut tasks),
        Command::BvpCheck => bvp_check(config, grid, &tf, &mut tasks),
        Command::LinearSolve => linear_solve(config, grid, &tf, &mut tasks),
    });
    let records = tasks.records;
    let files: Vec<String> = sink.written.into_inner().expect("index lock").into_iter().collect();
    let manifest = RunManifest {
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        command: config.command.name().to_string(),
        config: config.clone(),
        started,
        finished: chrono::Utc::now().to_rfc3339(),
        tasks: records,
        files,
    };
    let text = to_json(&manifest)?;
    let path = config.out.join(MANIFEST_FILE);
    fs::write(&path, text).map_err(|e| RunError::Output { path, source: e })?;
    Ok(manifest)
}

fn sample_all(templates: &[Template], grid: Grid) -> Vec<(String, Result<Profile, String>)> {
    templates.iter().map(|t| (t.name.clone(), t.sample(grid).map_err(err))).collect()
}

fn template(name: &str, shape: Shape, amplitude: f64, width: f64) -> Template {
    Template { name: name.into(), shape, amplitude, width, center: 0.0, wavenumber: 1.0, phase: 0.0 }
}

fn packet(name: &str, amplitude: f64, width: f64, wavenumber: f64, phase: f64) -> Template {
    Template { wavenumber, phase, ..template(name, Shape::Packet, amplitude, width) }
}

/// Twelve starts of both signs and oscillating packets.
pub fn default_campaign() -> Vec<Template> {
    vec![
        template("sech2_pos", Shape::Sech2, 0.3, 1.0),
        template("sech2_neg", Shape::Sech2, -0.3, 1.0),
        template("sech2_wide_pos", Shape::Sech2, 0.1, 3.0),
        template("sech2_wide_neg", Shape::Sech2, -0.1, 3.0),
        template("gauss_pos", Shape::Gaussian, 0.5, 1.0),
        template("gauss_neg", Shape::Gaussian, -0.5, 1.0),
        template("gauss_wide_pos", Shape::Gaussian, 0.2, 4.0),
        template("gauss_wide_neg", Shape::Gaussian, -0.2, 4.0),
        packet("packet_k1", 0.3, 5.0, 1.0, 0.0),
        packet("packet_k2", -0.3, 5.0, 2.0, 0.0),
        packet("packet_k05", 0.3, 5.0, 0.5, 0.5),
        packet("packet_k3", 0.2, 3.0, 3.0, 1.0),
    ]
}

fn verify_identities(cfg: &RunConfig, grid: Grid, tf: &Transforms, tasks: &mut Tasks) {
    let profiles: Vec<(String, Result<Profile, String>)> = if cfg.templates.is_empty() {
        match seeded_family(grid, cfg.identities.family_size, cfg.seed) {
            Ok(f) => f.into_iter().map(|(n, p)| (n, Ok(p))).collect(),
            Err(e) => {
                tasks.record("family".into(), vec![], Err(err(e)));
                return;
            }
        }
    } else {
        sample_all(&cfg.templates, grid)
    };
    let tol = &cfg.tolerances;
    let results: Vec<Result<Vec<IdentityReport>, String>> = profiles
        .par_iter()
        .map(|(name, p)| {
            let p = p.clone()?;
            let tag = |mut r: IdentityReport, suffix: &str| {
                r.name = format!("{name}.{}{suffix}", r.name);
                r
            };
            let mut out = vec![
                tag(commutator_defect(&p, tf, tol.commutator).map_err(err)?, ""),
                tag(skew_pairing(&p, tf, tol.identity).map_err(err)?, ""),
            ];
            for &mu in &cfg.mu {
                let s = WaveState::new(p.clone(), mu).map_err(err)?;
                out.push(tag(pohozaev_pairing(&s, tf, tol.identity).map_err(err)?, &format!(".mu={mu}")));
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::new();
    for ((name, _), r) in profiles.iter().zip(results) {
        let r = r.and_then(|reps| {
            let bad: Vec<&str> = reps.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
            let out = if bad.is_empty() { Ok(None) } else { Err(format!("failed: {}", bad.join(", "))) };
            all.extend(reps);
            out
        });
        tasks.record(name.clone(), vec![], r);
    }
    tasks.single("identities", |s, files| {
        files.push(s.report("identities.csv", &all, ExportFormat::Csv)?);
        files.push(s.report("identities.json", &all, ExportFormat::Json)?);
        Ok(None)
    });
}

#[derive(Serialize)]
struct StokesSummary {
    mu_start: f64,
    amplitude_start: f64,
    points: usize,
    diagnostic: Option<String>,
    /// Fitted `c` in `μ ≈ 1 + c a²` over the points with `a ≤ 0.25`.
    onset_coefficient: Option<f64>,
    max_deep_residual: f64,
    max_bernoulli_residual: f64,
}

fn stokes_continue(cfg: &RunConfig, grid: Grid, tf: &Transforms, tasks: &mut Tasks) {
    let mu = cfg.mu[0];
    let opts = NewtonOptions { max_iter: cfg.stokes.max_iter, tol: cfg.tolerances.newton, damping: None };
    tasks.single("stokes", |s, files| {
        let a = match cfg.stokes.amplitude {
            Some(a) => a,
            None if mu < 1.0 => (1.0 - mu).sqrt(),
            None => return Err(format!("stokes.amplitude is required for mu = {mu} >= 1")),
        };
        let start = match solve_at_amplitude(&grid, a, mu, None, &opts, tf).map_err(err)? {
            SolveOutcome::Converged(p) => p,
            SolveOutcome::Failed(f) => {
                files.push(s.json("stokes_failure.json", &f)?);
                return Err(format!("no wave at amplitude {a}: {}", f.reason));
            }
        };
        let branch = continue_branch(&start, cfg.stokes.steps, cfg.stokes.step_size, &opts, tf).map_err(err)?;
        let (mut deep, mut bern) = (0.0f64, 0.0f64);
        for p in &branch.points {
            let st = p.state();
            deep = deep.max(residual_deep(&st, tf).map_err(err)?.sup_norm);
            bern = bern.max(residual_bernoulli(&st, tf).map_err(err)?.sup_norm);
        }
        let summary = StokesSummary {
            mu_start: start.mu,
            amplitude_start: start.amplitude,
            points: branch.points.len(),
            diagnostic: branch.diagnostic.clone(),
            onset_coefficient: onset_coefficient(&branch.points, 1.0, 0.0, 0.25),
            max_deep_residual: deep,
            max_bernoulli_residual: bern,
        };
        files.push(s.report("branch.csv", branch.points.as_slice(), ExportFormat::Csv)?);
        files.push(s.report("branch.json", branch.points.as_slice(), ExportFormat::Json)?);
        files.push(s.json("stokes_summary.json", &summary)?);
        match branch.diagnostic {
            Some(d) => Err(d),
            None => Ok(None),
        }
    });
}

fn solitary_probe(cfg: &RunConfig, grid: Grid, tf: &Transforms, tasks: &mut Tasks) {
    let templates = if cfg.templates.is_empty() { default_campaign() } else { cfg.templates.clone() };
    let starts = sample_all(&templates, grid);
    let jobs: Vec<(usize, f64)> = (0..starts.len()).flat_map(|i| cfg.mu.iter().map(move |&m| (i, m))).collect();
    let reports: Vec<(String, Result<ProbeReport, String>)> = jobs
        .par_iter()
        .map(|&(i, mu)| {
            let (name, w0) = &starts[i];
            let r = w0.clone().and_then(|w0| newton_probe_line(&w0, mu, name, tf, &cfg.probe).map_err(err));
            (format!("{}_{}", file_stem(name), mu_tag(mu)), r)
        })
        .collect();
    let mut ok = Vec::new();
    let cert = &cfg.probe.certificate;
    for (stem, r) in reports {
        let mut files = Vec::new();
        let res = r.and_then(|rep| {
            files.push(tasks.sink.report(&format!("probes/{stem}.json"), &rep, ExportFormat::Json)?);
            // the bound is only claimed for near-solutions
            let near = rep.final_residual <= cert.residual_tol;
            let out = if near && !rep.certificate.sound {
                Err("certificate bound violated by a near-solution".to_string())
            } else if rep.is_decaying_solution(cert.residual_tol, cert.rho_min) {
                Ok(Some("nontrivial decaying near-solution".to_string()))
            } else {
                Ok(None)
            };
            ok.push(rep);
            out
        });
        tasks.record(stem, files, res);
    }
    tasks.single("summary", |s, files| {
        files.push(s.report("probes.csv", &ok, ExportFormat::Csv)?);
        Ok(None)
    });
}

#[derive(Serialize)]
struct SpectrumSummary {
    mu: f64,
    lowest: Option<f64>,
    negative_count: usize,
    asymmetry: f64,
    /// Decay of the lowest eigenvector, line grids only.
    ground_decay: Option<DecayFit>,
}

fn spectrum(cfg: &RunConfig, grid: Grid, tf: &Transforms, tasks: &mut Tasks) {
    let defaults = [template("well", Shape::Sech2, 1.0, 1.0)];
    let templates: &[Template] = if cfg.templates.is_empty() { &defaults } else { &cfg.templates };
    let mut well = Profile::zeros(grid);
    for (name, p) in sample_all(templates, grid) {
        match p {
            Ok(p) => well = well.add(&p),
            Err(e) => return tasks.record(format!("potential {name}"), vec![], Err(e)),
        }
    }
    let results: Vec<_> = cfg
        .mu
        .par_iter()
        .map(|&mu| {
            let g = well.map(|v| v + mu);
            (mu, schrodinger_spectrum(&g, mu, tf).map(|s| (g, s)))
        })
        .collect();
    for (mu, r) in results {
        let tag = mu_tag(mu);
        let mut files = Vec::new();
        let res = (|| {
            let (g, sp) = r.map_err(err)?;
            let sink = tasks.sink;
            files.push(sink.report(&format!("spectrum_{tag}.csv"), &sp, ExportFormat::Csv)?);
            files.push(sink.report(&format!("spectrum_{tag}.json"), &sp, ExportFormat::Json)?);
            for i in 0..cfg.spectrum.eigenvectors.min(sp.eigenvalues.len()) {
                if let Some(v) = sp.eigenvector(i) {
                    files.push(sink.report(&format!("eigenvector{i}_{tag}.csv"), &v, ExportFormat::Csv)?);
                }
            }
            if cfg.spectrum.export_operator {
                let bytes = operator_bytes(&schrodinger_matrix(&g, mu)).map_err(err)?;
                files.push(sink.put(&format!("operator_{tag}.bin"), &bytes)?);
            }
            let ground_decay = match (grid.is_line(), sp.eigenvector(0)) {
                (true, Some(v)) => decay_rate_fit(&v, None).ok(),
                _ => None,
            };
            let summary = SpectrumSummary {
                mu,
                lowest: sp.eigenvalues.first().copied(),
                negative_count: sp.eigenvalues.iter().filter(|e| **e < 0.0).count(),
                asymmetry: sp.asymmetry,
                ground_decay,
            };
            files.push(sink.json(&format!("spectrum_summary_{tag}.json"), &summary)?);
            Ok(sp.warning)
        })();
        tasks.record(format!("spectrum {tag}"), files, res);
    }
}

#[derive(Serialize)]
struct BvpRow {
    name: String,
    mu: f64,
    deep_sup: f64,
    bernoulli_sup: f64,
    bvp_sup: f64,
    /// `max |bvp·D + B|`.
    cross_defect: f64,
    /// `max |DtN v - H v'|`, periodic grids only.
    dtn_defect: Option<f64>,
    passed: bool,
}

fn bvp_row(name: &str, w: &Profile, mu: f64, tf: &Transforms, tol: f64) -> Result<BvpRow, String> {
    let s = WaveState::new(w.clone(), mu).map_err(err)?;
    let bvp = bvp_residual(&s, tf).map_err(err)?;
    let b = residual_bernoulli(&s, tf).map_err(err)?;
    let deep = residual_deep(&s, tf).map_err(err)?;
    let d = conformal_trace(w, tf).map_err(err)?.modulus_sq();
    let cross = bvp.residual.mul(&d).add(&b.residual).sup_norm();
    let dtn = if w.grid().is_periodic() {
        let a = dirichlet_to_neumann(w, tf).map_err(err)?;
        Some(a.sub(&conjugate_derivative(w).map_err(err)?).sup_norm())
    } else {
        None
    };
    let passed = cross <= tol && dtn.is_none_or(|e| e <= tol);
    Ok(BvpRow {
        name: name.to_string(),
        mu,
        deep_sup: deep.sup_norm,
        bernoulli_sup: b.sup_norm,
        bvp_sup: bvp.sup_norm,
        cross_defect: cross,
        dtn_defect: dtn,
        passed,
    })
}

fn bvp_check(cfg: &RunConfig, grid: Grid, tf: &Transforms, tasks: &mut Tasks) {
    let defaults = if grid.is_periodic() {
        [template("cosine", Shape::Cosine, 0.1, 1.0)]
    } else {
        [template("gauss", Shape::Gaussian, 0.1, 1.0)]
    };
    let templates: &[Template] = if cfg.templates.is_empty() { &defaults } else { &cfg.templates };
    let mut rows = Vec::new();
    for (name, p) in sample_all(templates, grid) {
        for &mu in &cfg.mu {
            let r = p.clone().and_then(|w| bvp_row(&name, &w, mu, tf, cfg.tolerances.identity));
            let res = r.and_then(|row| {
                let out = if row.passed { Ok(None) } else { Err(format!("cross defect {:e}", row.cross_defect)) };
                rows.push(row);
                out
            });
            tasks.record(format!("{name} mu={mu}"), vec![], res);
        }
    }
    tasks.single("bvp summary", |s, files| {
        let mut csv = String::from("name,mu,deep_sup,bernoulli_sup,bvp_sup,cross_defect,dtn_defect,passed\n");
        for r in &rows {
            let dtn = r.dtn_defect.map(num).unwrap_or_default();
            csv.push_str(&format!(
                "{},{:?},{:?},{:?},{:?},{:?},{},{}\n",
                r.name, r.mu, r.deep_sup, r.bernoulli_sup, r.bvp_sup, r.cross_defect, dtn, r.passed
            ));
        }
        files.push(s.put("bvp_check.csv", csv.as_bytes())?);
        files.push(s.json("bvp_check.json", &rows)?);
        Ok(None)
    });
}

#[derive(Serialize)]
struct LinearRow {
    name: String,
    mu: f64,
    residual_sup: f64,
    dropped_tail: f64,
    passed: bool,
}

fn linear_solve(cfg: &RunConfig, grid: Grid, tf: &Transforms, tasks: &mut Tasks) {
    let defaults = [template("gauss", Shape::Gaussian, 1.0, 1.0)];
    let templates: &[Template] = if cfg.templates.is_empty() { &defaults } else { &cfg.templates };
    let mut rows = Vec::new();
    for (name, p) in sample_all(templates, grid) {
        for &mu in &cfg.mu {
            let tag = format!("{}_{}", file_stem(&name), mu_tag(mu));
            let mut files = Vec::new();
            let res = (|| {
                let g = p.clone()?;
                let sol = solve_linear_inhomogeneous(&g, mu, tf).map_err(err)?;
                let res = linear_residual(&sol.solution, &g, mu, tf).map_err(err)?.sup_norm();
                files.push(tasks.sink.report(&format!("linear_{tag}.csv"), &sol.solution, ExportFormat::Csv)?);
                let passed = res <= cfg.tolerances.residual;
                rows.push(LinearRow {
                    name: name.clone(),
                    mu,
                    residual_sup: res,
                    dropped_tail: sol.dropped_tail,
                    passed,
                });
                if passed {
                    Ok(None)
                } else {
                    Err(format!("residual {res:e}"))
                }
            })();
            tasks.record(tag, files, res);
        }
    }
    tasks.single("linear summary", |s, files| {
        files.push(s.json("linear_solve.json", &rows)?);
        Ok(None)
    });
}

/// Sorted relative paths of every regular file under `root`.
pub fn list_files(root: &Path) -> std::io::Result<Vec<String>> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<String>) -> std::io::Result<()> {
        for e in fs::read_dir(dir)? {
            let p = e?.path();
            if p.is_dir() {
                walk(base, &p, out)?;
            } else {
                let rel = p.strip_prefix(base).expect("under base");
                out.push(rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"));
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort();
    Ok(out)
}
