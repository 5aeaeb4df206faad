//! Subcommand implementations. Each takes a fully resolved [`RunConfig`],
//! writes its outputs under `cfg.out` and finishes with the resolved
//! config and a manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use log::{info, warn};
use neurocal_core::exec::Executor;
use neurocal_core::morphometrics::{assemble, extract, labels, Morphometric, QoiMatrix};
use neurocal_core::rng::derive_seed;
use neurocal_core::sensitivity::{run_sa, Ishigami, ParamSpace, SaOutput};
use neurocal_core::simulator::{GrowthSimulator, Simulator, ToyGaussian};
use neurocal_core::smcabc::{
    kde_marginals, pair_neurons, predictive_check, run_smcabc, Prior, SmcRun, SmcState, StopReason,
};
use neurocal_core::stats::{mean, quantile, std_dev};
use neurocal_core::study::{summarize, wasserstein_study};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{growth_prior, CalibrationTarget, RunConfig, SensitivityTarget};
use crate::csvio::{opt, read_qoi, write_qoi_file, write_rows, QoiTable};
use crate::error::{invalid, Interrupted};
use crate::exec::RayonExecutor;
use crate::swc::{parse_swc, select_subtree, write_swc, MorphologyReport};
use crate::trace::{load_checkpoint, TraceWriter, CHECKPOINT_FILE, TRACE_FILE};

pub const MANIFEST_SCHEMA: u32 = 1;

/// Collects the files a command wrote, for the manifest.
pub struct Outputs {
    root: PathBuf,
    files: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Outputs {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    /// Path for a new output relative to the root; parent directories are
    /// created.
    pub fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let p = self.root.join(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        if !self.files.iter().any(|f| f == Path::new(rel)) {
            self.files.push(PathBuf::from(rel));
        }
        Ok(p)
    }

    pub fn write(&mut self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<()> {
        let p = self.path(rel)?;
        fs::write(&p, bytes).with_context(|| format!("writing {}", p.display()))
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, text)
    }

    /// Writes `config.resolved.toml` and `manifest.json`. No timestamps, so
    /// identical runs give identical manifests.
    pub fn finish(mut self, command: &str, cfg: &RunConfig, workers: usize) -> Result<()> {
        self.write("config.resolved.toml", cfg.to_toml())?;
        let mut files = BTreeMap::new();
        for rel in &self.files {
            let bytes = fs::read(self.root.join(rel))?;
            files.insert(rel.to_string_lossy().replace('\\', "/"), hex_digest(&bytes));
        }
        let manifest = Manifest {
            schema: MANIFEST_SCHEMA,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed: cfg.seed,
            workers,
            rerun: format!("neurocal --config config.resolved.toml --workers {workers} {command}"),
            sha256: files,
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(self.root.join("manifest.json"), text)?;
        Ok(())
    }
}

#[derive(Serialize)]
struct Manifest {
    schema: u32,
    tool: &'static str,
    version: &'static str,
    command: String,
    seed: u64,
    workers: usize,
    rerun: String,
    sha256: BTreeMap<String, String>,
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn neuron_id(i: usize) -> String {
    format!("neuron_{i:05}")
}

#[derive(Serialize)]
struct QoiSummaryRow {
    qoi: String,
    mean: f64,
    std: f64,
    min: f64,
    q25: f64,
    median: f64,
    q75: f64,
    max: f64,
}

fn qoi_summary(m: &QoiMatrix) -> Vec<QoiSummaryRow> {
    m.labels
        .iter()
        .enumerate()
        .map(|(j, l)| {
            let c = m.column(j);
            QoiSummaryRow {
                qoi: l.clone(),
                mean: mean(&c),
                std: std_dev(&c),
                min: quantile(&c, 0.0),
                q25: quantile(&c, 0.25),
                median: quantile(&c, 0.5),
                q75: quantile(&c, 0.75),
                max: quantile(&c, 1.0),
            }
        })
        .collect()
}

fn write_summary_csv(out: &mut Outputs, rel: &str, m: &QoiMatrix) -> Result<()> {
    let p = out.path(rel)?;
    let mut w = csv::Writer::from_path(&p)?;
    for row in qoi_summary(m) {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(cfg: &RunConfig, exec: &RayonExecutor) -> Result<()> {
    let setup = cfg.model.resolve()?;
    let sc = &cfg.simulate;
    if sc.count == 0 {
        return Err(invalid("simulate.count must be >= 1").into());
    }
    if sc.selection.is_empty() {
        return Err(invalid("simulate.selection must not be empty").into());
    }
    let mut out = Outputs::new(&cfg.out)?;
    info!("simulating {} neurons with {:?}", sc.count, setup.model);
    let results: Vec<Result<(Vec<f64>, Option<String>)>> = exec.map(sc.count, |i| {
        let tree = setup.simulate(derive_seed(cfg.seed, &[i as u64]))?;
        let row = extract(&tree, &sc.selection)?;
        Ok((row, sc.write_swc.then(|| write_swc(&tree, None))))
    });
    let mut rows = Vec::with_capacity(sc.count);
    let mut ids = Vec::with_capacity(sc.count);
    for (i, r) in results.into_iter().enumerate() {
        let (row, swc) = r.with_context(|| format!("neuron {i}"))?;
        if let Some(text) = swc {
            out.write(&format!("swc/{}.swc", neuron_id(i)), text)?;
        }
        rows.push(row);
        ids.push(neuron_id(i));
    }
    let m = QoiMatrix::from_rows(labels(&sc.selection), &rows)?;
    let p = out.path("qoi.csv")?;
    write_qoi_file(&p, &ids, &m)?;
    write_summary_csv(&mut out, "qoi_summary.csv", &m)?;
    out.finish("simulate", cfg, exec.workers())
}

#[derive(Debug, Serialize)]
pub struct FileReport {
    pub file: String,
    pub accepted: bool,
    pub rows: usize,
    pub report: MorphologyReport,
    /// Human-readable problems, violations first.
    pub errors: Vec<String>,
}

fn swc_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("listing {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| {
                    f.is_file() && f.extension().is_some_and(|x| x.eq_ignore_ascii_case("swc"))
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

pub fn morphometrics(cfg: &RunConfig, workers: usize) -> Result<()> {
    let mc = &cfg.morphometrics;
    if mc.inputs.is_empty() {
        return Err(invalid("morphometrics needs at least one input file or directory").into());
    }
    if mc.selection.is_empty() {
        return Err(invalid("morphometrics.selection must not be empty").into());
    }
    let files = swc_inputs(&mc.inputs)?;
    if files.is_empty() {
        return Err(invalid("no SWC files found in the inputs").into());
    }
    let mut out = Outputs::new(&cfg.out)?;
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for path in &files {
        let name = path.file_name().map_or_else(
            || path.display().to_string(),
            |n| n.to_string_lossy().into_owned(),
        );
        let stem = path
            .file_stem()
            .map_or_else(|| name.clone(), |s| s.to_string_lossy().into_owned());
        let (trees, report, mut errors) = match fs::read(path) {
            Ok(bytes) => {
                let (trees, report) = parse_swc(&String::from_utf8_lossy(&bytes));
                let errors = report.violations.iter().map(|v| v.to_string()).collect();
                (trees, report, errors)
            }
            Err(e) => (
                Vec::new(),
                MorphologyReport::default(),
                vec![format!("cannot read: {e}")],
            ),
        };
        let mut file_rows = Vec::new();
        if errors.is_empty() {
            for (k, tree) in trees.iter().enumerate() {
                let tree = match &mc.subtree {
                    Some(codes) => match select_subtree(tree, codes) {
                        Ok(t) => t,
                        Err(e) => {
                            errors.push(format!("tree {k}: {e}"));
                            continue;
                        }
                    },
                    None => tree.clone(),
                };
                match assemble([&tree], &mc.selection) {
                    Ok(m) => {
                        let id = if trees.len() == 1 {
                            stem.clone()
                        } else {
                            format!("{stem}#{k}")
                        };
                        file_rows.push((id, m.row(0).to_vec()));
                    }
                    Err(e) => errors.push(format!("tree {k}: {e}")),
                }
            }
        }
        let accepted = errors.is_empty();
        if accepted {
            for (id, row) in file_rows {
                ids.push(id);
                rows.push(row);
            }
        } else {
            warn!("{name}: rejected: {}", errors.join("; "));
        }
        reports.push(FileReport {
            file: name,
            accepted,
            rows: if accepted { trees.len() } else { 0 },
            report,
            errors,
        });
    }
    out.write_json("report.json", &reports)?;
    if rows.is_empty() {
        return Err(invalid(format!(
            "all {} input files failed validation; see report.json",
            files.len()
        ))
        .into());
    }
    let m = QoiMatrix::from_rows(labels(&mc.selection), &rows)?;
    let p = out.path("qoi.csv")?;
    write_qoi_file(&p, &ids, &m)?;
    out.finish("morphometrics", cfg, workers)
}

enum Problem {
    Growth(GrowthSimulator),
    Toy(ToyGaussian),
}

impl Problem {
    fn simulator(&self) -> &dyn Simulator {
        match self {
            Problem::Growth(s) => s,
            Problem::Toy(s) => s,
        }
    }
}

fn selection_from_labels(table: &QoiTable) -> Result<Vec<Morphometric>> {
    table
        .matrix
        .labels
        .iter()
        .map(|l| {
            l.parse::<Morphometric>()
                .map_err(|_| invalid(format!("observed column '{l}' is not a morphometric")).into())
        })
        .collect()
}

fn build_problem(cfg: &RunConfig, observed: &QoiTable) -> Result<(Problem, Prior)> {
    let cc = &cfg.calibrate;
    match cc.target {
        CalibrationTarget::Growth => {
            let setup = cfg.model.resolve()?;
            let selection = match &cc.selection {
                Some(s) => s.clone(),
                None => selection_from_labels(observed)?,
            };
            let sim = GrowthSimulator::new(setup, selection);
            if sim.qoi_labels() != observed.matrix.labels {
                return Err(invalid(format!(
                    "observed columns {:?} do not match the selected QoIs {:?}",
                    observed.matrix.labels,
                    sim.qoi_labels()
                ))
                .into());
            }
            let prior = cc.prior.clone().unwrap_or_else(growth_prior);
            Ok((Problem::Growth(sim), prior))
        }
        CalibrationTarget::ToyGaussian => {
            let sim = ToyGaussian::new(observed.matrix.cols())?;
            if sim.qoi_labels() != observed.matrix.labels {
                return Err(invalid(format!(
                    "toy model expects columns {:?}, observed data has {:?}",
                    sim.qoi_labels(),
                    observed.matrix.labels
                ))
                .into());
            }
            let d = sim.dim_theta();
            let prior = cc.prior.clone().unwrap_or_else(|| Prior {
                names: (1..=d).map(|i| format!("mu{i}")).collect(),
                lower: vec![-10.0; d],
                upper: vec![10.0; d],
            });
            Ok((Problem::Toy(sim), prior))
        }
    }
}

/// Hash of everything that determines the sampler trajectory.
fn fingerprint(cfg: &RunConfig, observed: &QoiMatrix, prior: &Prior) -> Result<String> {
    let mut cal = cfg.calibrate.clone();
    cal.resume = false;
    cal.smc.wall_clock_cap = None;
    let key = serde_json::json!({
        "seed": cfg.seed,
        "model": cfg.model.resolve()?,
        "calibrate": cal,
        "prior": prior,
        "observed": observed,
    });
    Ok(hex_digest(serde_json::to_string(&key)?.as_bytes()))
}

#[derive(Serialize)]
struct PosteriorSummary {
    stop: StopReason,
    iterations: usize,
    simulations: u64,
    epsilon: Option<f64>,
    parameters: Vec<ParameterSummary>,
}

#[derive(Serialize)]
struct ParameterSummary {
    name: String,
    mean: f64,
    q05: f64,
    median: f64,
    q95: f64,
    degenerate: Option<f64>,
}

#[derive(Serialize)]
struct Diagnostics {
    distance: neurocal_core::distances::DistanceSpec,
    /// Per-column scales applied to data and simulations before the
    /// distance, frozen from the observed data. `None` when disabled.
    standardization_scales: Option<Vec<f64>>,
    standardization_note: &'static str,
    race_cap: u32,
    acceptance_ratio: &'static str,
    budget_unit: &'static str,
}

pub fn calibrate(cfg: &RunConfig, exec: &RayonExecutor) -> Result<SmcRun> {
    let cc = &cfg.calibrate;
    let path = cc
        .observed
        .as_ref()
        .ok_or_else(|| invalid("calibrate.observed (--observed) is required"))?;
    let observed = read_qoi(path).map_err(|e| invalid(format!("{e:#}")))?;
    let (problem, prior) = build_problem(cfg, &observed)?;
    let sim = problem.simulator();
    prior
        .validate()
        .map_err(|e| invalid(format!("calibrate.prior: {e}")))?;
    if prior.dim() != sim.dim_theta() {
        return Err(invalid(format!(
            "prior has {} parameters, the model takes {}",
            prior.dim(),
            sim.dim_theta()
        ))
        .into());
    }
    cc.smc
        .validate()
        .map_err(|e| invalid(format!("calibrate.smc: {e}")))?;
    let mut out = Outputs::new(&cfg.out)?;
    let fp = fingerprint(cfg, &observed.matrix, &prior)?;
    let resume = if cc.resume {
        load_checkpoint(&cfg.out, &fp)?
    } else {
        None
    };
    if let Some(s) = &resume {
        info!(
            "resuming after iteration {} ({} simulations)",
            s.iteration, s.simulations
        );
    }
    out.path(TRACE_FILE)?;
    out.path(CHECKPOINT_FILE)?;
    let mut writer = TraceWriter::create(&cfg.out, &fp, resume.as_ref())?;
    let started = Instant::now();
    let cap = cc.smc.wall_clock_cap;
    let mut io_error = None;
    let mut observer = |state: &SmcState| {
        if let Some(r) = state.records.last() {
            info!(
                "iteration {}: epsilon {} ess {:.1} acceptance {} simulations {}",
                r.iteration,
                r.epsilon.map_or("inf".to_string(), |e| format!("{e:.6}")),
                r.ess,
                r.acceptance_rate
                    .map_or("-".to_string(), |a| format!("{a:.3}")),
                r.simulations
            );
        }
        if let Err(e) = writer.record(state) {
            io_error = Some(e);
            return false;
        }
        cap.is_none_or(|c| started.elapsed().as_secs_f64() < c)
    };
    let run = run_smcabc(
        &prior,
        sim,
        &observed.matrix.cloud,
        &cc.smc,
        cfg.seed,
        exec,
        &mut observer,
        resume,
    );
    if let Some(e) = io_error {
        return Err(e.context("writing the trace"));
    }
    let run = run?;
    write_posterior(&mut out, cfg, &prior, &run)?;
    if cc.predictive_check {
        let check = predictive_check(
            &run.state.particles,
            sim,
            &observed.matrix,
            cc.smc.sims_per_param,
            cfg.seed,
            exec,
            cc.kde_resolution,
        )?;
        write_predictive(&mut out, &check)?;
    }
    let scales = neurocal_core::distances::Discrepancy::new(
        cc.smc.distance.clone(),
        &observed.matrix.cloud,
    )?
    .scales()
    .map(<[f64]>::to_vec);
    out.write_json(
        "diagnostics.json",
        &Diagnostics {
            distance: cc.smc.distance.clone(),
            standardization_scales: scales,
            standardization_note: "every QoI column is divided by the observed data's population std",
            race_cap: cc.smc.race_cap(),
            acceptance_ratio: "min(1, (N-1)/(N'-1)) with N, N' the race lengths of the current and proposed parameters",
            budget_unit: "simulated rows",
        },
    )?;
    out.finish("calibrate", cfg, exec.workers())?;
    if run.stop == StopReason::Interrupted {
        return Err(Interrupted(format!(
            "stopped after iteration {}; rerun with --resume to continue",
            run.state.iteration
        ))
        .into());
    }
    Ok(run)
}

fn write_posterior(out: &mut Outputs, cfg: &RunConfig, prior: &Prior, run: &SmcRun) -> Result<()> {
    let state = &run.state;
    let mut header: Vec<&str> = prior.names.iter().map(String::as_str).collect();
    header.extend(["weight", "distance"]);
    let p = out.path("particles.csv")?;
    write_rows(
        &p,
        &header,
        state.particles.iter().map(|pt| {
            let mut r: Vec<String> = pt.theta.iter().map(f64::to_string).collect();
            r.push(pt.weight.to_string());
            r.push(pt.distance.to_string());
            r
        }),
    )?;
    let marginals = kde_marginals(&state.particles, &prior.names, cfg.calibrate.kde_resolution);
    let p = out.path("kde.csv")?;
    write_rows(
        &p,
        &["parameter", "x", "density"],
        marginals.iter().flat_map(|m| {
            m.kde.iter().flat_map(move |k| {
                k.grid
                    .iter()
                    .zip(&k.density)
                    .map(move |(x, d)| vec![m.name.clone(), x.to_string(), d.to_string()])
            })
        }),
    )?;
    let mean = state.posterior_mean();
    let summary = PosteriorSummary {
        stop: run.stop,
        iterations: state.records.len(),
        simulations: state.simulations,
        epsilon: state.epsilon,
        parameters: prior
            .names
            .iter()
            .enumerate()
            .map(|(j, name)| ParameterSummary {
                name: name.clone(),
                mean: mean[j],
                q05: state.posterior_quantile(j, 0.05),
                median: state.posterior_quantile(j, 0.5),
                q95: state.posterior_quantile(j, 0.95),
                degenerate: marginals[j].degenerate,
            })
            .collect(),
    };
    out.write_json("posterior.json", &summary)
}

fn write_predictive(
    out: &mut Outputs,
    check: &neurocal_core::smcabc::PredictiveCheck,
) -> Result<()> {
    let ids: Vec<String> = (0..check.simulated.rows()).map(|i| i.to_string()).collect();
    let p = out.path("predictive_qoi.csv")?;
    write_qoi_file(&p, &ids, &check.simulated)?;
    let p = out.path("predictive_summary.csv")?;
    write_rows(
        &p,
        &["qoi", "data_mean", "data_std", "sim_mean", "sim_std"],
        check.comparisons.iter().map(|c| {
            vec![
                c.label.clone(),
                c.data_mean.to_string(),
                c.data_std.to_string(),
                c.sim_mean.to_string(),
                c.sim_std.to_string(),
            ]
        }),
    )?;
    let p = out.path("predictive_density.csv")?;
    write_rows(
        &p,
        &["qoi", "x", "data_density", "sim_density"],
        check.comparisons.iter().flat_map(|c| {
            c.grid.iter().enumerate().map(move |(i, x)| {
                vec![
                    c.label.clone(),
                    x.to_string(),
                    opt(c.data_density.as_ref().map(|d| d[i])),
                    opt(c.sim_density.as_ref().map(|d| d[i])),
                ]
            })
        }),
    )?;
    let p = out.path("predictive_histogram.csv")?;
    write_rows(
        &p,
        &["qoi", "left", "right", "density"],
        check.comparisons.iter().flat_map(|c| {
            let h = &c.histogram;
            h.density.iter().enumerate().map(move |(i, d)| {
                vec![
                    c.label.clone(),
                    h.edges[i].to_string(),
                    h.edges[i + 1].to_string(),
                    d.to_string(),
                ]
            })
        }),
    )
}

pub fn sensitivity(cfg: &RunConfig, exec: &RayonExecutor) -> Result<SaOutput> {
    let sc = &cfg.sensitivity;
    let (sa, space) = match sc.target {
        SensitivityTarget::Growth => {
            if sc.selection.is_empty() {
                return Err(invalid("sensitivity.selection must not be empty").into());
            }
            let space = sc.space.clone().unwrap_or_else(ParamSpace::growth_default);
            let sim = GrowthSimulator::new(cfg.model.resolve()?, sc.selection.clone());
            (
                run_sa(
                    &sim,
                    &space,
                    sc.n_base,
                    sc.replicates,
                    cfg.seed,
                    sc.seed_scheme,
                    exec,
                )?,
                space,
            )
        }
        SensitivityTarget::Ishigami => {
            let space = sc.space.clone().unwrap_or_else(Ishigami::space);
            (
                run_sa(
                    &Ishigami::default(),
                    &space,
                    sc.n_base,
                    sc.replicates,
                    cfg.seed,
                    sc.seed_scheme,
                    exec,
                )?,
                space,
            )
        }
    };
    if let Some(req) = sa.design.requested {
        warn!("n_base {req} rounded up to {}", sa.design.n_base);
    }
    let mut out = Outputs::new(&cfg.out)?;
    let d = space.dim();
    let block = sa.design.block();
    let kind = |r: usize| match r % block {
        0 => "A".to_string(),
        k if k <= d => format!("AB_{}", space.names[k - 1]),
        k if k <= 2 * d => format!("BA_{}", space.names[k - d - 1]),
        _ => "B".to_string(),
    };
    let mut header = vec!["row", "base", "block"];
    header.extend(space.names.iter().map(String::as_str));
    header.extend(["qoi", "expectation"]);
    let p = out.path("sa_raw.csv")?;
    let (labels_ref, outputs) = (&sa.qoi_labels, &sa.outputs);
    write_rows(
        &p,
        &header,
        sa.design.rows.iter().enumerate().flat_map(|(r, theta)| {
            let kind = kind(r);
            labels_ref.iter().enumerate().map(move |(q, label)| {
                let mut row = vec![r.to_string(), (r / block).to_string(), kind.clone()];
                row.extend(theta.iter().map(f64::to_string));
                row.push(label.clone());
                row.push(outputs[r][q].to_string());
                row
            })
        }),
    )?;
    let p = out.path("sa_indices.csv")?;
    write_rows(
        &p,
        &["parameter", "qoi", "s1", "s1_ci", "s_tot", "s_tot_ci"],
        sa.result.entries.iter().map(|e| {
            vec![
                e.parameter.clone(),
                e.qoi.clone(),
                opt(e.s1),
                opt(e.s1_ci),
                opt(e.s_tot),
                opt(e.s_tot_ci),
            ]
        }),
    )?;
    out.write_json(
        "sa_meta.json",
        &serde_json::json!({
            "n_base": sa.design.n_base,
            "n_base_requested": sa.design.requested,
            "replicates": sc.replicates,
            "seed_scheme": sc.seed_scheme,
            "first_order_estimator": sa.result.first_order_estimator,
            "total_estimator": sa.result.total_estimator,
            "ci_method": sa.result.ci_method,
            "ci_level": 0.95,
            "space": space,
        }),
    )?;
    out.finish("sensitivity", cfg, exec.workers())?;
    Ok(sa)
}

pub fn pair(cfg: &RunConfig, workers: usize) -> Result<()> {
    let pc = &cfg.pair;
    let dp = pc
        .data
        .as_ref()
        .ok_or_else(|| invalid("pair.data (--data) is required"))?;
    let sp = pc
        .sim
        .as_ref()
        .ok_or_else(|| invalid("pair.sim (--sim) is required"))?;
    let data = read_qoi(dp).map_err(|e| invalid(format!("{e:#}")))?;
    let sim = read_qoi(sp).map_err(|e| invalid(format!("{e:#}")))?;
    let pairs = pair_neurons(&data.matrix, &sim.matrix)?;
    let mut out = Outputs::new(&cfg.out)?;
    let p = out.path("pairs.csv")?;
    write_rows(
        &p,
        &["data_id", "sim_id", "distance"],
        pairs.iter().map(|q| {
            vec![
                data.ids[q.data].clone(),
                sim.ids[q.sim].clone(),
                q.distance.to_string(),
            ]
        }),
    )?;
    out.finish("pair", cfg, workers)
}

pub fn study(cfg: &RunConfig, exec: &RayonExecutor) -> Result<()> {
    let sc = &cfg.wasserstein_study;
    if sc.dims.is_empty() || sc.sizes.is_empty() || sc.repetitions == 0 {
        return Err(invalid("wasserstein_study needs dims, sizes and repetitions >= 1").into());
    }
    if sc.dims.contains(&0) || sc.sizes.contains(&0) {
        return Err(invalid("wasserstein_study dims and sizes must be >= 1").into());
    }
    let rows = wasserstein_study(&sc.dims, &sc.sizes, sc.repetitions, cfg.seed, exec)?;
    let mut out = Outputs::new(&cfg.out)?;
    let p = out.path("study_rows.csv")?;
    write_rows(
        &p,
        &[
            "dim",
            "n",
            "repetition",
            "empirical",
            "oracle",
            "relative_error",
        ],
        rows.iter().map(|r| {
            vec![
                r.dim.to_string(),
                r.n.to_string(),
                r.repetition.to_string(),
                r.empirical.to_string(),
                r.oracle.to_string(),
                r.relative_error.to_string(),
            ]
        }),
    )?;
    let p = out.path("study_summary.csv")?;
    write_rows(
        &p,
        &["dim", "n", "median_relative_error"],
        summarize(&rows).iter().map(|s| {
            vec![
                s.dim.to_string(),
                s.n.to_string(),
                s.median_relative_error.to_string(),
            ]
        }),
    )?;
    out.finish("wasserstein-study", cfg, exec.workers())
}
