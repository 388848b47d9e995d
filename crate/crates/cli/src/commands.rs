use std::fs;
use std::path::{Path, PathBuf};

use amopt::balance::{check_checkpoint_window, default_checkpoints, BalanceExperiment, ProbeReport};
use amopt::pde::{solve_obstacle, SpatialGrid};
use amopt::sde::TimeGrid;
use amopt::snell::{run_campaign, tree_from_market};
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::{classify, CliError};
use crate::golden::{read_json, to_pretty_json, BinomialGolden, Thresholds};

pub struct Context {
    pub config: RunConfig,
    pub out: PathBuf,
    pub quiet: bool,
    pub recalibrate: bool,
}

impl Context {
    fn say(&self, line: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", line.as_ref());
        }
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        fs::create_dir_all(&self.out)?;
        fs::write(self.out.join(name), bytes)?;
        Ok(())
    }

    fn ensure_recalibration_allowed(&self) -> Result<(), CliError> {
        if std::env::var_os("CI").is_some() {
            return Err(CliError::Config("--recalibrate refuses to run when CI is set".into()));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct PriceOutput<'a> {
    s0: &'a [f64],
    v0: f64,
}

pub fn price(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let model = cfg.build_model()?;
    let payoff = cfg.build_payoff()?;
    let g = cfg.grid_section()?;
    let s0 = &cfg.model_section()?.s0;
    let grid = SpatialGrid::around(&model, s0, &vec![g.space_nodes; model.n()], g.margin, g.time_steps).map_err(classify)?;
    let surface = solve_obstacle(&model, &payoff, &grid, &g.psor).map_err(classify)?;
    let v0 = surface.eval_v(0.0, s0).map_err(classify)?;
    println!("{v0:?}");

    if cfg.wants(Format::Csv) {
        let mut csv = Vec::new();
        surface.write_csv(&mut csv).map_err(classify)?;
        ctx.write("surface.csv", &csv)?;
    }
    if cfg.wants(Format::Json) {
        let mut json = Vec::new();
        surface.write_report_json(&mut json).map_err(classify)?;
        ctx.write("solver_report.json", &json)?;
        ctx.write("price.json", &to_pretty_json(&PriceOutput { s0, v0 }))?;
    }

    let Some(path) = cfg.thresholds.as_ref().and_then(|t| t.binomial_golden.as_ref().map(|p| (p, t.binomial_steps))) else {
        if ctx.recalibrate {
            return Err(CliError::Config("--recalibrate needs [thresholds] binomial_golden".into()));
        }
        return Ok(());
    };
    let (golden_path, steps) = (cfg.resolve(path.0), path.1);
    if ctx.recalibrate {
        ctx.ensure_recalibration_allowed()?;
        let lattice = tree_from_market::<f64, f64>(&model, steps, s0[0], &payoff, 1 << 52).map_err(classify)?;
        let golden = BinomialGolden { steps, s0: s0[0], value: lattice.root_value() };
        fs::write(&golden_path, to_pretty_json(&golden))?;
        ctx.say(format!("wrote {}", golden_path.display()));
        return Ok(());
    }
    let golden: BinomialGolden = read_json(&golden_path)?;
    let rel = (v0 - golden.value).abs() / golden.value.abs();
    ctx.say(format!("binomial reference {} ({} steps), relative difference {rel:.3e}", golden.value, golden.steps));
    if !(rel <= 0.005) {
        return Err(CliError::Threshold(format!("value {v0} differs from the binomial reference {} by {rel:.3e}", golden.value)));
    }
    Ok(())
}

fn checkpoint_indices(cfg: &RunConfig, time: &TimeGrid<f64>) -> Result<Vec<usize>, CliError> {
    let horizon = time.end();
    let indices = match &cfg.mc_section()?.checkpoints {
        None => default_checkpoints(time),
        Some(times) => times
            .iter()
            .map(|&t| {
                if !(0.0..=horizon).contains(&t) {
                    return Err(CliError::Config(format!("[mc] checkpoint {t} outside [0, {horizon}]")));
                }
                Ok(time.nearest_index(t))
            })
            .collect::<Result<_, _>>()?,
    };
    check_checkpoint_window(&indices, time.steps()).map_err(|e| CliError::Config(format!("[mc] {e}")))?;
    Ok(indices)
}

fn probes_csv(probes: &ProbeReport) -> Vec<u8> {
    let mut out = String::from("field,t,mean,std,max_abs,ratio\n");
    let rows = std::iter::once((&probes.baseline, None)).chain(probes.probes.iter().map(|p| (&p.report, Some(&p.ratios))));
    for (report, ratios) in rows {
        for (i, c) in report.checkpoints.iter().enumerate() {
            let ratio = ratios.map_or(1.0, |r| r[i]);
            out.push_str(&format!("{},{},{},{},{},{}\n", report.config.field, c.t, c.mean, c.std, c.max_abs, ratio));
        }
    }
    out.into_bytes()
}

pub fn verify_balance(ctx: &Context) -> Result<(), CliError> {
    let cfg = &ctx.config;
    let model = cfg.build_model()?;
    let payoff = cfg.build_payoff()?;
    let g = cfg.grid_section()?;
    let (paths, seed) = cfg.mc_seed()?;
    let time = TimeGrid::new(0.0, model.horizon(), g.time_steps).map_err(classify)?;
    let checkpoints = checkpoint_indices(cfg, &time)?;
    let experiment = BalanceExperiment {
        model,
        payoff,
        s0: cfg.model_section()?.s0.clone(),
        space_nodes: g.space_nodes,
        margin: g.margin,
        time_steps: g.time_steps,
        n_paths: paths,
        seed,
        psor: g.psor,
        checkpoints: Some(checkpoints),
        perturbations: cfg.perturbations(),
        compensator_scale: cfg.mc_section()?.compensator_scale,
    };
    if ctx.recalibrate && cfg.thresholds.is_none() {
        return Err(CliError::Config("--recalibrate needs a [thresholds] section".into()));
    }
    let surface = experiment.solve().map_err(classify)?;
    if let Some(bound) = cfg.probe_bound() {
        for field in &experiment.perturbations {
            field.check_bounded(&surface, bound).map_err(|e| CliError::Config(format!("[probe] {e}")))?;
        }
    }
    let outcome = experiment.run_on(surface).map_err(classify)?;
    let report = &outcome.balance.report;
    let report_json = to_pretty_json(report);

    if cfg.wants(Format::Json) {
        ctx.write("balance.json", &report_json)?;
        ctx.write("probes.json", &to_pretty_json(&outcome.probes))?;
        ctx.write("compensator.json", &to_pretty_json(&outcome.compensator))?;
    }
    if cfg.wants(Format::Csv) {
        let mut csv = Vec::new();
        report.write_csv(&mut csv).map_err(classify)?;
        ctx.write("balance.csv", &csv)?;
        ctx.write("probes.csv", &probes_csv(&outcome.probes))?;
    }

    ctx.say(format!("paths: {paths}  seed: {seed}  dt: {}", report.config.dt));
    for (i, c) in report.checkpoints.iter().enumerate() {
        ctx.say(format!(
            "t = {:.4}  mean = {:+.6}  se = {:.6}  std = {:.6}  max|R| = {:.6}  arg-max stop fraction = {:.3}",
            c.t,
            c.mean,
            report.stderr(i),
            c.std,
            c.max_abs,
            c.argmax_at_t_fraction
        ));
    }
    for p in &outcome.probes.probes {
        let ratios: Vec<String> = p.ratios.iter().map(|r| format!("{r:.3}")).collect();
        ctx.say(format!("probe {}: dispersion ratios [{}]", p.field, ratios.join(", ")));
    }
    ctx.say(format!(
        "compensator: {} of {} increments above {:.3e} (fraction {:.5})",
        outcome.compensator.exceedances, outcome.compensator.increments, outcome.compensator.tolerance, outcome.compensator.fraction
    ));

    let Some(th) = &cfg.thresholds else { return Ok(()) };
    if ctx.recalibrate {
        ctx.ensure_recalibration_allowed()?;
        if let Some(file) = &th.file {
            let frozen = Thresholds::calibrate(report, &outcome.probes, &outcome.compensator);
            fs::write(cfg.resolve(file), to_pretty_json(&frozen))?;
            ctx.say(format!("wrote {}", cfg.resolve(file).display()));
        }
        if let Some(golden) = &th.golden_report {
            fs::write(cfg.resolve(golden), &report_json)?;
            ctx.say(format!("wrote {}", cfg.resolve(golden).display()));
        }
        return Ok(());
    }
    let mut breaches = Vec::new();
    if let Some(file) = &th.file {
        let frozen: Thresholds = read_json(&cfg.resolve(file))?;
        breaches.extend(frozen.check(report));
        let below = frozen.check_probes(&outcome.probes);
        if below.is_empty() {
            ctx.say("probe floors: pass");
        } else {
            ctx.say(format!("probe floors (informative): {}", below.join("; ")));
        }
    }
    if let Some(golden) = &th.golden_report {
        let path = cfg.resolve(golden);
        let expected = fs::read(&path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if expected != report_json {
            breaches.push(format!("balance report differs from {}", path.display()));
        }
    }
    if breaches.is_empty() {
        ctx.say("thresholds: pass");
        Ok(())
    } else {
        Err(CliError::Threshold(breaches.join("; ")))
    }
}

pub fn snell_check(ctx: &Context) -> Result<(), CliError> {
    let campaign = ctx.config.campaign()?;
    let report = run_campaign(&campaign);
    if ctx.config.wants(Format::Json) {
        ctx.write("snell_check.json", &to_pretty_json(&report))?;
    }
    ctx.say(format!("trees: {}", report.trees));
    ctx.say(format!("nodes: {}", report.nodes));
    ctx.say(format!("oracle trees: {}  oracle nodes: {}", report.oracle_trees, report.oracle_nodes));
    ctx.say(format!("uniqueness probes: {}  predictable: {}", report.probes, report.predictable_probes));
    println!("violations: {}", report.violations.len());
    if let Some(first) = report.violations.first() {
        println!("{}", String::from_utf8_lossy(&to_pretty_json(first)));
        return Err(CliError::Identity(format!("{} on tree {} ({} violations)", first.check, first.tree, report.violations.len())));
    }
    Ok(())
}

pub fn output_dir(cfg: &RunConfig, flag: Option<&Path>) -> PathBuf {
    flag.map_or_else(|| cfg.output.directory.clone(), Path::to_path_buf)
}
