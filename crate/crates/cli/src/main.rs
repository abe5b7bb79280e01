use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use log::{info, warn};

use snse_core::config::{Config, Setup};
use snse_core::integrator::{simulate, RunSpec};
use snse_core::measure::{run_invariant, InvariantPlan};
use snse_core::output;
use snse_core::tolerances::BLOWUP_MAX_FRACTION;
use snse_core::verify::{self, VerifyContext, CHECK_NAMES};
use snse_core::Error;

mod plot;

#[derive(Parser, Debug)]
#[command(name = "snse", version, about = "Stochastic Navier-Stokes spectral simulator and verification lab")]
struct Cli {
    /// Configuration file.
    #[arg(long, global = true, env = "SNSE_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides `noise.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one trajectory and write `trajectory.csv` and `metadata.txt`.
    Simulate,
    /// Build empirical measures and write `measure.csv`, `tightness.csv`
    /// and `stabilization.csv`.
    Invariant,
    /// Run named checks and write `verify_report.txt` and `verify_report.csv`.
    Verify {
        /// Comma-separated check names; all checks when omitted.
        #[arg(long, value_delimiter = ',')]
        checks: Vec<String>,
    },
    /// Render SVG plots from CSV outputs.
    Plot {
        /// CSV files written by the other commands.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

/// Exit code for completed runs whose checks or experiments failed.
const EXIT_FAILED_CHECK: u8 = 2;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED_CHECK),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let path = cli.config.as_ref().context("--config is required for this command")?;
    let mut config = Config::load(path).with_context(|| format!("reading {}", path.display()))?;
    config.apply_env(std::env::vars())?;
    if let Some(seed) = cli.seed {
        config.set("noise.seed", &seed.to_string())?;
    }
    Ok(config)
}

fn out_dir(cli: &Cli, config: Option<&Config>) -> Result<PathBuf> {
    let dir = match (&cli.out, config) {
        (Some(d), _) => d.clone(),
        (None, Some(c)) => PathBuf::from(c.raw("output.dir")?),
        (None, None) => PathBuf::from("out"),
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    info!("wrote {}", path.display());
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match &cli.command {
        Command::Simulate => cmd_simulate(cli),
        Command::Invariant => cmd_invariant(cli),
        Command::Verify { checks } => cmd_verify(cli, checks),
        Command::Plot { inputs } => {
            let dir = out_dir(cli, None)?;
            for input in inputs {
                let written = plot::plot_csv(input, &dir)?;
                println!("{}", written.display());
            }
            Ok(true)
        }
    }
}

fn metadata(setup: &Setup) -> Result<String> {
    let mut s = output::header(&setup.hash, setup.seed);
    s.push_str(&format!("backend={}\n", setup.model.bilinear.tag()));
    s.push_str(&format!("N={}\nm={}\n", setup.model.n(), setup.params.m()));
    s.push_str(&format!("eta={:.12e}\neta_mc_lower={:.12e}\n", setup.eta.certified, setup.eta.mc_lower));
    s.push_str(&format!("alpha={:.12e}\n", setup.alpha));
    let k = RunSpec {
        cfg: &setup.cfg,
        model: &setup.model,
        params: &setup.params,
        alpha: setup.alpha,
        eta: setup.eta.certified,
        seed: setup.seed,
        trajectory: 0,
        config_hash: &setup.hash,
    }
    .constants();
    s.push_str(&format!("c={:.12e}\nc_prime={:.12e}\n", k.c, k.c_prime));
    for (key, value) in setup.config.effective()? {
        s.push_str(&format!("{key}={value}\n"));
    }
    Ok(s)
}

fn cmd_simulate(cli: &Cli) -> Result<bool> {
    let config = load_config(cli)?;
    let dir = out_dir(cli, Some(&config))?;
    let setup = Setup::new(config)?;
    write(&dir, "metadata.txt", &metadata(&setup)?)?;
    let spec = RunSpec {
        cfg: &setup.cfg,
        model: &setup.model,
        params: &setup.params,
        alpha: setup.alpha,
        eta: setup.eta.certified,
        seed: setup.seed,
        trajectory: 0,
        config_hash: &setup.hash,
    };
    let (record, failure) = match simulate(&setup.u0, &spec) {
        Ok(r) => (r, None),
        Err(Error::BlowUp { t, partial: Some(p) }) => (*p, Some(t)),
        Err(e) => return Err(e.into()),
    };
    write(&dir, "trajectory.csv", &output::trajectory_csv(&record))?;
    if setup.config.bool("output.binary_dump")? {
        let path = dir.join("coefficients.bin");
        let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        output::write_coefficients(&record, setup.params.m(), std::io::BufWriter::new(file))?;
    }
    if let Some(t) = failure {
        bail!("blow-up at t={t}; partial trajectory written");
    }
    println!("simulated {} records, hash {}", record.len(), setup.hash);
    Ok(true)
}

fn cmd_invariant(cli: &Cli) -> Result<bool> {
    let config = load_config(cli)?;
    let dir = out_dir(cli, Some(&config))?;
    let setup = Setup::new(config)?;
    let schema = setup.config.observables(setup.model.n())?;
    let c = &setup.config;
    let horizon = setup.cfg.horizon;
    let horizons = match c.raw("measure.horizons")?.as_str() {
        "auto" => vec![horizon / 8.0, horizon / 4.0, horizon / 2.0, horizon],
        _ => c.list("measure.horizons")?,
    };
    let plan = InvariantPlan {
        spec: RunSpec {
            cfg: &setup.cfg,
            model: &setup.model,
            params: &setup.params,
            alpha: setup.alpha,
            eta: setup.eta.certified,
            seed: setup.seed,
            trajectory: 0,
            config_hash: &setup.hash,
        },
        u0: &setup.u0,
        trajectories: c.usize("measure.trajectories")?,
        horizons,
        burn_in: c.auto_f64("measure.burn_in")?,
        schema,
        p: c.f64("measure.p")?,
        shift: c.f64("measure.shift")?,
        max_samples: c.usize("measure.max_samples")?,
    };
    let result = run_invariant(&plan)?;
    let mu = result.measures.last().expect("at least one horizon");
    write(&dir, "metadata.txt", &metadata(&setup)?)?;
    write(&dir, "measure.csv", &output::measure_csv(mu, &setup.hash, setup.seed))?;
    write(&dir, "tightness.csv", &output::tightness_csv(&result.tightness, &setup.hash, setup.seed))?;
    write(
        &dir,
        "stabilization.csv",
        &output::stabilization_csv(&result.rows, &setup.hash, setup.seed),
    )?;
    let t = &result.tightness;
    println!(
        "tail exponent {:.3} +/- {:.3}, Markov dominance {}, blow-ups {}/{}",
        t.tail_exponent,
        t.tail_exponent_band,
        t.markov_holds(),
        result.blow_ups,
        result.runs
    );
    if result.blowup_fraction() > BLOWUP_MAX_FRACTION {
        warn!("blow-up fraction {:.3} exceeds {BLOWUP_MAX_FRACTION}", result.blowup_fraction());
        return Ok(false);
    }
    Ok(true)
}

fn cmd_verify(cli: &Cli, checks: &[String]) -> Result<bool> {
    let names: Vec<String> = if checks.is_empty() {
        CHECK_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        checks.to_vec()
    };
    verify::validate_names(&names)?;
    let config = load_config(cli)?;
    let dir = out_dir(cli, Some(&config))?;
    let setup = Setup::new(config)?;
    let ctx = VerifyContext::from_setup(&setup)?;
    let reports = verify::run_checks(&names, &ctx)?;
    let mut text = output::header(&setup.hash, setup.seed);
    for r in &reports {
        text.push_str(&r.to_text());
    }
    write(&dir, "verify_report.txt", &text)?;
    write(
        &dir,
        "verify_report.csv",
        &(output::header(&setup.hash, setup.seed) + &verify::report_csv(&reports)),
    )?;
    for r in &reports {
        println!("{} {}", r.status(), r.name);
    }
    Ok(reports.iter().all(|r| r.passed))
}
