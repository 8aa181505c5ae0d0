//! Command line front end. `run` parses arguments, dispatches a subcommand
//! and maps the outcome to an exit code: 0 success, 1 failed runs or tests,
//! 2 configuration errors.

pub mod config;
pub mod experiment;
pub mod plan;
pub mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use regula_core::mutation::{generate_mutants, mutants_to_json, run_mutation_testing};
use regula_core::schema::{Sampler, SamplerConfig, SchemaDocument};
use regula_core::service::{server, FaultProfile, Service};
use regula_core::stats::{Correction, StatConfig};
use regula_core::testgen::{
    emit_suite, load_suite, log_to_jsonl, replay_suite, run_campaign, CampaignConfig, CampaignError, Http,
    InProcess, Strategy, Transport, Verdict,
};
use regula_core::{Catalog, SchemaMode};

use crate::config::PlanOverrides;
use crate::plan::TransportKind;

#[derive(Debug, Parser)]
#[command(name = "regula", version, about = "Rule engine service, test generation and mutation analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct ManifestArg {
    /// Rule-set manifest (JSON).
    #[arg(long, default_value = "corpus/manifest.json")]
    pub manifest: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Serve the rules API over HTTP.
    Serve {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = 8080)]
        port: u16,
        /// Seed of the fault injection stream.
        #[arg(long, env = "REGULA_SEED", default_value_t = 0)]
        seed: u64,
        /// Fault profile, `io:<p>` or `internal:<p>[:<variable>]`.
        #[arg(long)]
        inject: Option<FaultProfile>,
        /// Schema mode the service enforces on request bodies.
        #[arg(long, default_value = "default")]
        mode: SchemaMode,
    },
    /// Print sampled records as JSON lines.
    Sample {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long, env = "REGULA_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "default")]
        mode: SchemaMode,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        absent_probability: Option<f64>,
        #[arg(long)]
        invalid_probability: Option<f64>,
    },
    /// Run one test generation campaign and write its suite.
    Generate(GenerateArgs),
    /// Replay a suite and print one verdict per test.
    Replay {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        suite: PathBuf,
        /// Replay against a running service instead of an in-process one.
        #[arg(long)]
        url: Option<String>,
    },
    /// Write every mutant of a rule-set version as JSON.
    Mutants {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        version: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mutation-test a suite against every mutant of its version.
    Muttest {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        suite: PathBuf,
        /// Full report with the kill matrix.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Scores per operator and rule kind.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Run a full experiment plan and report on it.
    Experiment(ExperimentArgs),
    /// Build the comparison tables of a finished experiment.
    Report {
        /// Experiment directory.
        #[arg(long)]
        dir: PathBuf,
        /// Output directory; defaults to `<dir>/report`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        /// `by` (Benjamini-Yekutieli) or `bh` (Benjamini-Hochberg).
        #[arg(long, default_value = "by", value_parser = parse_correction)]
        correction: Correction,
    },
    /// Print the request schema document of a version.
    Schema {
        #[command(flatten)]
        manifest: ManifestArg,
        #[arg(long)]
        version: String,
        #[arg(long, default_value = "default")]
        mode: SchemaMode,
    },
}

fn parse_correction(s: &str) -> Result<Correction, String> {
    match s {
        "by" => Ok(Correction::BenjaminiYekutieli),
        "bh" => Ok(Correction::BenjaminiHochberg),
        other => Err(format!("unknown correction `{other}` (expected by|bh)")),
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub manifest: ManifestArg,
    #[arg(long)]
    pub version: String,
    #[arg(long, default_value = "EVOGURI")]
    pub strategy: Strategy,
    #[arg(long, default_value_t = 10_000)]
    pub budget: u64,
    #[arg(long, env = "REGULA_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "default")]
    pub mode: SchemaMode,
    /// Suite file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Campaign log (JSON lines) to write.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Target a running service instead of an in-process one.
    #[arg(long)]
    pub url: Option<String>,
    #[arg(long)]
    pub p_fresh: Option<f64>,
    #[arg(long)]
    pub population_cap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Plan file (TOML or JSON); flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "experiment")]
    pub out: PathBuf,
    #[arg(long, value_delimiter = ',')]
    pub strategies: Option<Vec<Strategy>>,
    #[arg(long, value_delimiter = ',')]
    pub versions: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub modes: Option<Vec<SchemaMode>>,
    #[arg(long)]
    pub repetitions: Option<usize>,
    #[arg(long)]
    pub budget: Option<u64>,
    /// Master seed; beats both the plan file and `REGULA_SEED`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sub-runs executed concurrently.
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, value_enum)]
    pub transport: Option<TransportKind>,
    /// Skip mutation testing of the generated suites.
    #[arg(long)]
    pub no_mutation: bool,
    /// Frequency profile to compare every run against.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
}

impl ExperimentArgs {
    fn overrides(&self) -> PlanOverrides {
        PlanOverrides {
            manifest: self.manifest.clone(),
            strategies: self.strategies.clone(),
            versions: self.versions.clone(),
            modes: self.modes.clone(),
            repetitions: self.repetitions,
            budget: self.budget,
            seed: self.seed,
            jobs: self.jobs,
            transport: self.transport,
            mutation: self.no_mutation.then_some(false),
            baseline: self.baseline.clone(),
        }
    }
}

/// Why a command did not succeed.
#[derive(Debug)]
pub enum Failure {
    /// Bad input or configuration; exit status 2.
    Config(String),
    /// The command ran but some run or test failed; exit status 1.
    Run(String),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Run(_) => 1,
        }
    }
}

fn config<E: std::fmt::Display>(e: E) -> Failure {
    Failure::Config(e.to_string())
}

fn load_catalog(manifest: &Path) -> Result<Arc<Catalog>, Failure> {
    Catalog::load(manifest).map(Arc::new).map_err(config)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Run(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Run(e.to_string())),
    }
}

pub fn execute(command: Command) -> Result<(), Failure> {
    match command {
        Command::Serve {
            manifest,
            host,
            port,
            seed,
            inject,
            mode,
        } => {
            let catalog = load_catalog(&manifest.manifest)?;
            let mut service = Service::new(catalog, mode);
            if let Some(profile) = inject {
                service = service.with_injection(profile, seed);
            }
            let handle = server::spawn(Arc::new(service), (host, port).into())
                .map_err(|e| Failure::Run(format!("binding {host}:{port}: {e}")))?;
            eprintln!("listening on {}", handle.base_url());
            handle.wait().map_err(|e| Failure::Run(e.to_string()))
        }
        Command::Sample {
            manifest,
            seed,
            mode,
            count,
            absent_probability,
            invalid_probability,
        } => {
            let catalog = load_catalog(&manifest.manifest)?;
            let mut cfg = SamplerConfig::new(seed, mode);
            cfg = cfg
                .with_probabilities(
                    absent_probability.unwrap_or(cfg.absent_probability),
                    invalid_probability.unwrap_or(cfg.invalid_probability),
                )
                .map_err(config)?;
            let mut sampler = Sampler::new(&catalog.registry, cfg);
            let mut out = String::new();
            for _ in 0..count {
                out.push_str(&sampler.sample_record().to_json().to_string());
                out.push('\n');
            }
            write_out(None, &out)
        }
        Command::Generate(args) => generate(args),
        Command::Replay { manifest, suite, url } => {
            let suite = load_suite(&suite).map_err(config)?;
            let mut transport: Box<dyn Transport> = match url {
                Some(u) => Box::new(Http::new(u)),
                None => {
                    let catalog = load_catalog(&manifest.manifest)?;
                    Box::new(InProcess(Arc::new(Service::new(catalog, suite.meta.schema_mode))))
                }
            };
            let verdicts = replay_suite(&suite, transport.as_mut());
            let mut out = String::new();
            for (i, v) in verdicts.iter().enumerate() {
                let line = match v {
                    Verdict::Pass => "pass".to_string(),
                    Verdict::Fail => "fail".to_string(),
                    Verdict::Error(e) => format!("error: {e}"),
                };
                out.push_str(&format!("{i}\t{line}\n"));
            }
            write_out(None, &out)?;
            let bad = verdicts.iter().filter(|v| **v != Verdict::Pass).count();
            if bad > 0 {
                return Err(Failure::Run(format!("{bad} of {} tests did not pass", verdicts.len())));
            }
            Ok(())
        }
        Command::Mutants { manifest, version, out } => {
            let catalog = load_catalog(&manifest.manifest)?;
            let v = catalog
                .version(&version)
                .ok_or_else(|| Failure::Config(format!("unknown version `{version}`")))?;
            write_out(out.as_deref(), &mutants_to_json(&generate_mutants(v)))
        }
        Command::Muttest {
            manifest,
            suite,
            out,
            csv,
        } => {
            let catalog = load_catalog(&manifest.manifest)?;
            let suite = load_suite(&suite).map_err(config)?;
            let version = catalog
                .version(&suite.meta.version)
                .ok_or_else(|| Failure::Config(format!("unknown version `{}`", suite.meta.version)))?;
            let mutants = generate_mutants(version);
            let report = run_mutation_testing(&suite, &catalog, &mutants).map_err(config)?;
            if let Some(p) = out {
                write_out(Some(&p), &report.to_json())?;
            }
            if let Some(p) = csv {
                write_out(Some(&p), &report.to_csv())?;
            }
            let fmt = |s: Option<f64>| s.map_or("-".to_string(), |v| format!("{v:.4}"));
            println!(
                "mutants {} killed {} ms {:.4} ms-validation {} ms-aggregation {}",
                report.m_total,
                report.m_killed,
                report.ms,
                fmt(report.ms_validation),
                fmt(report.ms_aggregation)
            );
            Ok(())
        }
        Command::Experiment(args) => {
            let plan = config::resolve(
                args.config.as_deref(),
                std::env::var(config::SEED_ENV).ok(),
                args.overrides(),
            )
            .map_err(config)?;
            let summary = experiment::run_experiment(&plan, &args.out).map_err(|e| match e {
                experiment::ExperimentError::Io { .. } => Failure::Run(e.to_string()),
                other => config(other),
            })?;
            let report = report::build_report(&args.out, &StatConfig::default()).map_err(|e| Failure::Run(e.to_string()))?;
            report::write_report(&report, &args.out.join("report")).map_err(|e| Failure::Run(e.to_string()))?;
            let failed = summary.failures();
            eprintln!("{} runs, {failed} failed; results in {}", summary.runs.len(), args.out.display());
            if failed > 0 {
                return Err(Failure::Run(format!("{failed} runs failed")));
            }
            Ok(())
        }
        Command::Report {
            dir,
            out,
            alpha,
            correction,
        } => {
            let stats = StatConfig {
                alpha,
                correction,
                ..StatConfig::default()
            };
            stats.validate().map_err(config)?;
            let report = report::build_report(&dir, &stats).map_err(config)?;
            report::write_report(&report, &out.unwrap_or_else(|| dir.join("report"))).map_err(|e| Failure::Run(e.to_string()))
        }
        Command::Schema { manifest, version, mode } => {
            let catalog = load_catalog(&manifest.manifest)?;
            if catalog.version(&version).is_none() {
                return Err(Failure::Config(format!("unknown version `{version}`")));
            }
            write_out(None, &SchemaDocument::build(&catalog.registry, &version, mode).to_json())
        }
    }
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let catalog = load_catalog(&args.manifest.manifest)?;
    if catalog.version(&args.version).is_none() {
        return Err(Failure::Config(format!("unknown version `{}`", args.version)));
    }
    let mut cfg = CampaignConfig::new(args.strategy, args.budget, args.seed, args.mode, &args.version);
    if let Some(p) = args.p_fresh {
        cfg.mio.p_fresh = p;
    }
    if let Some(c) = args.population_cap {
        cfg.mio.population_cap = c;
    }
    let mut transport: Box<dyn Transport> = match &args.url {
        Some(u) => Box::new(Http::new(u.clone())),
        None => Box::new(InProcess(Arc::new(Service::new(catalog.clone(), args.mode)))),
    };
    let result = match run_campaign(&cfg, &catalog.registry, transport.as_mut()) {
        Ok(r) => r,
        Err(CampaignError::Config(e)) => return Err(Failure::Config(e)),
        Err(CampaignError::Unreachable { reason, log }) => {
            if let Some(p) = &args.log {
                write_out(Some(p), &log_to_jsonl(&log))?;
            }
            return Err(Failure::Run(format!("service unreachable: {reason}")));
        }
    };
    let suite = result.suite();
    emit_suite(&suite, &args.out).map_err(|e| Failure::Run(e.to_string()))?;
    if let Some(p) = &args.log {
        write_out(Some(p), &log_to_jsonl(&result.log))?;
    }
    eprintln!(
        "{} requests, {} targets, {} tests written to {}",
        result.log.len(),
        result.archive.covered().len(),
        suite.tests.len(),
        args.out.display()
    );
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Config(m) => eprintln!("configuration error: {m}"),
                Failure::Run(m) => eprintln!("error: {m}"),
            }
            ExitCode::from(f.exit_code())
        }
    }
}
