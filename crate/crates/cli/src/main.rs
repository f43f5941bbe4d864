use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{error::ErrorKind, CommandFactory, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use simulrag::benchgen::{self, FillOptions, SamplingRanges};
use simulrag::domain::{
    decode, encode, BackendKind, Domain, GenerationMode, ParamSettings, ParamValue, PipelineConfig, Provenance,
    Question, Seeds, SelectionStrategy,
};
use simulrag::evaluation::{self, ComparisonSpec};
use simulrag::gateway::{template_versions, Gateway};
use simulrag::pipeline::{self, AuditEntry};
use simulrag::retrieval::{self, default_template_id};
use simulrag::simulators::{handbook_for, handbook_versions, simulator_for};

#[derive(Parser)]
#[command(name = "simulrag", version, about = "Simulator-grounded question answering with claim-level verification")]
struct Cli {
    /// Pipeline configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Recorded model responses; forces the scripted backend.
    #[arg(long, global = true, value_name = "PATH")]
    fixtures: Option<PathBuf>,
    /// Seed for answer sampling, simulation, random selection and benchmark draws.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory; a run manifest is written next to it.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Answer one question through the pipeline.
    Ask {
        #[arg(long, short)]
        question: String,
        #[arg(long, value_parser = parse_domain)]
        domain: Domain,
        #[arg(long, default_value = "q1")]
        id: String,
    },
    /// Benchmark generation and statistics.
    Bench {
        #[command(subcommand)]
        command: BenchCommand,
    },
    /// Compare selectors and generation modes on a dataset.
    Eval {
        #[arg(long)]
        dataset: PathBuf,
        /// Manual labels, JSON Lines of {"claim_id", "label"}.
        #[arg(long)]
        overrides: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', value_parser = parse_strategy)]
        methods: Option<Vec<SelectionStrategy>>,
        #[arg(long, value_delimiter = ',')]
        budgets: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
        modes: Option<Vec<GenerationMode>>,
    },
    /// Entailment graph and claim confidences for one question.
    Graph {
        #[arg(long, short)]
        question: String,
        #[arg(long, value_parser = parse_domain)]
        domain: Domain,
        #[arg(long, default_value = "q1")]
        id: String,
    },
    /// Run a simulator directly and render its context.
    Simulate {
        #[arg(long, value_parser = parse_domain)]
        domain: Domain,
        /// Parameter values as a JSON object.
        #[arg(long)]
        params: String,
        #[arg(long)]
        template: Option<String>,
    },
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Generate question/answer items.
    Gen {
        #[arg(long, value_parser = parse_domain)]
        domain: Domain,
        #[arg(long, short)]
        n: usize,
        /// Sampling ranges (JSON); defaults to the built-in ranges.
        #[arg(long)]
        ranges: Option<PathBuf>,
    },
    /// Per-domain dataset statistics.
    Stats {
        #[arg(long)]
        dataset: PathBuf,
    },
    /// Derive context templates from a simulator handbook.
    Derive {
        #[arg(long, value_parser = parse_domain)]
        domain: Domain,
    },
}

fn parse_domain(s: &str) -> Result<Domain, String> {
    Domain::parse(s).ok_or_else(|| format!("unknown domain {s:?} (climate, epidemiology)"))
}

fn parse_strategy(s: &str) -> Result<SelectionStrategy, String> {
    SelectionStrategy::ALL
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| format!("unknown method {s:?}"))
}

fn parse_mode(s: &str) -> Result<GenerationMode, String> {
    GenerationMode::ALL
        .into_iter()
        .find(|m| m.as_str() == s)
        .ok_or_else(|| format!("unknown generation mode {s:?}"))
}

#[derive(Serialize)]
struct Manifest {
    command: String,
    config_digest: String,
    seeds: Seeds,
    backend: String,
    template_versions: BTreeMap<String, String>,
    handbook_versions: BTreeMap<String, String>,
    started_at: String,
    finished_at: String,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    notes: BTreeMap<String, serde_json::Value>,
}

/// Timestamp of replayable runs, so their manifests compare byte for byte.
const FIXED_TIME: &str = "1970-01-01T00:00:00Z";

struct Ctx {
    config: PipelineConfig,
    out: Option<PathBuf>,
    seed: u64,
    started_at: String,
}

impl Ctx {
    fn load(cli: &Cli) -> Result<Self> {
        let mut config = match &cli.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                decode::<PipelineConfig>(&text)?
            }
            None => PipelineConfig::default(),
        };
        if let Some(f) = &cli.fixtures {
            config.backend.kind = BackendKind::Scripted;
            config.backend.fixtures = Some(f.display().to_string());
        }
        let seed = cli.seed.unwrap_or(config.seeds.answer_sampling);
        if let Some(s) = cli.seed {
            config.seeds = Seeds {
                answer_sampling: s,
                simulator: s,
                random_selector: s,
            };
        }
        Ok(Ctx {
            started_at: now(&config),
            config,
            out: cli.out.clone(),
            seed,
        })
    }

    fn gateway(&self) -> Result<Gateway> {
        if self.config.backend.kind == BackendKind::Scripted && self.config.backend.fixtures.is_none() {
            bail!("the scripted backend needs --fixtures (or set backend.kind to offline or http in --config)");
        }
        Ok(Gateway::from_config(&self.config.backend, self.config.concurrency_limit)?)
    }

    fn out_required(&self, what: &str) -> &Path {
        match &self.out {
            Some(p) => p,
            None => Cli::command()
                .error(ErrorKind::MissingRequiredArgument, format!("{what} needs --out"))
                .exit(),
        }
    }

    /// Write `text` to --out, or print it when there is none.
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => write_file(p, text),
            None => print_stdout(text),
        }
    }

    fn manifest(&self, command: &str, notes: BTreeMap<String, serde_json::Value>) -> Result<()> {
        let Some(out) = &self.out else { return Ok(()) };
        let digest = Sha256::digest(encode(&self.config).as_bytes());
        let m = Manifest {
            command: command.to_string(),
            config_digest: hex::encode(digest),
            seeds: self.config.seeds,
            backend: format!(
                "{}:{}",
                serde_json::to_value(self.config.backend.kind)?.as_str().unwrap_or_default(),
                self.config.backend.model
            ),
            template_versions: template_versions(),
            handbook_versions: handbook_versions(),
            started_at: self.started_at.clone(),
            finished_at: now(&self.config),
            notes,
        };
        write_file(&manifest_path(out), &(serde_json::to_string_pretty(&m)? + "\n"))
    }
}

fn now(config: &PipelineConfig) -> String {
    match config.backend.kind {
        BackendKind::Scripted | BackendKind::Offline => FIXED_TIME.to_string(),
        BackendKind::Http => chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
    }
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_else(|| "out".into());
    name.push(".manifest.json");
    out.with_file_name(name)
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn pretty<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx::load(&cli)?;
    match cli.command {
        Command::Ask { question, domain, id } => {
            let gw = ctx.gateway()?;
            let q = Question::new(id, domain, question)?;
            let result = pipeline::run(&gw, &q, &ctx.config)?;
            ctx.emit(&pretty(&result)?)?;
            ctx.manifest("ask", BTreeMap::new())
        }
        Command::Graph { question, domain, id } => {
            let gw = ctx.gateway()?;
            let q = Question::new(id, domain, question)?;
            let mut config = ctx.config.clone();
            if config.generation_mode != GenerationMode::NoRag {
                config.generation_mode = GenerationMode::Simulrag;
            }
            let result = pipeline::run(&gw, &q, &config)?;
            let pick: Vec<&AuditEntry> = result
                .audit
                .iter()
                .filter(|e| matches!(e, AuditEntry::Merge { .. } | AuditEntry::Graph { .. } | AuditEntry::Scoring { .. }))
                .collect();
            ctx.emit(&pretty(&pick)?)?;
            ctx.manifest("graph", BTreeMap::new())
        }
        Command::Simulate { domain, params, template } => {
            let values: BTreeMap<String, ParamValue> =
                serde_json::from_str(&params).context("--params must be a JSON object of parameter values")?;
            let handbook = handbook_for(domain);
            let mut settings = ParamSettings {
                simulator_id: handbook.simulator_id.clone(),
                values,
                provenance: Provenance::Manual,
            };
            retrieval::normalize_settings(&mut settings, handbook);
            let template = template
                .or_else(|| default_template_id(&handbook.simulator_id).map(str::to_string))
                .ok_or_else(|| anyhow!("no template for {domain}"))?;
            let context = retrieval::run_and_contextualize(
                simulator_for(domain),
                &[settings],
                &template,
                ctx.config.seeds.simulator,
                ctx.config.ensemble_size,
            )?;
            ctx.emit(&pretty(&context)?)?;
            ctx.manifest("simulate", BTreeMap::new())
        }
        Command::Bench { command } => match command {
            BenchCommand::Gen { domain, n, ranges } => {
                let out = ctx.out_required("bench gen").to_path_buf();
                let gw = ctx.gateway()?;
                let ranges: Option<SamplingRanges> = match ranges {
                    Some(p) => Some(serde_json::from_str(&std::fs::read_to_string(&p)?)?),
                    None => None,
                };
                let options = FillOptions {
                    simulator_seed: ctx.config.seeds.simulator,
                    ensemble_size: ctx.config.ensemble_size,
                    workers: ctx.config.concurrency_limit,
                };
                let g = benchgen::generate_dataset(&gw, domain, n, ctx.seed, ranges.as_ref(), &options)?;
                for (id, reason) in &g.rejected {
                    log::warn!("{id} rejected: {reason}");
                }
                let count = benchgen::write_dataset(&g.items, &out)?;
                eprintln!("wrote {count} items to {}", out.display());
                let mut notes = BTreeMap::new();
                notes.insert("items".into(), count.into());
                notes.insert("rejected".into(), g.rejected.len().into());
                notes.insert("full_scale_items_per_domain".into(), benchgen::FULL_SCALE_ITEMS_PER_DOMAIN.into());
                ctx.manifest("bench gen", notes)
            }
            BenchCommand::Stats { dataset } => {
                let items = benchgen::read_dataset(&dataset)?;
                let stats = benchgen::dataset_stats(&items);
                match &ctx.out {
                    Some(_) => ctx.emit(&pretty(&stats)?)?,
                    None => print_stdout(&benchgen::stats_table(&stats))?,
                }
                ctx.manifest("bench stats", BTreeMap::new())
            }
            BenchCommand::Derive { domain } => {
                let out = ctx.out_required("bench derive").to_path_buf();
                let gw = ctx.gateway()?;
                let templates = benchgen::derive_templates(&gw, handbook_for(domain))?;
                benchgen::write_templates(&out, &templates)?;
                ctx.manifest("bench derive", BTreeMap::new())
            }
        },
        Command::Eval {
            dataset,
            overrides,
            methods,
            budgets,
            modes,
        } => {
            let out = ctx.out_required("eval").to_path_buf();
            let gw = ctx.gateway()?;
            let items = benchgen::read_dataset(&dataset)?;
            let overrides = match overrides {
                Some(p) => evaluation::parse_overrides(&std::fs::read_to_string(&p)?)?,
                None => BTreeMap::new(),
            };
            let defaults = ComparisonSpec::default();
            let spec = ComparisonSpec {
                base: ctx.config.clone(),
                methods: methods.unwrap_or(defaults.methods),
                budgets: budgets.unwrap_or(defaults.budgets),
                modes: modes.unwrap_or(defaults.modes),
            };
            if let Some(b) = spec.budgets.iter().find(|b| !(0.0..=1.0).contains(*b)) {
                bail!("budget {b} outside [0, 1]");
            }
            let (report, records) = evaluation::run_comparison(&gw, &items, &spec, &overrides);
            evaluation::write_comparison(&out, &report, &records)?;
            let failed: usize = report.cells.iter().map(|c| c.failures.len()).sum::<usize>()
                + report.modes.iter().map(|m| m.failures.len()).sum::<usize>();
            let mut notes = BTreeMap::new();
            notes.insert("questions".into(), items.len().into());
            notes.insert("failed_runs".into(), failed.into());
            ctx.manifest("eval", notes)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.verbose { log::LevelFilter::Debug } else { log::LevelFilter::Warn })
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

/// A closed pipe on stdout is not an error.
fn print_stdout(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}
