use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use clore_core::eval::{ablation_table, benchmark, emit_report, report_to_json, BenchmarkConfig, ReportFormat};
use clore_core::pipeline::SessionConfig;
use clore_core::simulate::{simulate_training_state, SimulationConfig};
use clore_service::app::{router, spawn_sweeper, AppState, ServiceConfig};
use clore_service::rle::rle_encode;
use clore_service::sidecar::{self, SidecarMode};
use clore_service::{parse_predictor, DataSource};

#[derive(Parser)]
#[command(name = "clore", version, about = "Click-driven interactive segmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP annotation service.
    Serve(ServeArgs),
    /// Benchmark with the simulated annotator and write a report.
    Bench(BenchArgs),
    /// Benchmark once per trigger value and print a comparison table.
    Ablate(AblateArgs),
    /// Emit simulated training states as JSON lines.
    Simulate(SimulateArgs),
    /// Serve the predictor wire protocol.
    Sidecar(SidecarArgs),
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, env = "CLORE_ADDR", default_value = "127.0.0.1:8080")]
    addr: String,
    #[arg(long, env = "CLORE_PREDICTOR", default_value = "reference")]
    predictor: String,
    #[arg(long, env = "CLORE_SESSION_TTL_SECS", default_value_t = 1800)]
    ttl_secs: u64,
    /// Static files served under /ui/.
    #[arg(long, env = "CLORE_UI_DIR")]
    ui_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 4096)]
    max_side: usize,
    /// JSON file with default session settings.
    #[arg(long)]
    session_config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset directory (images/ + masks/) or synthetic:N[:SEED].
    #[arg(long, default_value = "synthetic:100")]
    data: DataSource,
    #[arg(long, env = "CLORE_PREDICTOR", default_value = "reference")]
    predictor: String,
    /// JSON file with benchmark settings; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_clicks: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
}

impl EvalArgs {
    fn benchmark_config(&self) -> Result<BenchmarkConfig> {
        let mut cfg = match &self.config {
            Some(p) => serde_json::from_str(&fs::read_to_string(p).with_context(|| p.display().to_string())?)
                .with_context(|| format!("parsing {}", p.display()))?,
            None => BenchmarkConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(m) = self.max_clicks {
            cfg.session.max_clicks = m;
            cfg.session.click_cap = cfg.session.click_cap.max(m);
        }
        if let Some(g) = self.gamma {
            cfg.session.gamma_expand = g;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    eval: EvalArgs,
    #[arg(long)]
    n_trigger: Option<usize>,
    /// Record wall-clock timing in the report.
    #[arg(long)]
    timing: bool,
    /// Report path; the extension picks JSON or CSV unless --format is set.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<ReportFormat>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    eval: EvalArgs,
    /// Trigger values to compare.
    #[arg(long = "n", value_delimiter = ',', default_value = "1,3,5,7,9")]
    n_values: Vec<usize>,
    /// Write one JSON report per trigger value here.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, default_value = "synthetic:10")]
    data: DataSource,
    #[arg(long, env = "CLORE_PREDICTOR", default_value = "reference")]
    predictor: String,
    /// States generated per sample.
    #[arg(long, default_value_t = 1)]
    per_sample: usize,
    #[arg(long, default_value_t = 17)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SidecarArgs {
    #[arg(long, default_value = "reference")]
    mode: SidecarMode,
    #[arg(long, default_value = "127.0.0.1:7878", conflicts_with = "stdio")]
    listen: String,
    /// Speak the protocol over stdin/stdout instead of TCP.
    #[arg(long)]
    stdio: bool,
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Serve(a) => serve(a),
        Command::Bench(a) => bench(a),
        Command::Ablate(a) => ablate(a),
        Command::Simulate(a) => simulate(a),
        Command::Sidecar(a) => {
            if a.stdio {
                return Ok(sidecar::run_stdio(a.mode)?);
            }
            let listener = std::net::TcpListener::bind(&a.listen).with_context(|| a.listen.clone())?;
            log::info!("sidecar ({:?}) listening on {}", a.mode, listener.local_addr()?);
            Ok(sidecar::run(listener, a.mode)?)
        }
    }
}

fn serve(a: ServeArgs) -> Result<()> {
    let predictor = parse_predictor(&a.predictor).map_err(anyhow::Error::msg)?;
    let defaults = match &a.session_config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?).with_context(|| p.display().to_string())?,
        None => SessionConfig::default(),
    };
    let config = ServiceConfig {
        session_ttl: Duration::from_secs(a.ttl_secs),
        max_side: a.max_side,
        ui_dir: a.ui_dir,
        defaults,
        ..ServiceConfig::default()
    };
    config.defaults.validate()?;
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let state = AppState::new(predictor, config);
        spawn_sweeper(state.store.clone());
        let listener = tokio::net::TcpListener::bind(&a.addr).await.with_context(|| a.addr.clone())?;
        log::info!("listening on http://{}", listener.local_addr()?);
        axum::serve(listener, router(state))
            .with_graceful_shutdown(async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        Ok(())
    })
}

fn bench(a: BenchArgs) -> Result<()> {
    let mut cfg = a.eval.benchmark_config()?;
    if let Some(n) = a.n_trigger {
        cfg.session.n_trigger = n;
    }
    cfg.timing = a.timing;
    cfg.validate()?;
    let predictor = parse_predictor(&a.eval.predictor).map_err(anyhow::Error::msg)?;
    let samples = a.eval.data.load(cfg.seed)?;
    if samples.is_empty() {
        bail!("no samples to evaluate");
    }
    let (report, _) = benchmark(&samples, &predictor, &cfg)?;
    for t in &report.thresholds {
        eprintln!("NoC@{:.0} {:.3}  NoF@{:.0} {}", t.threshold * 100.0, t.noc, t.threshold * 100.0, t.nof);
    }
    if let Some(timing) = &report.timing {
        eprintln!("SPC {:.1} ms over {} clicks", timing.mean_spc_ms, timing.clicks);
    }
    match a.out {
        Some(path) => {
            let format = a.format.unwrap_or_else(|| ReportFormat::for_path(&path));
            emit_report(&report, &path, format)?;
        }
        None => match a.format.unwrap_or(ReportFormat::Json) {
            ReportFormat::Json => print!("{}", report_to_json(&report)),
            ReportFormat::Csv => print!("{}", clore_core::eval::report_to_csv(&report)),
        },
    }
    Ok(())
}

fn ablate(a: AblateArgs) -> Result<()> {
    let cfg = a.eval.benchmark_config()?;
    let predictor = parse_predictor(&a.eval.predictor).map_err(anyhow::Error::msg)?;
    let samples = a.eval.data.load(cfg.seed)?;
    if samples.is_empty() {
        bail!("no samples to evaluate");
    }
    let reports = clore_core::eval::ablation_sweep(&samples, &predictor, &cfg, &a.n_values)?;
    if let Some(dir) = &a.out_dir {
        fs::create_dir_all(dir)?;
        for r in &reports {
            emit_report(r, &dir.join(format!("ablation-n{}.json", r.config.n_trigger)), ReportFormat::Json)?;
        }
    }
    print!("{}", ablation_table(&reports));
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let predictor = parse_predictor(&a.predictor).map_err(anyhow::Error::msg)?;
    let samples = a.data.load(a.seed)?;
    let sim = SimulationConfig {
        seed: a.seed,
        ..SimulationConfig::default()
    };
    let session = SessionConfig::default();
    let mut rng = sim.rng();
    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(std::io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(std::io::stdout().lock()),
    };
    for sample in &samples {
        for _ in 0..a.per_sample {
            let state = simulate_training_state(&sample.image, &sample.gt, &predictor, &sim, &session, &mut rng)?;
            let line = serde_json::json!({
                "sample": sample.id,
                "clicks": state.clicks,
                "corrective": state.corrective,
                "rounds": state.rounds,
                "reset": state.reset,
                "prev_mask": rle_encode(&state.prev_mask),
            });
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}
