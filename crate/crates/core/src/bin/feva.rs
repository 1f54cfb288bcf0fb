use std::fs;
use std::io::Write;
use std::net::{IpAddr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use feva_core::model::{
    validate_dataset, validate_dataset_within, Dataset, Project, TimePoint, VideoSource,
};
use feva_core::persistence::{
    export_cutlist, export_srt, export_via, import_via, load_dataset, save_dataset, SrtOptions,
};
use feva_core::replay::{replay_script, InteractionScript};
use feva_core::server::{self, AppState, ServerConfig};
use feva_core::{load_config, Config, Error, FrameRate};

#[derive(Parser)]
#[command(name = "feva", version, about = "Event video annotation engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "FEVA_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "FEVA_BIND", default_value = "127.0.0.1")]
        bind: IpAddr,
        /// Directory holding the media files.
        #[arg(long, env = "FEVA_MEDIA_ROOT")]
        media_root: PathBuf,
        /// Frame extractor template, e.g. `ffmpeg -ss {time} -i {input} -vframes 1 -vf scale={width}:-1 {output}`.
        #[arg(long, env = "FEVA_EXTRACTOR")]
        extractor: Option<String>,
        /// Project storage; defaults to `<media-root>/projects`.
        #[arg(long, env = "FEVA_DATA_DIR")]
        data_dir: Option<PathBuf>,
    },
    /// Convert between annotation formats.
    Convert(ConvertArgs),
    /// Check a dataset; exits 1 when it has violations.
    Validate {
        dataset: PathBuf,
        /// Also require labels to lie within the primary source's duration.
        #[arg(long)]
        project: Option<PathBuf>,
    },
    /// Replay an interaction script against a project.
    Replay {
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        project: PathBuf,
        /// Starting dataset; an empty one with a default track and type otherwise.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the final dataset here.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write a JSON report (input count, event log, final dataset); `-` for stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct ConvertArgs {
    input: PathBuf,
    /// Output file, or `-` for stdout.
    output: PathBuf,
    #[arg(long = "from", value_enum)]
    from: InputFormat,
    #[arg(long = "to", value_enum)]
    to: OutputFormat,
    /// Project supplying the video duration (srt) and source offset (cutlist).
    #[arg(long)]
    project: Option<PathBuf>,
    /// Cut-list source; defaults to the primary source.
    #[arg(long)]
    source: Option<String>,
    /// Only export these tracks (srt).
    #[arg(long = "track")]
    tracks: Vec<String>,
    /// Caption length for point labels (srt).
    #[arg(long, default_value_t = 500_000)]
    min_display_us: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum InputFormat {
    Feva,
    Via,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Feva,
    Srt,
    Cutlist,
    Via,
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

fn write_out(path: &Path, bytes: &[u8]) -> Result<()> {
    if path == Path::new("-") {
        std::io::stdout().write_all(bytes)?;
        return Ok(());
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

fn read_project(path: &Path) -> Result<Project> {
    let project: Project = serde_json::from_slice(&read(path)?)
        .with_context(|| format!("parsing project {}", path.display()))?;
    project.validate()?;
    Ok(project)
}

fn convert(args: ConvertArgs) -> Result<()> {
    let project = args.project.as_deref().map(read_project).transpose()?;
    let project = project.as_ref();
    let bytes = read(&args.input)?;
    let dataset = match args.from {
        InputFormat::Feva => load_dataset(&bytes)?,
        InputFormat::Via => {
            let imported = import_via(&bytes)?;
            for w in &imported.warnings {
                eprintln!("warning: {w}");
            }
            imported.dataset
        }
    };
    let out = match args.to {
        OutputFormat::Feva => save_dataset(&dataset),
        OutputFormat::Via => export_via(&dataset),
        OutputFormat::Srt => {
            let opts = SrtOptions {
                min_display: args.min_display_us,
                video_end: project.map(|p| p.primary_source().duration),
                track_ids: (!args.tracks.is_empty()).then_some(args.tracks),
            };
            export_srt(&dataset, &opts).into_bytes()
        }
        OutputFormat::Cutlist => {
            let src = match (project, args.source.as_deref()) {
                (Some(p), Some(id)) => p
                    .source(id)
                    .cloned()
                    .with_context(|| format!("no source `{id}` in project"))?,
                (Some(p), None) => p.primary_source().clone(),
                (None, Some(_)) => bail!("--source needs --project"),
                (None, None) => VideoSource {
                    id: "video".into(),
                    uri: String::new(),
                    fps: FrameRate::integer(30)?,
                    duration: TimePoint(u64::MAX),
                    offset: 0,
                    width: 0,
                    height: 0,
                },
            };
            export_cutlist(&dataset, &src).into_bytes()
        }
    };
    write_out(&args.output, &out)
}

fn validate(path: &Path, project: Option<&Project>) -> Result<bool> {
    let bytes = read(path)?;
    let dataset: Dataset = match load_dataset(&bytes) {
        Ok(d) => d,
        Err(Error::Invalid(_)) => serde_json::from_slice(&bytes)?,
        Err(e) => return Err(e.into()),
    };
    let report = match project {
        Some(p) => validate_dataset_within(&dataset, p.primary_source().duration),
        None => validate_dataset(&dataset),
    };
    for v in &report.violations {
        println!("{}\t{}", v.entity_id, v.rule);
    }
    if report.is_empty() {
        println!(
            "ok: {} tracks, {} types, {} labels, revision {}",
            dataset.tracks.len(),
            dataset.types.len(),
            dataset.labels.len(),
            dataset.revision
        );
    }
    Ok(report.is_empty())
}

fn replay(
    script: &Path,
    project: &Path,
    dataset: Option<&Path>,
    config: Option<&Path>,
    output: Option<&Path>,
    report: Option<&Path>,
) -> Result<()> {
    let text = String::from_utf8(read(script)?).context("script is not UTF-8")?;
    let script: InteractionScript = text.parse()?;
    let project = read_project(project)?;
    let dataset = match dataset {
        Some(p) => load_dataset(&read(p)?)?,
        None => Dataset::with_defaults(),
    };
    let config = match config {
        Some(p) => load_config(&read(p)?)?,
        None => Config::default(),
    };
    let outcome = replay_script(&script, &project, dataset, config)?;
    if let Some(path) = output {
        write_out(path, &save_dataset(&outcome.final_dataset))?;
    }
    match report {
        Some(path) => {
            let mut bytes = serde_json::to_vec_pretty(&outcome)?;
            bytes.push(b'\n');
            write_out(path, &bytes)?;
        }
        None => println!(
            "inputs: {}  labels: {}  revision: {}",
            outcome.input_count,
            outcome.final_dataset.labels.len(),
            outcome.final_dataset.revision
        ),
    }
    Ok(())
}

async fn serve(addr: SocketAddr, cfg: ServerConfig) -> Result<()> {
    fs::create_dir_all(&cfg.data_dir)
        .with_context(|| format!("creating {}", cfg.data_dir.display()))?;
    let listener = tokio::net::TcpListener::bind(addr)
        .await
        .with_context(|| format!("binding {addr}"))?;
    tracing::info!(
        "listening on http://{}, media {}, data {}",
        listener.local_addr()?,
        cfg.media_root.display(),
        cfg.data_dir.display()
    );
    server::serve(listener, AppState::new(cfg)).await?;
    Ok(())
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Serve {
            port,
            bind,
            media_root,
            extractor,
            data_dir,
        } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env()
                        .unwrap_or_else(|_| "info".into()),
                )
                .init();
            let mut cfg = ServerConfig::new(media_root);
            cfg.extractor = extractor;
            if let Some(d) = data_dir {
                cfg.data_dir = d;
            }
            tokio::runtime::Runtime::new()?.block_on(serve(SocketAddr::new(bind, port), cfg))?;
        }
        Command::Convert(args) => convert(args)?,
        Command::Validate { dataset, project } => {
            let project = project.as_deref().map(read_project).transpose()?;
            if !validate(&dataset, project.as_ref())? {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Replay {
            script,
            project,
            dataset,
            config,
            output,
            report,
        } => replay(
            &script,
            &project,
            dataset.as_deref(),
            config.as_deref(),
            output.as_deref(),
            report.as_deref(),
        )?,
    }
    Ok(ExitCode::SUCCESS)
}
