use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, UNIX_EPOCH};

use clap::{Parser, Subcommand};
use narralive_catalog::{Client, ClientError, Config};
use narralive_core::analyzer::{self, Report};
use narralive_core::bundle::{self, BundleError, CompileOptions};
use narralive_core::runtime::{self, parse_events_jsonl};
use narralive_core::{script, Diagnostic, Story};

const EXIT_OK: u8 = 0;
const EXIT_INVALID: u8 = 1;
const EXIT_FAILURE: u8 = 2;
const EXIT_USAGE: u8 = 3;

#[derive(Parser)]
#[command(
    name = "narralive",
    version,
    about = "Author, check, package and serve location-based stories"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a story, then print its analysis report.
    Validate {
        /// `.story` source, story JSON or bundle
        story: PathBuf,
        /// Print the report as JSON
        #[arg(long)]
        json: bool,
        /// Treat warnings as errors
        #[arg(long)]
        strict: bool,
        /// Also check that every referenced asset exists under DIR
        #[arg(long, value_name = "DIR")]
        assets: Option<PathBuf>,
    },
    /// Package a story and its assets into a bundle.
    Compile {
        story: PathBuf,
        /// Asset directory (defaults to the story's directory)
        #[arg(long, value_name = "DIR")]
        assets: Option<PathBuf>,
        /// Bundle version, at least 1
        #[arg(long = "version", default_value_t = 1)]
        version: u64,
        /// Override the estimated readiness level
        #[arg(long)]
        erl: Option<u8>,
        /// RFC 3339 UTC timestamp; defaults to SOURCE_DATE_EPOCH, else the epoch
        #[arg(long)]
        published_at: Option<String>,
        #[arg(short, long = "out", value_name = "FILE")]
        output: PathBuf,
    },
    /// Check a bundle's integrity.
    Verify { bundle: PathBuf },
    /// Run a story against an event script and print the transcript as JSONL.
    Simulate {
        story: PathBuf,
        /// JSONL event file, `-` for stdin
        #[arg(long, conflicts_with = "greedy")]
        events: Option<PathBuf>,
        /// Drive the story with default choices for at most N steps
        #[arg(long, value_name = "N")]
        greedy: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Upload a bundle to a catalog server.
    Publish {
        bundle: PathBuf,
        #[arg(long, env = "NARRALIVE_SERVER", default_value = "http://127.0.0.1:8787")]
        server: String,
    },
    /// Run the catalog server.
    Serve {
        #[arg(long, value_name = "DIR")]
        store: Option<PathBuf>,
        #[arg(long, value_name = "ADDR")]
        bind: Option<String>,
    },
}

enum Failure {
    Invalid(String),
    Io(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::Io(_) => EXIT_FAILURE,
            Failure::Usage(_) => EXIT_USAGE,
        }
    }
}

type Outcome = Result<u8, Failure>;

fn io_err(path: &Path, e: io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn read_input(path: &Path) -> Result<Vec<u8>, Failure> {
    if path == Path::new("-") {
        let mut buf = Vec::new();
        io::stdin().read_to_end(&mut buf).map_err(|e| io_err(path, e))?;
        return Ok(buf);
    }
    std::fs::read(path).map_err(|e| io_err(path, e))
}

fn write_output(path: Option<&Path>, data: &[u8]) -> Result<(), Failure> {
    match path {
        Some(p) if p != Path::new("-") => std::fs::write(p, data).map_err(|e| io_err(p, e)),
        _ => io::stdout()
            .write_all(data)
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

enum Loaded {
    Story(Story),
    /// The source did not parse.
    Syntax(Vec<Diagnostic>),
}

/// Loads a `.story` source, a story JSON document or a bundle.
fn load_story(path: &Path) -> Result<Loaded, Failure> {
    let bytes = read_input(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    match ext {
        "zip" => bundle::load(&bytes)
            .map(|(_, s)| Loaded::Story(s))
            .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display()))),
        "json" => serde_json::from_slice(&bytes)
            .map(Loaded::Story)
            .map_err(|e| Failure::Invalid(format!("{}: {e}", path.display()))),
        _ => {
            let src =
                String::from_utf8(bytes).map_err(|_| Failure::Invalid(format!("{}: not UTF-8", path.display())))?;
            Ok(match script::parse(&src) {
                Ok(s) => Loaded::Story(s),
                Err(d) => Loaded::Syntax(d),
            })
        }
    }
}

fn require_story(path: &Path) -> Result<Story, Failure> {
    match load_story(path)? {
        Loaded::Story(s) => Ok(s),
        Loaded::Syntax(diags) => {
            print_diagnostics(path, &diags);
            Err(Failure::Invalid(format!("{}: does not parse", path.display())))
        }
    }
}

fn print_diagnostics(path: &Path, diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}: {d}", path.display());
    }
}

fn validate(story: &Path, json: bool, strict: bool, assets: Option<&Path>) -> Outcome {
    let report = match load_story(story)? {
        Loaded::Story(s) => {
            let diags = match assets {
                Some(dir) => analyzer::validate_with_assets(&s, dir),
                None => analyzer::validate(&s),
            };
            analyzer::report_from(&s, diags)
        }
        Loaded::Syntax(diagnostics) => Report {
            story_id: String::new(),
            diagnostics,
            stats: Default::default(),
            structure: None,
            experience_type: None,
            erl: None,
        },
    };
    if json {
        let mut out = serde_json::to_vec_pretty(&report).expect("report serializes");
        out.push(b'\n');
        write_output(None, &out)?;
    } else {
        print_diagnostics(story, &report.diagnostics);
        let mut out = io::stdout().lock();
        let _ = writeln!(out, "story: {}", report.story_id);
        let st = &report.stats;
        let _ = writeln!(
            out,
            "chapters {} scenes {} pages {} menus {} endings {} choice paths {}",
            st.chapters, st.scenes, st.pages, st.menus, st.endings, st.choice_paths
        );
        if let (Some(s), Some(t), Some(e)) = (&report.structure, &report.experience_type, report.erl) {
            let _ = writeln!(
                out,
                "structure: {}\nexperience type: {}\nreadiness level: {e}",
                label(s),
                label(t)
            );
        }
    }
    let failed = report.has_errors() || (strict && report.has_warnings());
    Ok(if failed { EXIT_INVALID } else { EXIT_OK })
}

/// The serialized name of a unit enum variant.
fn label<T: serde::Serialize>(v: &T) -> String {
    match serde_json::to_value(v) {
        Ok(serde_json::Value::String(s)) => s,
        _ => String::new(),
    }
}

fn published_at(arg: Option<String>) -> Result<String, Failure> {
    if let Some(ts) = arg {
        humantime::parse_rfc3339(&ts).map_err(|e| Failure::Usage(format!("--published-at `{ts}`: {e}")))?;
        return Ok(ts);
    }
    let secs = match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .map_err(|_| Failure::Usage(format!("SOURCE_DATE_EPOCH `{v}` is not a number of seconds")))?,
        Err(_) => 0,
    };
    Ok(humantime::format_rfc3339_seconds(UNIX_EPOCH + Duration::from_secs(secs)).to_string())
}

fn compile(
    story: &Path,
    assets: Option<PathBuf>,
    version: u64,
    erl: Option<u8>,
    published: Option<String>,
    output: &Path,
) -> Outcome {
    let s = require_story(story)?;
    let root = assets.unwrap_or_else(|| story.parent().map(Path::to_path_buf).unwrap_or_default());
    let opts = CompileOptions {
        version,
        erl,
        published_at: published_at(published)?,
    };
    match bundle::compile(&s, &root, &opts) {
        Ok(b) => {
            write_output(Some(output), &b.bytes)?;
            let m = &b.manifest;
            let mut out = format!(
                "wrote {}\nstory: {} v{}\ncontent hash: {}\nassets: {}\nbytes: {}\nreadiness level: {}\n",
                output.display(),
                m.story_id,
                m.version,
                m.content_hash,
                m.assets.len(),
                b.bytes.len(),
                m.erl_estimate
            );
            for q in bundle::qr_codes(&s) {
                out.push_str(&format!("qr {}/{}: {}\n", q.menu_id, q.option_id, q.payload));
            }
            write_output(None, out.as_bytes())?;
            Ok(EXIT_OK)
        }
        Err(BundleError::InvalidStory(diags)) => {
            print_diagnostics(story, &diags);
            Err(Failure::Invalid("story has validation errors".into()))
        }
        Err(e @ (BundleError::InvalidVersion | BundleError::InvalidErl(_))) => Err(Failure::Usage(e.to_string())),
        Err(e @ BundleError::MissingAsset { .. }) => Err(Failure::Invalid(format!("{e} under {}", root.display()))),
        Err(e) => Err(Failure::Io(e.to_string())),
    }
}

fn verify(path: &Path) -> Outcome {
    let bytes = read_input(path)?;
    let violations = bundle::verify(&bytes);
    for v in &violations {
        eprintln!("{}: {}: {:?}: {}", path.display(), v.path, v.problem, v.detail);
    }
    if violations.is_empty() {
        println!("ok");
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_INVALID)
    }
}

fn simulate(story: &Path, events: Option<PathBuf>, greedy: Option<usize>, output: Option<PathBuf>) -> Outcome {
    let s = require_story(story)?;
    let result = match (events, greedy) {
        (_, Some(n)) => runtime::run_greedy(s, n),
        (Some(p), None) => {
            let text = String::from_utf8(read_input(&p)?)
                .map_err(|_| Failure::Usage(format!("{}: not UTF-8", p.display())))?;
            let evs = parse_events_jsonl(&text).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            runtime::simulate(s, &evs)
        }
        (None, None) => return Err(Failure::Usage("simulate needs --events FILE or --greedy N".into())),
    };
    let t = result.map_err(|e| Failure::Invalid(e.to_string()))?;
    write_output(output.as_deref(), t.to_jsonl().as_bytes())?;
    Ok(EXIT_OK)
}

fn publish(path: &Path, server: &str) -> Outcome {
    let bytes = read_input(path)?;
    match Client::new(server).publish(&bytes) {
        Ok(e) => {
            println!("published {} v{} ({} bytes)", e.story_id, e.version, e.bytes);
            Ok(EXIT_OK)
        }
        Err(e @ (ClientError::InvalidBundle(_) | ClientError::VersionConflict(_))) => {
            Err(Failure::Invalid(e.to_string()))
        }
        Err(e) => Err(Failure::Io(e.to_string())),
    }
}

fn serve(store: Option<PathBuf>, bind: Option<String>) -> Outcome {
    let mut config = Config::from_env().map_err(Failure::Usage)?;
    if let Some(s) = store {
        config.store_dir = s;
    }
    if let Some(b) = bind {
        config.bind_addr = b.parse().map_err(|e| Failure::Usage(format!("--bind `{b}`: {e}")))?;
    }
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(io::stderr)
        .init();
    let rt = tokio::runtime::Runtime::new().map_err(|e| Failure::Io(e.to_string()))?;
    rt.block_on(narralive_catalog::serve(&config))
        .map_err(|e| Failure::Io(e.to_string()))?;
    Ok(EXIT_OK)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Validate {
            story,
            json,
            strict,
            assets,
        } => validate(&story, json, strict, assets.as_deref()),
        Command::Compile {
            story,
            assets,
            version,
            erl,
            published_at,
            output,
        } => compile(&story, assets, version, erl, published_at, &output),
        Command::Verify { bundle } => verify(&bundle),
        Command::Simulate {
            story,
            events,
            greedy,
            output,
        } => simulate(&story, events, greedy, output),
        Command::Publish { bundle, server } => publish(&bundle, &server),
        Command::Serve { store, bind } => serve(store, bind),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let msg = match &f {
                Failure::Invalid(m) | Failure::Io(m) | Failure::Usage(m) => m,
            };
            eprintln!("narralive: {msg}");
            ExitCode::from(f.code())
        }
    }
}
