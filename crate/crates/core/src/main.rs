use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use layerforge::augment::{augment, AugmentMode, AugmentPolicy, ShuffleClient};
use layerforge::config::Config;
use layerforge::metrics::evaluate_documents;
use layerforge::model::validate;
use layerforge::render::render;
use layerforge::session::{run_session, template_source, InputMode, InstructionRequest, ProvidedAsset, ProviderKind};
use layerforge::tokens::{parse, serialize};
use layerforge::vector::simplicity::{assess_simplicity_with, Decision};
use layerforge::vector::{emit_svg, select_k, vectorize, TraceOptions};
use layerforge::{AssetStore, DesignDocument, Raster};

#[derive(Parser)]
#[command(name = "layerforge", version, about = "Layered design documents: codec, renderer, vectorizer, metrics and mock generation")]
struct Cli {
    /// JSON config file (falls back to $LAYERFORGE_CONFIG).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a document (JSON or token text) against the document rules.
    Validate { doc: PathBuf },
    /// Convert between document JSON and token text.
    Tokens {
        #[command(subcommand)]
        op: TokensOp,
    },
    /// Render a document to PNG.
    Render {
        doc: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Directory of `<asset id>.png` files.
        #[arg(long)]
        assets: Option<PathBuf>,
    },
    /// Trace a flat-color PNG into SVG.
    Vectorize {
        image: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Palette size; chosen automatically when absent.
        #[arg(short, long)]
        k: Option<usize>,
        /// Vectorize even if the image does not look flat.
        #[arg(long)]
        force: bool,
        /// Smooth corners into curves (not pixel-exact).
        #[arg(long)]
        smooth: bool,
    },
    /// Rewrite text layers keeping every length.
    Augment {
        doc: PathBuf,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        max_retries: u32,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the resolution bucket for an image size.
    Bucket { width: u32, height: u32 },
    /// Run a generation session with the template source and a mock provider.
    Generate {
        #[arg(long)]
        instruction: String,
        #[arg(long, value_enum, default_value_t = GenMode::SingleModal)]
        mode: GenMode,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum, default_value_t = Provider::Solid)]
        provider: Provider,
        /// Text to place (repeatable).
        #[arg(long = "text")]
        texts: Vec<String>,
        /// PNG to place in multimodal mode (repeatable); its file stem is the description.
        #[arg(long = "asset")]
        assets: Vec<PathBuf>,
        /// Replace a generated image's description tag: `INDEX=TAG` (repeatable).
        #[arg(long = "override", value_parser = parse_override)]
        overrides: Vec<(usize, String)>,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Score every document in a directory.
    Evaluate {
        dir: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum TokensOp {
    /// Document JSON to token text.
    Encode {
        /// Input file, `-` for stdin.
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Token text to document JSON.
    Decode {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Random,
    Semantic,
}

#[derive(Clone, Copy, ValueEnum)]
enum GenMode {
    SingleModal,
    Multimodal,
}

#[derive(Clone, Copy, ValueEnum)]
enum Provider {
    Solid,
    Gradient,
    Checker,
}

fn parse_override(s: &str) -> Result<(usize, String), String> {
    let (i, tag) = s.split_once('=').ok_or("expected INDEX=TAG")?;
    let i = i.parse().map_err(|_| format!("bad index {i:?}"))?;
    Ok((i, tag.to_string()))
}

/// A failure with a machine-readable kind, printed as `error[kind]: message`.
struct Failure {
    kind: &'static str,
    message: String,
}

fn fail(kind: &'static str, message: impl ToString) -> Failure {
    Failure { kind, message: message.to_string() }
}

type CmdResult = Result<(), Failure>;

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| fail("io", e))?;
        return Ok(s);
    }
    fs::read_to_string(path).map_err(|e| fail("io", format!("{}: {e}", path.display())))
}

fn write_output(path: Option<&Path>, content: &str) -> CmdResult {
    match path {
        Some(p) => fs::write(p, content).map_err(|e| fail("io", format!("{}: {e}", p.display()))),
        None => io::stdout().write_all(content.as_bytes()).map_err(|e| fail("io", e)),
    }
}

/// Loads a document from JSON or token text, whichever the content is.
fn load_doc(path: &Path) -> Result<DesignDocument, Failure> {
    let text = read_input(path)?;
    if text.trim_start().starts_with('{') {
        DesignDocument::from_json(&text).map_err(|e| fail("json", e))
    } else {
        parse(&text).map_err(|e| fail("parse", format!("{} ({})", e, e.kind())))
    }
}

fn doc_json(doc: &DesignDocument) -> String {
    doc.to_json() + "\n"
}

fn load_assets(dir: Option<&Path>) -> Result<AssetStore, Failure> {
    match dir {
        Some(d) => AssetStore::load_dir(d).map_err(|e| fail("assets", e)),
        None => Ok(AssetStore::new()),
    }
}

fn cmd_validate(path: &Path) -> CmdResult {
    let text = read_input(path)?;
    let doc = if text.trim_start().starts_with('{') {
        DesignDocument::from_json(&text).map_err(|e| fail("json", e))?
    } else {
        // The parser validates while building.
        parse(&text).map_err(|e| fail("invalid", format!("{} ({})", e, e.kind())))?
    };
    let report = validate(&doc);
    if report.is_valid() {
        println!("ok: {} layers", doc.layer_count());
        Ok(())
    } else {
        for v in &report.violations {
            eprintln!("violation: {v}");
        }
        Err(fail("invalid", format!("{} violation(s)", report.violations.len())))
    }
}

fn cmd_tokens(op: &TokensOp) -> CmdResult {
    match op {
        TokensOp::Encode { input, output } => {
            let doc = DesignDocument::from_json(&read_input(input)?).map_err(|e| fail("json", e))?;
            let stream = serialize(&doc).map_err(|e| fail("invalid", e))?;
            write_output(output.as_deref(), &(stream.to_text() + "\n"))
        }
        TokensOp::Decode { input, output } => {
            let text = read_input(input)?;
            let doc = parse(text.trim_end()).map_err(|e| fail("parse", format!("{} ({})", e, e.kind())))?;
            write_output(output.as_deref(), &doc_json(&doc))
        }
    }
}

fn cmd_render(doc: &Path, output: &Path, assets: Option<&Path>) -> CmdResult {
    let doc = load_doc(doc)?;
    let assets = load_assets(assets)?;
    let raster = render(&doc, &assets).map_err(|e| fail("render", e))?;
    raster.write_png(output).map_err(|e| fail("io", e))
}

fn cmd_vectorize(cfg: &Config, image: &Path, output: &Path, k: Option<usize>, force: bool, smooth: bool) -> CmdResult {
    let img = Raster::read_png(image).map_err(|e| fail("image", e))?;
    if img.is_empty() {
        return Err(fail("image", "empty image"));
    }
    let score = assess_simplicity_with(&img, &cfg.vectorizer.simplicity());
    eprintln!("simplicity: {:.4}", score.score);
    if score.decision == Decision::KeepRaster && !force {
        return Err(fail("not_simple", format!("score {:.4} below threshold; use --force", score.score)));
    }
    let k = k.unwrap_or_else(|| select_k(&img, cfg.vectorizer.k_max, cfg.vectorizer.tau_mse));
    let options = TraceOptions { smooth, ..TraceOptions::default() };
    let vg = vectorize(&img, k, &options);
    eprintln!("k = {k}, {} paths", vg.paths.len());
    write_output(Some(output), &emit_svg(&vg))
}

fn cmd_augment(doc: &Path, mode: Mode, seed: u64, max_retries: u32, output: Option<&Path>) -> CmdResult {
    let doc = load_doc(doc)?;
    let policy = match mode {
        Mode::Random => AugmentPolicy { mode: AugmentMode::Random, seed, max_retries: max_retries.max(1) },
        Mode::Semantic => AugmentPolicy::semantic(seed, max_retries),
    };
    let client = ShuffleClient::new(seed);
    let outcome = augment(&doc, &policy, &client);
    for w in &outcome.warnings {
        eprintln!("warning: {}", serde_json::to_string(w).expect("warning serializes"));
    }
    write_output(output, &doc_json(&outcome.document))
}

fn cmd_bucket(cfg: &Config, w: u32, h: u32) -> CmdResult {
    if w == 0 || h == 0 {
        return Err(fail("usage", "width and height must be positive"));
    }
    let b = cfg.buckets.assign(w, h);
    println!("{}\t{}\t{}", b.id, b.width, b.height);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_generate(
    cfg: &Config,
    instruction: &str,
    mode: GenMode,
    seed: Option<u64>,
    provider: Provider,
    texts: &[String],
    asset_paths: &[PathBuf],
    overrides: &[(usize, String)],
    out: &Path,
) -> CmdResult {
    let seed = seed.unwrap_or(cfg.seed);
    let mut assets = AssetStore::new();
    let mut provided_assets = Vec::new();
    for p in asset_paths {
        let r = Raster::read_png(p).map_err(|e| fail("image", format!("{}: {e}", p.display())))?;
        let asset_id = assets.insert_content_addressed(r);
        let description = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        provided_assets.push(ProvidedAsset { asset_id, description });
    }
    let req = InstructionRequest {
        instruction: instruction.to_string(),
        mode: match mode {
            GenMode::SingleModal => InputMode::SingleModal,
            GenMode::Multimodal => InputMode::Multimodal,
        },
        provided_texts: texts.to_vec(),
        provided_assets,
    };
    let kind = match provider {
        Provider::Solid => ProviderKind::Solid,
        Provider::Gradient => ProviderKind::Gradient,
        Provider::Checker => ProviderKind::Checker,
    };
    let mut source = template_source(&req, seed);
    let mut provider = kind.build(seed);
    let run = run_session(&req, &mut source, provider.as_mut(), &cfg.buckets, assets, overrides);

    fs::create_dir_all(out).map_err(|e| fail("io", e))?;
    let write = |name: &str, content: &[u8]| fs::write(out.join(name), content).map_err(|e| fail("io", e));
    write("transcript.jsonl", run.transcript.to_jsonl().as_bytes())?;
    let (doc, assets) = run.result.map_err(|e| fail("session", format!("{e} ({})", e.kind())))?;
    let tokens = serialize(&doc).map_err(|e| fail("invalid", e))?.to_text();
    write("design.tokens", (tokens + "\n").as_bytes())?;
    write("design.json", doc_json(&doc).as_bytes())?;
    assets.save_dir(&out.join("assets")).map_err(|e| fail("io", e))?;
    let raster = render(&doc, &assets).map_err(|e| fail("render", e))?;
    raster.write_png(&out.join("render.png")).map_err(|e| fail("io", e))?;
    println!("{}", raster.content_hash());
    Ok(())
}

/// Documents are `*.json` or `*.tokens` files in `dir`; assets live in
/// `dir/assets`; `<stem>.refs.json` (a JSON string array) supplies the
/// reference texts for a document.
fn cmd_evaluate(cfg: &Config, dir: &Path, output: Option<&Path>) -> CmdResult {
    let mut entries: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| fail("io", format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            let name = p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
            (name.ends_with(".json") && !name.ends_with(".refs.json")) || name.ends_with(".tokens")
        })
        .collect();
    entries.sort();
    let mut docs = Vec::new();
    let mut refs = Vec::new();
    let mut any_refs = false;
    for p in &entries {
        docs.push(load_doc(p).map_err(|f| fail(f.kind, format!("{}: {}", p.display(), f.message)))?);
        let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let refs_path = dir.join(format!("{stem}.refs.json"));
        if refs_path.exists() {
            let r: Vec<String> = serde_json::from_str(&read_input(&refs_path)?).map_err(|e| fail("json", e))?;
            refs.push(r);
            any_refs = true;
        } else {
            refs.push(Vec::new());
        }
    }
    let assets_dir = dir.join("assets");
    let assets = load_assets(assets_dir.is_dir().then_some(assets_dir.as_path()))?;
    let report = evaluate_documents(&docs, &assets, any_refs.then_some(refs.as_slice()), cfg.metrics)
        .map_err(|e| fail("metrics", e))?;
    eprint!("{}", report.to_table());
    match output {
        Some(p) => write_output(Some(p), &(report.to_json() + "\n")),
        None => write_output(None, &(report.to_json() + "\n")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match Config::resolve(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error[config]: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match &cli.command {
        Command::Validate { doc } => cmd_validate(doc),
        Command::Tokens { op } => cmd_tokens(op),
        Command::Render { doc, output, assets } => cmd_render(doc, output, assets.as_deref()),
        Command::Vectorize { image, output, k, force, smooth } => cmd_vectorize(&cfg, image, output, *k, *force, *smooth),
        Command::Augment { doc, mode, seed, max_retries, output } => {
            cmd_augment(doc, *mode, *seed, *max_retries, output.as_deref())
        }
        Command::Bucket { width, height } => cmd_bucket(&cfg, *width, *height),
        Command::Generate { instruction, mode, seed, provider, texts, assets, overrides, output } => {
            cmd_generate(&cfg, instruction, *mode, *seed, *provider, texts, assets, overrides, output)
        }
        Command::Evaluate { dir, output } => cmd_evaluate(&cfg, dir, output.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.kind, f.message);
            ExitCode::from(if f.kind == "usage" { 2 } else { 1 })
        }
    }
}
