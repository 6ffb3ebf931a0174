use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use image::imageops::{self, FilterType};
use image::RgbImage;
use rayon::prelude::*;
use serde_json::{json, Value};

use colorprobe::activation::{
    analyze_layer, hue_histogram, layer_type_distribution, load_crop_index, pearson_histograms,
    AnalysisConfig, ColumnRoles, CropIndex, FeatureSource, HueHistogram, NeuronProfile,
    ProfilesFile, ProfilesHeader, Thresholds, ThumbnailSource, PROFILES_FORMAT,
};
use colorprobe::config::{config_hash, expand_config_args};
use colorprobe::exchange::{list_layers, read_activation_dump};
use colorprobe::palette::{ColorTerm, Palette};
use colorprobe::probe::{
    aggregate_chromaticity, aggregate_stroop, run_experiment, EmbeddingSet, Outcome, ResultsFile,
    ResultsHeader, RESULTS_FORMAT,
};
use colorprobe::prompts::{builtin_templates, find_template, load_template_file, PromptTemplate};
use colorprobe::report::{
    chromaticity_bars, chromaticity_csv, chromaticity_pivot_csv, histogram_svg, hue_histogram_csv,
    layer_types_bars, layer_types_csv, selectivity_bands, selectivity_bands_csv, selectivity_bars,
    stacked_bar_svg, stroop_bars, stroop_csv, Provenance,
};
use colorprobe::stimulus::{
    enumerate_shape_dataset, enumerate_stroop_dataset, write_images, DatasetKind, DatasetManifest,
    GenParams, GRAY_ID_SUFFIX,
};

const SUBCOMMANDS: [&str; 6] = [
    "gen-shapes",
    "gen-stroop",
    "run-probe",
    "analyze-neurons",
    "report",
    "prompts",
];

/// Side of the thumbnails kept in memory for neuron features.
const THUMB_SIDE: u32 = 64;

#[derive(Parser)]
#[command(
    name = "colorprobe",
    version,
    about = "Color-naming, Stroop and neuron-selectivity probes for CLIP-style models"
)]
struct Cli {
    /// Worker threads for parallel stages (default: all cores)
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,
    /// Flat `key = value` file; each line becomes a flag of the subcommand
    #[arg(long, global = true, value_name = "F")]
    config: Option<PathBuf>,
    /// Machine-readable JSON summary on stdout
    #[arg(long, global = true)]
    porcelain: bool,
    /// Palette override file (`term = R,G,B` / `term.label = text`)
    #[arg(long, global = true, value_name = "F")]
    palette: Option<PathBuf>,
    /// Extra prompt templates, one per line with a single `{}` slot
    #[arg(long, global = true, value_name = "F")]
    template_file: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the shape corpus (8 shapes x 11 backgrounds x 10 object colors)
    #[command(args_override_self = true)]
    GenShapes(GenArgs),
    /// Generate the Stroop corpus (11 words x 10 fonts x 9 backgrounds)
    #[command(args_override_self = true)]
    GenStroop(StroopArgs),
    /// Zero-shot color-label prediction over adapter embeddings
    #[command(args_override_self = true)]
    RunProbe(ProbeArgs),
    /// Neuron profiles, taxonomy and selectivity statistics from activation dumps
    #[command(args_override_self = true)]
    AnalyzeNeurons(AnalyzeArgs),
    /// CSV tables and SVG figures from probe results or neuron profiles
    #[command(args_override_self = true)]
    Report(ReportArgs),
    /// List templates, or print the 11 prompts of one template
    #[command(args_override_self = true)]
    Prompts(PromptsArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Samples per color/shape combination
    #[arg(long, default_value_t = 1)]
    samples: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Also write grayscale twins and manifest.gray.ndjson
    #[arg(long)]
    gray: bool,
    /// Write manifests only
    #[arg(long)]
    no_images: bool,
    /// Square image side in pixels
    #[arg(long)]
    size: Option<u32>,
    #[arg(long)]
    rotation_min: Option<f64>,
    #[arg(long)]
    rotation_max: Option<f64>,
    #[arg(long)]
    scale_min: Option<f64>,
    #[arg(long)]
    scale_max: Option<f64>,
    #[arg(long)]
    font_min: Option<f64>,
    #[arg(long)]
    font_max: Option<f64>,
}

impl GenArgs {
    fn params(&self) -> Result<GenParams> {
        let mut p = GenParams::default();
        if let Some(s) = self.size {
            p.geometry.width = s;
            p.geometry.height = s;
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.rotation_deg.0, self.rotation_min);
        set(&mut p.rotation_deg.1, self.rotation_max);
        set(&mut p.scale.0, self.scale_min);
        set(&mut p.scale.1, self.scale_max);
        set(&mut p.font_size.0, self.font_min);
        set(&mut p.font_size.1, self.font_max);
        p.validate()?;
        Ok(p)
    }
}

#[derive(Args)]
struct StroopArgs {
    #[command(flatten)]
    gen: GenArgs,
    /// Only the white-background subset (10 words x 9 font colors)
    #[arg(long)]
    white_bg: bool,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, value_name = "F")]
    manifest: PathBuf,
    #[arg(long, value_name = "T")]
    template_id: String,
    /// Directory holding images.bin and text-<template-id>.bin
    #[arg(long, value_name = "DIR")]
    embeddings: PathBuf,
    #[arg(long, value_name = "F")]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Directory of per-layer activation dumps
    #[arg(long, value_name = "DIR")]
    activations: PathBuf,
    #[arg(long, value_name = "F")]
    stroop_manifest: PathBuf,
    /// Reference corpus for the activation baseline and features
    #[arg(long, value_name = "F")]
    probe_manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    topk: usize,
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    /// Crop boxes, one JSON object per line
    #[arg(long, value_name = "F")]
    crops: Option<PathBuf>,
    /// Minimum selectivity index for the hue histogram
    #[arg(long, default_value_t = 0.25)]
    alpha_threshold: f64,
    #[arg(long, default_value_t = 12)]
    hue_bins: usize,
    /// Reference hue distribution, one bin mass per line
    #[arg(long, value_name = "F")]
    reference_hue: Option<PathBuf>,
    /// Comma-separated layer subset (default: every dumped layer)
    #[arg(long, value_delimiter = ',')]
    layers: Option<Vec<String>>,
    /// Skip neuron features and dominant hues
    #[arg(long)]
    no_features: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportKind {
    Auto,
    Chromaticity,
    Stroop,
    Neurons,
}

#[derive(Args)]
struct ReportArgs {
    /// results.ndjson from run-probe or profiles.ndjson from analyze-neurons
    #[arg(long, value_name = "F")]
    results: PathBuf,
    #[arg(long, value_enum, default_value_t = ReportKind::Auto)]
    kind: ReportKind,
    /// Manifest the results refer to (default: the one named in the results header)
    #[arg(long, value_name = "F")]
    manifest: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
    #[arg(long)]
    hue_bins: Option<usize>,
    #[arg(long)]
    alpha_threshold: Option<f64>,
    #[arg(long, value_name = "F")]
    reference_hue: Option<PathBuf>,
}

#[derive(Args)]
struct PromptsArgs {
    #[arg(long, value_name = "T")]
    template_id: Option<String>,
    /// Write prompts here instead of stdout
    #[arg(long, value_name = "F")]
    out: Option<PathBuf>,
}

struct Ctx {
    porcelain: bool,
    palette: Palette,
    palette_source: Option<PathBuf>,
    template_file: Option<PathBuf>,
}

impl Ctx {
    fn progress(&self, msg: impl AsRef<str>) {
        eprintln!("colorprobe: {}", msg.as_ref());
    }

    fn summary(&self, human: String, machine: Value) {
        if self.porcelain {
            println!("{machine}");
        } else {
            println!("{human}");
        }
    }

    fn templates(&self) -> Result<Vec<PromptTemplate>> {
        let mut t = builtin_templates();
        if let Some(f) = &self.template_file {
            t.extend(load_template_file(f)?);
        }
        Ok(t)
    }
}

fn main() -> ExitCode {
    let argv = match expand_config_args(std::env::args_os().collect(), &SUBCOMMANDS) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let cli = Cli::parse_from(argv);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            bail!("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")?;
    }
    let palette = match &cli.palette {
        Some(p) => Palette::load(p).with_context(|| format!("palette {}", p.display()))?,
        None => Palette::default(),
    };
    let ctx = Ctx {
        porcelain: cli.porcelain,
        palette,
        palette_source: cli.palette.clone(),
        template_file: cli.template_file.clone(),
    };
    match &cli.command {
        Command::GenShapes(a) => gen(&ctx, DatasetKind::Shapes, a, false),
        Command::GenStroop(a) => gen(&ctx, DatasetKind::Stroop, &a.gen, a.white_bg),
        Command::RunProbe(a) => run_probe(&ctx, a),
        Command::AnalyzeNeurons(a) => analyze(&ctx, a),
        Command::Report(a) => report(&ctx, a),
        Command::Prompts(a) => prompts(&ctx, a),
    }
}

fn gen(ctx: &Ctx, kind: DatasetKind, args: &GenArgs, white: bool) -> Result<()> {
    let t0 = Instant::now();
    let params = args.params()?;
    let mut manifest = match kind {
        DatasetKind::Shapes => {
            enumerate_shape_dataset(args.samples, args.seed, &params, &ctx.palette)?
        }
        DatasetKind::Stroop => {
            enumerate_stroop_dataset(args.samples, args.seed, white, &params, &ctx.palette)?
        }
    };
    // output location, thread count and output mode do not enter the hash
    let hash = config_hash(&json!({
        "command": kind_command(kind),
        "samples": args.samples,
        "seed": args.seed,
        "white_bg": white,
        "gray": args.gray,
        "params": params,
        "palette_hash": ctx.palette.hash(),
    }));
    manifest.header.config_hash = Some(hash.clone());
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join("manifest.ndjson");
    manifest.save(&path)?;
    ctx.progress(format!(
        "{} records -> {}",
        manifest.records.len(),
        path.display()
    ));
    if !args.no_images {
        write_images(&manifest, &ctx.palette, &args.out)?;
        ctx.progress(format!("rendered {} images", manifest.records.len()));
    }
    let mut gray_path = None;
    if args.gray {
        let gray = manifest.gray_variant();
        let p = args.out.join("manifest.gray.ndjson");
        gray.save(&p)?;
        if !args.no_images {
            write_images(&gray, &ctx.palette, &args.out)?;
        }
        ctx.progress(format!(
            "{} grayscale records -> {}",
            gray.records.len(),
            p.display()
        ));
        gray_path = Some(p);
    }
    ctx.summary(
        format!(
            "{}: {} records, seed {}, config {hash}, {:.2}s",
            kind_command(kind),
            manifest.records.len(),
            args.seed,
            t0.elapsed().as_secs_f64()
        ),
        json!({
            "command": kind_command(kind),
            "records": manifest.records.len(),
            "manifest": path,
            "gray_manifest": gray_path,
            "seed": args.seed,
            "palette_hash": ctx.palette.hash(),
            "config_hash": hash,
        }),
    );
    Ok(())
}

fn kind_command(kind: DatasetKind) -> &'static str {
    match kind {
        DatasetKind::Shapes => "gen-shapes",
        DatasetKind::Stroop => "gen-stroop",
    }
}

fn run_probe(ctx: &Ctx, args: &ProbeArgs) -> Result<()> {
    let manifest = DatasetManifest::load(&args.manifest)
        .with_context(|| format!("manifest {}", args.manifest.display()))?;
    let templates = ctx.templates()?;
    let template = find_template(&templates, &args.template_id)?;
    let set = EmbeddingSet::load(&args.embeddings, &template.id, &ctx.palette)
        .with_context(|| format!("embeddings in {}", args.embeddings.display()))?;
    let mut warnings: Vec<String> = set.warnings().to_vec();
    if manifest.header.palette_hash != ctx.palette.hash() {
        warnings.push(format!(
            "manifest palette {} differs from probe palette {}",
            manifest.header.palette_hash,
            ctx.palette.hash()
        ));
    }
    for w in &warnings {
        ctx.progress(format!("warning: {w}"));
    }
    let predictions = run_experiment(&manifest, &template.id, &set)?;
    let hash = config_hash(&json!({
        "command": "run-probe",
        "manifest_config": manifest.header.config_hash,
        "template_id": template.id,
        "template_text": template.text,
        "palette_hash": ctx.palette.hash(),
        "model": set.model(),
    }));
    let file = ResultsFile {
        header: ResultsHeader {
            format: RESULTS_FORMAT.to_string(),
            manifest: args.manifest.display().to_string(),
            manifest_kind: manifest.header.kind,
            white_background: manifest.header.white_background,
            master_seed: manifest.header.master_seed,
            template_id: template.id.clone(),
            template_text: template.text.clone(),
            palette_hash: ctx.palette.hash(),
            model: set.model().map(str::to_string),
            config_hash: Some(hash.clone()),
            records: predictions.len(),
            warnings,
        },
        predictions,
    };
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    file.save(&args.out)?;
    let mut counts: BTreeMap<String, usize> = BTreeMap::new();
    for p in &file.predictions {
        *counts
            .entry(outcome_name(p.outcome).to_string())
            .or_default() += 1;
    }
    ctx.summary(
        format!(
            "run-probe: {} predictions with template {:?} -> {}",
            file.predictions.len(),
            template.id,
            args.out.display()
        ),
        json!({
            "command": "run-probe",
            "records": file.predictions.len(),
            "template_id": template.id,
            "outcomes": counts,
            "results": args.out,
            "config_hash": hash,
        }),
    );
    Ok(())
}

fn outcome_name(o: Outcome) -> &'static str {
    match o {
        Outcome::BackgroundColor => "background_color",
        Outcome::ObjectOrFontColor => "object_or_font_color",
        Outcome::WrittenColor => "written_color",
        Outcome::NoneOfInput => "none_of_input",
        Outcome::Incorrect => "incorrect",
    }
}

fn manifest_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Loads thumbnails for the given refs from manifest directories.
fn load_thumbnails(
    refs: &[(usize, String)],
    sources: &HashMap<String, PathBuf>,
) -> (HashMap<usize, RgbImage>, Option<(u32, u32)>, usize) {
    let loaded: Vec<(usize, Option<RgbImage>, Option<(u32, u32)>)> = refs
        .par_iter()
        .map(|(col, r)| {
            let img = sources
                .get(r)
                .and_then(|p| image::open(p).ok())
                .map(|i| i.to_rgb8());
            let dims = img.as_ref().map(|i| i.dimensions());
            let thumb =
                img.map(|i| imageops::resize(&i, THUMB_SIDE, THUMB_SIDE, FilterType::Triangle));
            (*col, thumb, dims)
        })
        .collect();
    let mut thumbs = HashMap::new();
    let mut source = None;
    let mut missing = 0;
    for (col, t, dims) in loaded {
        match t {
            Some(t) => {
                thumbs.insert(col, t);
                source = source.or(dims);
            }
            None => missing += 1,
        }
    }
    (thumbs, source, missing)
}

fn analyze(ctx: &Ctx, args: &AnalyzeArgs) -> Result<()> {
    let thresholds = Thresholds {
        theta_high: args.theta,
    };
    thresholds.validate()?;
    if !(0.0..=1.0).contains(&args.alpha_threshold) {
        bail!("--alpha-threshold must lie in [0, 1]");
    }
    let config = AnalysisConfig {
        k: args.topk,
        thresholds,
    };
    let stroop = DatasetManifest::load(&args.stroop_manifest)
        .with_context(|| format!("manifest {}", args.stroop_manifest.display()))?;
    let probe = match &args.probe_manifest {
        Some(p) => {
            Some(DatasetManifest::load(p).with_context(|| format!("manifest {}", p.display()))?)
        }
        None => None,
    };
    let crops: Option<CropIndex> = args.crops.as_deref().map(load_crop_index).transpose()?;
    let layers = match &args.layers {
        Some(l) => l.clone(),
        None => list_layers(&args.activations)?,
    };
    if layers.is_empty() {
        bail!("no activation dumps in {}", args.activations.display());
    }

    // record id -> image file, color variants only
    let mut sources: HashMap<String, PathBuf> = HashMap::new();
    let mut add_sources = |m: &DatasetManifest, path: &Path| {
        let dir = manifest_dir(path);
        for r in &m.records {
            sources.insert(r.id.clone(), dir.join(&r.path));
        }
    };
    add_sources(&stroop, &args.stroop_manifest);
    if let (Some(m), Some(p)) = (&probe, &args.probe_manifest) {
        add_sources(m, p);
    }

    let mut profiles: Vec<NeuronProfile> = Vec::new();
    let mut model = None;
    let mut thumb_cache: HashMap<String, RgbImage> = HashMap::new();
    let mut source_dims = None;
    for layer in &layers {
        let (header, matrix) = read_activation_dump(&args.activations, layer)?;
        if model.is_none() {
            model = header
                .extra
                .get("model")
                .and_then(Value::as_str)
                .map(str::to_string);
        }
        let roles = ColumnRoles::resolve(matrix.image_refs(), &stroop, probe.as_ref())
            .with_context(|| format!("layer {layer}"))?;
        let features: Option<ThumbnailSource> = if args.no_features {
            None
        } else {
            let refs = matrix.image_refs();
            let wanted: Vec<(usize, String)> = roles
                .reference
                .iter()
                .map(|&c| (c, refs[c].clone()))
                .filter(|(_, r)| !r.ends_with(GRAY_ID_SUFFIX) && !thumb_cache.contains_key(r))
                .collect();
            let (fresh, dims, missing) = load_thumbnails(&wanted, &sources);
            if missing > 0 {
                ctx.progress(format!(
                    "warning: {missing} reference images not found, features skip them"
                ));
            }
            source_dims = source_dims.or(dims);
            for (col, t) in fresh {
                thumb_cache.insert(refs[col].clone(), t);
            }
            let by_col: HashMap<usize, RgbImage> = roles
                .reference
                .iter()
                .filter_map(|&c| thumb_cache.get(&refs[c]).map(|t| (c, t.clone())))
                .collect();
            let dims = source_dims.unwrap_or((THUMB_SIDE, THUMB_SIDE));
            Some(ThumbnailSource::from_thumbnails(by_col, dims)?)
        };
        let layer_profiles = analyze_layer(
            &matrix,
            &roles,
            &config,
            features.as_ref().map(|f| f as &dyn FeatureSource),
            crops.as_ref(),
        )?;
        ctx.progress(format!(
            "layer {layer}: {} neurons x {} images",
            matrix.neurons(),
            matrix.images()
        ));
        profiles.extend(layer_profiles);
    }

    let hash = config_hash(&json!({
        "command": "analyze-neurons",
        "layers": layers,
        "stroop_manifest": stroop.header.config_hash,
        "probe_manifest": probe.as_ref().map(|p| p.header.config_hash.clone()),
        "topk": args.topk,
        "theta": args.theta,
        "alpha_threshold": args.alpha_threshold,
        "features": !args.no_features,
        "palette_hash": ctx.palette.hash(),
        "model": model,
    }));
    let file = ProfilesFile {
        header: ProfilesHeader {
            format: PROFILES_FORMAT.to_string(),
            layers: layers.clone(),
            stroop_manifest: args.stroop_manifest.display().to_string(),
            probe_manifest: args
                .probe_manifest
                .as_ref()
                .map(|p| p.display().to_string()),
            topk: args.topk,
            theta_high: args.theta,
            alpha_threshold: args.alpha_threshold,
            palette_hash: ctx.palette.hash(),
            model,
            config_hash: Some(hash.clone()),
            profiles: profiles.len(),
        },
        profiles,
    };
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join("profiles.ndjson");
    file.save(&path)?;
    let reference = args
        .reference_hue
        .as_deref()
        .map(load_reference_hue)
        .transpose()?;
    let summary = neuron_report(
        &file,
        args.hue_bins,
        args.alpha_threshold,
        reference.as_deref(),
        &args.out,
    )?;
    ctx.summary(
        format!(
            "analyze-neurons: {} neurons over {} layers -> {}",
            file.profiles.len(),
            layers.len(),
            args.out.display()
        ),
        summary,
    );
    Ok(())
}

fn load_reference_hue(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let values = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| anyhow!("{}: bad bin mass {l:?}", path.display()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = values.iter().sum();
    if values.is_empty() || total <= 0.0 {
        bail!("{}: reference distribution is empty", path.display());
    }
    Ok(values.into_iter().map(|v| v / total).collect())
}

fn profiles_provenance(file: &ProfilesFile) -> Provenance {
    let h = &file.header;
    let mut p = Provenance::new()
        .with("source", "analyze-neurons")
        .with("config_hash", h.config_hash.as_deref().unwrap_or("none"))
        .with("palette_hash", &h.palette_hash)
        .with("stroop_manifest", &h.stroop_manifest)
        .with(
            "probe_manifest",
            h.probe_manifest.as_deref().unwrap_or("none"),
        )
        .with("topk", h.topk)
        .with("theta_high", h.theta_high);
    if let Some(m) = &h.model {
        p.push("model", m);
    }
    p
}

/// Writes the layer-type, selectivity-band and hue artifacts for a profile
/// set and returns the machine summary.
fn neuron_report(
    file: &ProfilesFile,
    hue_bins: usize,
    alpha_threshold: f64,
    reference: Option<&[f64]>,
    out: &Path,
) -> Result<Value> {
    let prov = profiles_provenance(file).with("alpha_threshold", alpha_threshold);
    let dists = layer_type_distribution(
        file.profiles
            .iter()
            .map(|p| (p.layer.as_str(), p.neuron_type)),
    );
    write(out, "layer_types.csv", &layer_types_csv(&dists, &prov))?;
    write(
        out,
        "layer_types.svg",
        &stacked_bar_svg("Neuron types per layer", &layer_types_bars(&dists), &prov),
    )?;
    let bands = selectivity_bands(&file.profiles);
    write(
        out,
        "selectivity_bands.csv",
        &selectivity_bands_csv(&bands, &prov),
    )?;
    write(
        out,
        "selectivity_bands.svg",
        &stacked_bar_svg(
            "Color selectivity per layer",
            &selectivity_bars(&bands),
            &prov,
        ),
    )?;

    let reference_hist = match reference {
        Some(r) if r.len() != hue_bins => {
            bail!(
                "reference hue distribution has {} bins, expected {hue_bins}",
                r.len()
            )
        }
        Some(r) => Some(HueHistogram {
            mass: r.to_vec(),
            count: 1,
        }),
        None => None,
    };
    let pooled = hue_histogram(&file.profiles, hue_bins, alpha_threshold)?;
    let pooled_r = match &reference_hist {
        Some(r) if !pooled.is_empty() => pearson_histograms(&pooled, r)?,
        _ => None,
    };
    let mut hue_prov = prov.clone();
    hue_prov.push(
        "pearson_r",
        pooled_r.map_or("n/a".to_string(), |r| format!("{r:.6}")),
    );
    write(
        out,
        "hue_histogram.csv",
        &hue_histogram_csv(&pooled, reference_hist.as_ref(), &hue_prov),
    )?;
    let bins: Vec<(String, Option<f64>)> = pooled
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| {
            (
                format!("{e:.0}"),
                (!pooled.is_empty()).then(|| pooled.mass[i] * 100.0),
            )
        })
        .collect();
    let ref_pct: Option<Vec<f64>> = reference.map(|r| r.iter().map(|v| v * 100.0).collect());
    write(
        out,
        "hue_histogram.svg",
        &histogram_svg(
            "Dominant hue of color-selective neurons",
            &bins,
            ref_pct.as_deref(),
            &hue_prov,
        ),
    )?;

    let mut per_layer = Vec::new();
    for d in &dists {
        let subset: Vec<NeuronProfile> = file
            .profiles
            .iter()
            .filter(|p| p.layer == d.layer)
            .cloned()
            .collect();
        let h = hue_histogram(&subset, hue_bins, alpha_threshold)?;
        let r = match &reference_hist {
            Some(rh) if !h.is_empty() => pearson_histograms(&h, rh)?,
            _ => None,
        };
        let types: BTreeMap<&str, usize> = d.counts.iter().map(|(b, c)| (b.name(), *c)).collect();
        per_layer.push(json!({
            "layer": d.layer,
            "neurons": d.total,
            "types": types,
            "hue_selective_neurons": h.count,
            "pearson_r": r,
        }));
    }
    let summary = json!({
        "command": "analyze-neurons",
        "profiles": file.profiles.len(),
        "config_hash": file.header.config_hash,
        "model": file.header.model,
        "hue_bins": hue_bins,
        "alpha_threshold": alpha_threshold,
        "hue_selective_neurons": pooled.count,
        "pearson_r": pooled_r,
        "layers": per_layer,
    });
    write(
        out,
        "summary.json",
        &(serde_json::to_string_pretty(&summary)? + "\n"),
    )?;
    Ok(summary)
}

fn write(dir: &Path, name: &str, body: &str) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, body).with_context(|| format!("writing {}", p.display()))
}

fn first_format(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let first = text.lines().next().unwrap_or("");
    let v: Value = serde_json::from_str(first)
        .with_context(|| format!("{}: header line is not JSON", path.display()))?;
    Ok(v.get("format")
        .and_then(Value::as_str)
        .unwrap_or("")
        .to_string())
}

fn resolve_manifest(given: Option<&Path>, recorded: &str, results: &Path) -> Result<PathBuf> {
    if let Some(p) = given {
        return Ok(p.to_path_buf());
    }
    let p = PathBuf::from(recorded);
    if p.exists() {
        return Ok(p);
    }
    let beside = manifest_dir(results).join(&p);
    if beside.exists() {
        return Ok(beside);
    }
    bail!("manifest {recorded} named in the results header was not found; pass --manifest")
}

fn report(ctx: &Ctx, args: &ReportArgs) -> Result<()> {
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let format = first_format(&args.results)?;
    if format == PROFILES_FORMAT || args.kind == ReportKind::Neurons {
        let file = ProfilesFile::load(&args.results)?;
        let reference = args
            .reference_hue
            .as_deref()
            .map(load_reference_hue)
            .transpose()?;
        let bins = args
            .hue_bins
            .or(reference.as_ref().map(Vec::len))
            .unwrap_or(12);
        let alpha = args.alpha_threshold.unwrap_or(file.header.alpha_threshold);
        let summary = neuron_report(&file, bins, alpha, reference.as_deref(), &args.out)?;
        ctx.summary(
            format!(
                "report: neuron tables for {} profiles -> {}",
                file.profiles.len(),
                args.out.display()
            ),
            summary,
        );
        return Ok(());
    }
    let results = ResultsFile::load(&args.results)?;
    let mpath = resolve_manifest(
        args.manifest.as_deref(),
        &results.header.manifest,
        &args.results,
    )?;
    let manifest = DatasetManifest::load(&mpath)?;
    let kind = match args.kind {
        ReportKind::Auto => match results.header.manifest_kind {
            DatasetKind::Shapes => ReportKind::Chromaticity,
            DatasetKind::Stroop => ReportKind::Stroop,
        },
        k => k,
    };
    let h = &results.header;
    let mut prov = Provenance::new()
        .with("source", "run-probe")
        .with("config_hash", h.config_hash.as_deref().unwrap_or("none"))
        .with("master_seed", h.master_seed)
        .with("palette_hash", &h.palette_hash)
        .with(
            "template",
            format!("{} ({})", h.template_id, h.template_text),
        )
        .with("records", h.records);
    if let Some(m) = &h.model {
        prov.push("model", m);
    }
    let files = match kind {
        ReportKind::Chromaticity => {
            prov.push("pooling", "all valid background/object term pairs per cell");
            let t = aggregate_chromaticity(&results.predictions, &manifest)?;
            write(&args.out, "chromaticity.csv", &chromaticity_csv(&t, &prov))?;
            write(
                &args.out,
                "chromaticity_pivot.csv",
                &chromaticity_pivot_csv(&t, &prov),
            )?;
            write(
                &args.out,
                "chromaticity.svg",
                &stacked_bar_svg(
                    "Label assignment by chromaticity",
                    &chromaticity_bars(&t),
                    &prov,
                ),
            )?;
            vec![
                "chromaticity.csv",
                "chromaticity_pivot.csv",
                "chromaticity.svg",
            ]
        }
        ReportKind::Stroop => {
            prov.push("white_background", h.white_background);
            let t = aggregate_stroop(&results.predictions, &manifest)?;
            write(&args.out, "stroop.csv", &stroop_csv(&t, &prov))?;
            write(
                &args.out,
                "stroop.svg",
                &stacked_bar_svg("Stroop answers by font color", &stroop_bars(&t), &prov),
            )?;
            vec!["stroop.csv", "stroop.svg"]
        }
        ReportKind::Auto | ReportKind::Neurons => unreachable!(),
    };
    ctx.summary(
        format!("report: {} -> {}", files.join(", "), args.out.display()),
        json!({
            "command": "report",
            "records": results.predictions.len(),
            "files": files,
            "out": args.out,
        }),
    );
    Ok(())
}

fn prompts(ctx: &Ctx, args: &PromptsArgs) -> Result<()> {
    let templates = ctx.templates()?;
    let Some(id) = &args.template_id else {
        for t in &templates {
            println!("{}\t{}", t.id, t.text);
        }
        return Ok(());
    };
    let t = find_template(&templates, id)?;
    let mut body = String::new();
    for term in ColorTerm::ALL {
        if ctx.porcelain {
            body.push_str(&json!({"label": ctx.palette.label(term), "prompt": t.instantiate(term, &ctx.palette)}).to_string());
        } else {
            body.push_str(&t.instantiate(term, &ctx.palette));
        }
        body.push('\n');
    }
    match &args.out {
        Some(p) => {
            fs::write(p, &body).with_context(|| format!("writing {}", p.display()))?;
            let labels: String = ColorTerm::ALL
                .iter()
                .map(|&t| format!("{}\n", ctx.palette.label(t)))
                .collect();
            let lp = p.with_extension("labels");
            fs::write(&lp, labels).with_context(|| format!("writing {}", lp.display()))?;
            ctx.progress(format!(
                "11 prompts -> {} (labels in {})",
                p.display(),
                lp.display()
            ));
        }
        None => print!("{body}"),
    }
    if let Some(src) = &ctx.palette_source {
        ctx.progress(format!("palette override {}", src.display()));
    }
    Ok(())
}
