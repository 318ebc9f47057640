//! Command-line surface. Every command writes machine output atomically and
//! returns a stable exit code: 0 success, 2 bad input, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isoflop::{fit_all_cells, fit_budget_3d, Isoflop2D, Isoflop3D, Optimum, ParamBasis};
use crate::law1::{fit_law1, LawOneOptions, LawOneParams};
use crate::law2::{
    fit_law2, select_residual_model, LawTwoOptions, LawTwoParams, ResidualFitMode, ResidualModelReport,
    ResidualVariant,
};
use crate::multilingual::{
    estimate_parity, language_report, mix_weights, parse_parallel_tsv, with_inflated, LanguageReport, ParityTable,
};
use crate::optimizer::{max_starts_from_env, DEFAULT_START_SEED};
use crate::plot::{self, PlotSpec};
use crate::recipes::{
    approx_compute, bytes_for_budget, count_global_params, inference_flops_per_byte, latent_recipe,
    subword_recipe, training_flops, ArchRecipe, FlopsBreakdown, FlopsConfig, DEFAULT_CONTEXT_BYTES,
    DEFAULT_LOCAL_WINDOW_BYTES, MAX_SCALE,
};
use crate::records::{read_runs, DEFAULT_LANGUAGE, sorted_distinct, write_csv, write_jsonl, Family, RunRecord};
use crate::synth::{generate_grid, TruthSpec};

/// Default subword vocabulary when a recipe needs one.
pub const DEFAULT_VOCAB: u64 = 128_000;

#[derive(Debug, Parser)]
#[command(name = "tokescale", version, about = "Scaling-law fitting and planning across tokenizer compression rates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit IsoFLOP parabolas (per budget and compression) or surfaces (per budget).
    FitIsoflop(FitIsoflopArgs),
    /// Fit the optimal-data law (stage 1) or the loss law (stage 2).
    FitLaws(FitLawsArgs),
    /// Compute-optimal configuration for a budget.
    Plan(PlanArgs),
    /// Per-byte inference FLOPs of a recipe.
    Flops(FlopsArgs),
    /// Architecture recipe and parameter counts.
    Recipe(RecipeArgs),
    /// Byte parity of a parallel corpus.
    Parity(ParityArgs),
    /// Synthetic run grid from known laws.
    Synth(SynthArgs),
    /// Validate a file written by this tool.
    SchemaCheck(SchemaCheckArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Latent,
    Subword,
}

impl FamilyArg {
    fn family(self) -> Family {
        match self {
            FamilyArg::Latent => Family::LatentEntropy,
            FamilyArg::Subword => Family::Subword,
        }
    }

    fn matches(self, f: Family) -> bool {
        match self {
            FamilyArg::Latent => f.is_latent(),
            FamilyArg::Subword => f == Family::Subword,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IsoflopMode {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BasisArg {
    Latent,
    Total,
}

impl From<BasisArg> for ParamBasis {
    fn from(b: BasisArg) -> Self {
        match b {
            BasisArg::Latent => ParamBasis::Latent,
            BasisArg::Total => ParamBasis::Total,
        }
    }
}

/// Budgets and other magnitudes in scientific notation, e.g. `1e20`.
fn positive(raw: &str) -> std::result::Result<f64, String> {
    let v: f64 = raw.trim().parse().map_err(|_| format!("`{raw}` is not a number"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{raw}` must be positive and finite"))
    }
}

#[derive(Debug, Args)]
struct FitIsoflopArgs {
    #[arg(long)]
    records: PathBuf,
    /// Restrict to one budget; all budgets otherwise.
    #[arg(long, value_parser = positive)]
    budget: Option<f64>,
    /// Restrict 2D fits to one compression.
    #[arg(long, value_parser = positive)]
    compression: Option<f64>,
    #[arg(long, value_enum, default_value = "2d")]
    mode: IsoflopMode,
    #[arg(long, value_enum)]
    family: Option<FamilyArg>,
    /// Parameter count used for N* (2D) or bytes-per-parameter (3D).
    #[arg(long, value_enum, default_value = "latent")]
    basis: BasisArg,
    #[arg(long)]
    out: PathBuf,
    /// Also write plot data (JSON; a sibling `.csv` holds the series).
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ResidualArg {
    Mean,
    ConstT,
    ComputeT,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Nested,
    Joint,
}

#[derive(Debug, Args)]
struct FitLawsArgs {
    /// Run records (CSV/JSONL) or a fit-isoflop output file.
    #[arg(long)]
    records: PathBuf,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    stage: u8,
    #[arg(long, value_enum, default_value = "latent")]
    family: FamilyArg,
    #[arg(long, value_enum, default_value = "compute-t")]
    residual: ResidualArg,
    /// Held-out budget for `--residual auto`; the largest budget by default.
    #[arg(long, value_parser = positive)]
    holdout: Option<f64>,
    /// How the residual forms share their constants.
    #[arg(long, value_enum, default_value = "nested")]
    residual_mode: ModeArg,
    /// Pin β (stage 1), e.g. to 1 for a fixed-compression family.
    #[arg(long)]
    fixed_beta: Option<f64>,
    /// Multi-start cap; defaults to TOKESCALE_MAX_STARTS or 2000.
    #[arg(long)]
    max_starts: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_START_SEED)]
    seed: u64,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PlanArgs {
    #[arg(long)]
    law1: PathBuf,
    #[arg(long)]
    law2: PathBuf,
    #[arg(long, value_parser = positive)]
    budget: f64,
    /// A compression rate, or `optimal` to use the loss-minimizing rate.
    #[arg(long, default_value = "optimal")]
    compression: String,
    #[arg(long, value_enum, default_value = "latent")]
    family: FamilyArg,
    #[arg(long, default_value_t = DEFAULT_VOCAB)]
    vocab: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RecipeSel {
    #[arg(long, value_enum, default_value = "latent")]
    family: FamilyArg,
    #[arg(long)]
    scale: u32,
    #[arg(long, default_value_t = DEFAULT_VOCAB)]
    vocab: u64,
}

impl RecipeSel {
    fn recipe(&self) -> Result<ArchRecipe> {
        match self.family {
            FamilyArg::Latent => latent_recipe(self.scale),
            FamilyArg::Subword => subword_recipe(self.scale, self.vocab),
        }
    }
}

#[derive(Debug, Args)]
struct FlopsArgs {
    #[command(flatten)]
    recipe: RecipeSel,
    #[arg(long, value_parser = positive)]
    compression: f64,
    #[arg(long, default_value_t = DEFAULT_CONTEXT_BYTES)]
    context_bytes: u64,
    #[arg(long, default_value_t = DEFAULT_LOCAL_WINDOW_BYTES)]
    local_window: u64,
    #[arg(long)]
    no_attention: bool,
    /// Also report training FLOPs over this many bytes.
    #[arg(long, value_parser = positive)]
    bytes: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RecipeArgs {
    #[command(flatten)]
    recipe: RecipeSel,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ParityArgs {
    /// TSV: sentence_id, language, text.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value = DEFAULT_LANGUAGE)]
    base: String,
    /// Add a byte-inflated copy of this language as `<lang>-x2`.
    #[arg(long)]
    inflate: Option<String>,
    /// 3D fit-isoflop output; adds a per-language report.
    #[arg(long)]
    isoflop: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Jsonl,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "latent")]
    family: FamilyArg,
    /// Ground truth as JSON; the family's published constants otherwise.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long, value_parser = positive, value_delimiter = ',', default_value = "5e18,1e19,5e19,1e20,5e20,2e21")]
    budgets: Vec<f64>,
    #[arg(long, value_parser = positive, value_delimiter = ',', default_value = "1,2,4,6,8,12")]
    compressions: Vec<f64>,
    #[arg(long, default_value_t = 7)]
    models_per_cell: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long)]
    curvature: Option<f64>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, value_enum, default_value = "csv")]
    format: FormatArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SchemaCheckArgs {
    files: Vec<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let outcome = match cli.command {
        Command::FitIsoflop(a) => cmd_fit_isoflop(&a),
        Command::FitLaws(a) => cmd_fit_laws(&a),
        Command::Plan(a) => cmd_plan(&a),
        Command::Flops(a) => cmd_flops(&a),
        Command::Recipe(a) => cmd_recipe(&a),
        Command::Parity(a) => cmd_parity(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::SchemaCheck(a) => cmd_schema_check(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Writes through a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    match out {
        Some(path) => write_json(path, value),
        None => {
            println!("{}", serde_json::to_string_pretty(value)?);
            Ok(())
        }
    }
}

/// Writes a plot spec and its CSV series next to it.
fn write_plot(path: &Path, spec: &PlotSpec) -> Result<()> {
    spec.validate()?;
    write_json(path, spec)?;
    write_atomic(&path.with_extension("csv"), spec.to_csv().as_bytes())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = std::fs::File::open(path)?;
    Ok(serde_json::from_reader(std::io::BufReader::new(file))?)
}

/// Every JSON output carries a `kind` tag next to its payload.
#[derive(Debug, Serialize, Deserialize)]
struct Tagged<T> {
    kind: String,
    #[serde(flatten)]
    body: T,
}

impl<T> Tagged<T> {
    fn new(kind: &str, body: T) -> Self {
        Tagged { kind: kind.into(), body }
    }
}

fn expect_kind<T>(tagged: Tagged<T>, kind: &str, path: &Path) -> Result<T> {
    if tagged.kind == kind {
        Ok(tagged.body)
    } else {
        Err(Error::validation(
            "kind",
            format!("{} holds `{}`, expected `{kind}`", path.display(), tagged.kind),
        ))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellFailure {
    pub budget: f64,
    pub compression: f64,
    pub error: String,
    pub numerical: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LanguageFit {
    pub language: String,
    pub fit: Isoflop3D,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode")]
pub enum IsoflopFits {
    #[serde(rename = "2d")]
    TwoD { fits: Vec<Isoflop2D>, failures: Vec<CellFailure> },
    #[serde(rename = "3d")]
    ThreeD { fits: Vec<LanguageFit>, failures: Vec<CellFailure> },
}

impl IsoflopFits {
    pub fn optima(&self) -> Vec<Optimum> {
        match self {
            IsoflopFits::TwoD { fits, .. } => fits.iter().map(Optimum::from).collect(),
            IsoflopFits::ThreeD { fits, .. } => fits.iter().map(|f| Optimum::from(&f.fit)).collect(),
        }
    }
}

fn sci(x: f64) -> String {
    format!("{x:.3e}")
}

fn require_budget(records: &[RunRecord], budget: f64) -> Result<()> {
    if records.iter().any(|r| r.budget_flops == budget) {
        return Ok(());
    }
    let available: Vec<String> = sorted_distinct(records.iter().map(|r| r.budget_flops))
        .into_iter()
        .map(sci)
        .collect();
    Err(Error::validation(
        "budget",
        format!("{} not in data; available budgets: {}", sci(budget), available.join(", ")),
    ))
}

fn cmd_fit_isoflop(a: &FitIsoflopArgs) -> Result<i32> {
    let mut records = read_runs(&a.records)?;
    if let Some(f) = a.family {
        records.retain(|r| f.matches(r.family));
    }
    if records.is_empty() {
        return Err(Error::InsufficientData("no records for the selected family".into()));
    }
    if let Some(c) = a.budget {
        require_budget(&records, c)?;
        records.retain(|r| r.budget_flops == c);
    }
    let basis = ParamBasis::from(a.basis);
    let (output, plot_spec) = match a.mode {
        IsoflopMode::TwoD => {
            if let Some(t) = a.compression {
                records.retain(|r| r.compression == t);
                if records.is_empty() {
                    return Err(Error::validation("compression", format!("{t} not in data")));
                }
            }
            let (fits, failed) = fit_all_cells(&records, None, basis);
            println!("{:>10} {:>6} {:>12} {:>12} {:>8} {:>8}", "budget", "T", "B*", "N*", "rho*", "L*");
            for f in &fits {
                println!(
                    "{:>10} {:>6} {:>12} {:>12} {:>8.1} {:>8.4}",
                    sci(f.budget),
                    f.compression,
                    sci(f.opt_bytes),
                    f.opt_params.map(sci).unwrap_or_default(),
                    f.opt_bpp.unwrap_or(f64::NAN),
                    f.opt_loss
                );
            }
            let failures = failures(failed);
            let spec = plot::isoflop2d(&fits, 1.5);
            (IsoflopFits::TwoD { fits, failures }, spec)
        }
        IsoflopMode::ThreeD => {
            let languages: Vec<String> = {
                let mut l: Vec<String> = records.iter().map(|r| r.language.clone()).collect();
                l.sort();
                l.dedup();
                l
            };
            let mut fits = Vec::new();
            let mut failed = Vec::new();
            for lang in &languages {
                let subset: Vec<RunRecord> = records.iter().filter(|r| &r.language == lang).cloned().collect();
                for c in sorted_distinct(subset.iter().map(|r| r.budget_flops)) {
                    match fit_budget_3d(&subset, c, basis) {
                        Ok(fit) => fits.push(LanguageFit { language: lang.clone(), fit }),
                        Err(e) => failed.push((c, f64::NAN, e)),
                    }
                }
            }
            println!("{:>10} {:>10} {:>8} {:>8} {:>8}", "language", "budget", "rho*", "T*", "L*");
            for f in &fits {
                println!(
                    "{:>10} {:>10} {:>8.1} {:>8.2} {:>8.4}",
                    f.language,
                    sci(f.fit.budget),
                    f.fit.opt_bpp,
                    f.fit.opt_compression,
                    f.fit.opt_loss
                );
            }
            let spec = fits
                .first()
                .map(|f| plot::isoflop3d_heatmap(&f.fit, (1.0, 16.0), (4.0, 1000.0), 25))
                .unwrap_or_else(|| plot::isoflop2d(&[], 1.5));
            (IsoflopFits::ThreeD { fits, failures: failures(failed) }, spec)
        }
    };
    write_json(&a.out, &Tagged::new("isoflop-fits", &output))?;
    if let Some(p) = &a.plot {
        write_plot(p, &plot_spec)?;
    }
    let (n_fits, fails) = match &output {
        IsoflopFits::TwoD { fits, failures } => (fits.len(), failures),
        IsoflopFits::ThreeD { fits, failures } => (fits.len(), failures),
    };
    for f in fails {
        eprintln!("fit failed at C={} T={}: {}", sci(f.budget), f.compression, f.error);
    }
    if fails.iter().any(|f| f.numerical) || n_fits == 0 {
        return Ok(if fails.iter().all(|f| f.numerical) { 3 } else { 2 });
    }
    Ok(if fails.is_empty() { 0 } else { 2 })
}

fn failures(failed: Vec<(f64, f64, Error)>) -> Vec<CellFailure> {
    failed
        .into_iter()
        .map(|(budget, compression, e)| CellFailure {
            budget,
            compression,
            numerical: e.is_numerical(),
            error: e.to_string(),
        })
        .collect()
}

/// Optima from a fit-isoflop file, or fitted on the fly from run records.
fn load_optima(path: &Path, family: FamilyArg) -> Result<Vec<Optimum>> {
    let is_fit_file = path.extension().is_some_and(|e| e == "json")
        && std::fs::read(path)?.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{')
        && serde_json::from_slice::<serde_json::Value>(&std::fs::read(path)?)
            .ok()
            .and_then(|v| v.get("kind").and_then(|k| k.as_str().map(|s| s == "isoflop-fits")))
            .unwrap_or(false);
    if is_fit_file {
        let fits: IsoflopFits = expect_kind(read_json(path)?, "isoflop-fits", path)?;
        return Ok(fits.optima());
    }
    let records: Vec<RunRecord> = read_runs(path)?.into_iter().filter(|r| family.matches(r.family)).collect();
    let (fits, failed) = fit_all_cells(&records, None, ParamBasis::Latent);
    for (c, t, e) in &failed {
        eprintln!("skipping cell C={} T={t}: {e}", sci(*c));
    }
    Ok(fits.iter().map(Optimum::from).collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct LawTwoOutput {
    #[serde(flatten)]
    params: LawTwoParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    selection: Option<ResidualModelReport>,
}

fn ci_text(ci: Option<&crate::optimizer::ConfidenceInterval>) -> String {
    ci.map(|c| format!("[{:.4}, {:.4}]", c.low, c.high)).unwrap_or_else(|| "-".into())
}

fn cmd_fit_laws(a: &FitLawsArgs) -> Result<i32> {
    let optima = load_optima(&a.records, a.family)?;
    let max_starts = a.max_starts.unwrap_or_else(max_starts_from_env);
    let budgets = sorted_distinct(optima.iter().map(|o| o.budget));
    match a.stage {
        1 => {
            let opts = LawOneOptions { max_starts, seed: a.seed, level: a.level, fixed_beta: a.fixed_beta };
            let law = fit_law1(&optima, a.family.family(), &opts)?;
            let iv = law.intervals.as_ref();
            println!("{:<6} {:>10} {:>22}", "param", "estimate", "interval");
            println!(
                "{:<6} {:>10.4} {:>22}",
                "B0",
                law.b0,
                iv.map(|i| format!("[{:.4}, {:.4}]", i.b0_exp.0, i.b0_exp.1)).unwrap_or_else(|| "-".into())
            );
            println!("{:<6} {:>10.4} {:>22}", "alpha", law.alpha, ci_text(iv.map(|i| &i.alpha)));
            println!("{:<6} {:>10.4} {:>22}", "beta", law.beta, ci_text(iv.and_then(|i| i.beta.as_ref())));
            println!("{:<6} {:>10.4e}", "N0", law.n0);
            write_json(&a.out, &Tagged::new("law1", &law))?;
            if let Some(p) = &a.plot {
                let ts = sorted_distinct(optima.iter().map(|o| o.compression));
                write_plot(p, &plot::law_fit_lines(&law, &ts, (budgets[0], budgets[budgets.len() - 1])))?;
            }
        }
        _ => {
            let opts = LawTwoOptions {
                max_starts,
                seed: a.seed,
                level: a.level,
                mode: match a.residual_mode {
                    ModeArg::Nested => ResidualFitMode::Nested,
                    ModeArg::Joint => ResidualFitMode::Joint,
                },
            };
            let (variant, selection) = match a.residual {
                ResidualArg::Mean => (ResidualVariant::Mean, None),
                ResidualArg::ConstT => (ResidualVariant::ConstT, None),
                ResidualArg::ComputeT => (ResidualVariant::ComputeT, None),
                ResidualArg::Auto => {
                    let holdout = a
                        .holdout
                        .or_else(|| budgets.last().copied())
                        .ok_or_else(|| Error::InsufficientData("no optima".into()))?;
                    let report = select_residual_model(&optima, holdout, &opts)?;
                    print!("{}", report.to_csv());
                    (report.selected, Some(report))
                }
            };
            let law = fit_law2(&optima, a.family.family(), variant, &opts)?;
            let iv = law.intervals.as_ref();
            println!("{:<6} {:>10} {:>22}", "param", "estimate", "interval");
            println!(
                "{:<6} {:>10.4} {:>22}",
                "L0",
                law.l0,
                iv.map(|i| format!("[{:.4}, {:.4}]", i.l0_exp.0, i.l0_exp.1)).unwrap_or_else(|| "-".into())
            );
            println!("{:<6} {:>10.4} {:>22}", "gamma", law.gamma, ci_text(iv.map(|i| &i.gamma)));
            println!("{:<6} {:>10.4}", "E", law.e);
            for (name, v) in [("F", law.f), ("T0", law.t0), ("delta", law.delta)] {
                if let Some(v) = v {
                    println!("{name:<6} {v:>10.4}");
                }
            }
            if let Some(p) = &a.plot {
                write_plot(p, &plot::sensitivity_curve(&law, &budgets, (1.0, 16.0)))?;
            }
            write_json(&a.out, &Tagged::new("law2", &LawTwoOutput { params: law, selection }))?;
        }
    }
    Ok(0)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Plan {
    pub family: Family,
    pub budget: f64,
    pub compression: f64,
    pub compression_optimal: bool,
    pub opt_bytes: f64,
    pub opt_params: f64,
    pub opt_bpp: f64,
    pub predicted_loss: f64,
    /// Loss above the optimal-compression plan at the same budget, if known.
    pub loss_gap: Option<f64>,
    pub recipe: ArchRecipe,
    /// Bytes that spend the budget exactly with the chosen recipe.
    pub recipe_bytes: f64,
    pub recipe_bpp: f64,
    pub recomputed_budget: f64,
    pub budget_rel_error: f64,
}

fn cmd_plan(a: &PlanArgs) -> Result<i32> {
    let law1: LawOneParams = expect_kind(read_json(&a.law1)?, "law1", &a.law1)?;
    let law2: LawTwoOutput = expect_kind(read_json(&a.law2)?, "law2", &a.law2)?;
    let law2 = law2.params;
    let c = a.budget;
    let (t, optimal) = match a.compression.trim() {
        "optimal" => (law2.optimal_compression(c)?, true),
        raw => (positive(raw).map_err(|m| Error::validation("compression", m))?, false),
    };
    if t < 1.0 {
        return Err(Error::validation("compression", format!("must be >= 1, got {t}")));
    }
    let n_star = law1.predict_params(c, t);
    let b_star = law1.predict_data(c, t);
    let (lo, hi) = (count_global_params(1), count_global_params(MAX_SCALE));
    if n_star < lo {
        return Err(Error::Domain(format!(
            "budget {} too small: N* = {} is below the smallest recipe ({} at scale 1)",
            sci(c),
            sci(n_star),
            sci(lo)
        )));
    }
    if n_star > hi {
        return Err(Error::Domain(format!(
            "budget {} too large: N* = {} exceeds the largest recipe ({} at scale {MAX_SCALE})",
            sci(c),
            sci(n_star),
            sci(hi)
        )));
    }
    let scale = (1..=MAX_SCALE)
        .find(|&s| count_global_params(s) >= n_star)
        .unwrap_or(MAX_SCALE);
    let recipe = match a.family {
        FamilyArg::Latent => latent_recipe(scale)?,
        FamilyArg::Subword => subword_recipe(scale, a.vocab)?,
    };
    let split = bytes_for_budget(c, recipe.params_global, t)?;
    let recomputed = approx_compute(recipe.params_global, split.bytes, t)?;
    let predicted_loss = law2.predict_loss(c, t);
    let loss_gap = law2.optimal_compression(c).ok().map(|t_opt| predicted_loss - law2.predict_loss(c, t_opt));
    let plan = Plan {
        family: a.family.family(),
        budget: c,
        compression: t,
        compression_optimal: optimal,
        opt_bytes: b_star,
        opt_params: n_star,
        opt_bpp: b_star / n_star,
        predicted_loss,
        loss_gap,
        recipe,
        recipe_bytes: split.bytes,
        recipe_bpp: split.bytes_per_param,
        recomputed_budget: recomputed,
        budget_rel_error: (recomputed - c).abs() / c,
    };
    println!("budget       {}", sci(plan.budget));
    println!("compression  {:.3}{}", plan.compression, if optimal { " (optimal)" } else { "" });
    println!("B*           {}", sci(plan.opt_bytes));
    println!("N*           {}", sci(plan.opt_params));
    println!("rho*         {:.1}", plan.opt_bpp);
    println!("loss         {:.4}", plan.predicted_loss);
    println!("scale        {} ({} global params)", scale, sci(plan.recipe.params_global));
    println!("bytes        {}", sci(plan.recipe_bytes));
    println!("recomputed C {}", sci(plan.recomputed_budget));
    if let Some(out) = &a.out {
        write_json(out, &Tagged::new("plan", &plan))?;
    }
    Ok(0)
}

#[derive(Debug, Serialize, Deserialize)]
struct FlopsOutput {
    recipe: ArchRecipe,
    compression: f64,
    breakdown: FlopsBreakdown,
    #[serde(default)]
    training_bytes: Option<f64>,
    #[serde(default)]
    training_flops: Option<f64>,
}

fn cmd_flops(a: &FlopsArgs) -> Result<i32> {
    let recipe = a.recipe.recipe()?;
    let config = FlopsConfig {
        context_bytes: a.context_bytes,
        include_attention: !a.no_attention,
        local_window_bytes: a.local_window,
        ..FlopsConfig::default()
    };
    let breakdown = inference_flops_per_byte(&recipe, a.compression, &config)?;
    let training = a.bytes.map(|b| training_flops(&recipe, b, a.compression, &config)).transpose()?;
    let out = FlopsOutput { recipe, compression: a.compression, breakdown, training_bytes: a.bytes, training_flops: training };
    emit_json(a.out.as_deref(), &Tagged::new("flops", &out))?;
    Ok(0)
}

fn cmd_recipe(a: &RecipeArgs) -> Result<i32> {
    let recipe = a.recipe.recipe()?;
    emit_json(a.out.as_deref(), &Tagged::new("recipe", &recipe))?;
    Ok(0)
}

#[derive(Debug, Serialize, Deserialize)]
struct ParityOutput {
    parity: ParityTable,
    mix_weights: std::collections::BTreeMap<String, f64>,
    #[serde(default)]
    report: Option<LanguageReport>,
}

fn cmd_parity(a: &ParityArgs) -> Result<i32> {
    let mut parallel = parse_parallel_tsv(std::fs::File::open(&a.corpus)?)?;
    if let Some(lang) = &a.inflate {
        parallel = with_inflated(&parallel, lang);
    }
    let parity = estimate_parity(&parallel, &a.base)?;
    let weights = mix_weights(&parity)?;
    let report = match &a.isoflop {
        Some(path) => {
            let fits: IsoflopFits = expect_kind(read_json(path)?, "isoflop-fits", path)?;
            let IsoflopFits::ThreeD { fits, .. } = fits else {
                return Err(Error::validation("isoflop", "expected 3d fits"));
            };
            let pairs: Vec<(String, Isoflop3D)> = fits.into_iter().map(|f| (f.language, f.fit)).collect();
            Some(language_report(&pairs, &parity)?)
        }
        None => None,
    };
    for (lang, p) in &parity.entries {
        println!("{lang:<16} {p:>8.4} {:>8.4}", weights[lang]);
    }
    if let Some(r) = &report {
        print!("{}", r.to_csv());
        if let Some(p) = &a.plot {
            write_plot(p, &plot::parity_scatter(r))?;
        }
    }
    let out = ParityOutput { parity, mix_weights: weights, report };
    if let Some(path) = &a.out {
        write_json(path, &Tagged::new("parity", &out))?;
    }
    Ok(0)
}

fn cmd_synth(a: &SynthArgs) -> Result<i32> {
    let mut spec = match &a.truth {
        Some(path) => read_json::<TruthSpec>(path)?,
        None => match a.family {
            FamilyArg::Latent => TruthSpec::latent(),
            FamilyArg::Subword => TruthSpec::subword(),
        },
    };
    spec.noise_sigma = a.noise;
    spec.seed = a.seed;
    if let Some(k) = a.curvature {
        spec.curvature = k;
    }
    let budgets: Vec<f64> = a.budgets.clone();
    let compressions: Vec<f64> = a.compressions.clone();
    let records = generate_grid(&spec, &budgets, &compressions, a.models_per_cell)?;
    let mut buf = Vec::new();
    match a.format {
        FormatArg::Csv => write_csv(&records, &mut buf)?,
        FormatArg::Jsonl => write_jsonl(&records, &mut buf)?,
    }
    write_atomic(&a.out, &buf)?;
    println!("wrote {} records to {}", records.len(), a.out.display());
    Ok(0)
}

/// Checks one file; returns what it held.
pub fn schema_check(path: &Path) -> Result<String> {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("");
    if ext != "json" {
        let bytes = std::fs::read(path)?;
        if bytes.starts_with(b"series,x,y,value") {
            let mut reader = csv::Reader::from_reader(bytes.as_slice());
            for row in reader.records() {
                let row = row?;
                for field in [1, 2] {
                    row[field].parse::<f64>().map_err(|_| Error::validation("x/y", format!("bad number `{}`", &row[field])))?;
                }
            }
            return Ok("plot-series".into());
        }
        let n = read_runs(path)?.len();
        return Ok(format!("records ({n})"));
    }
    let value: serde_json::Value = read_json(path)?;
    let kind = value
        .get("kind")
        .and_then(|k| k.as_str())
        .ok_or_else(|| Error::MissingField("kind".into()))?
        .to_string();
    match kind.as_str() {
        "isoflop-fits" => drop(serde_json::from_value::<Tagged<IsoflopFits>>(value)?),
        "law1" => drop(serde_json::from_value::<Tagged<LawOneParams>>(value)?),
        "law2" => drop(serde_json::from_value::<Tagged<LawTwoOutput>>(value)?),
        "plan" => drop(serde_json::from_value::<Tagged<Plan>>(value)?),
        "flops" => drop(serde_json::from_value::<Tagged<FlopsOutput>>(value)?),
        "recipe" => drop(serde_json::from_value::<Tagged<ArchRecipe>>(value)?),
        "parity" => drop(serde_json::from_value::<Tagged<ParityOutput>>(value)?),
        "isoflop2d" | "isoflop3d-heatmap" | "law-fit-lines" | "sensitivity-curve" | "parity-scatter" => {
            serde_json::from_value::<PlotSpec>(value)?.validate()?
        }
        other => return Err(Error::validation("kind", format!("unknown kind `{other}`"))),
    }
    Ok(kind)
}

fn cmd_schema_check(a: &SchemaCheckArgs) -> Result<i32> {
    if a.files.is_empty() {
        return Err(Error::InsufficientData("no files given".into()));
    }
    let mut code = 0;
    for path in &a.files {
        match schema_check(path) {
            Ok(kind) => println!("ok      {} ({kind})", path.display()),
            Err(e) => {
                println!("invalid {}: {e}", path.display());
                code = 2;
            }
        }
    }
    Ok(code)
}
