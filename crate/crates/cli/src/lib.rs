// Copyright 2026 The DataSynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


//! The `datasynth` command line.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use datasynth_core::describer::{describe, DatasetDescription, Mode, PrivacyParams, DEFAULT_EPSILON, DEFAULT_HISTOGRAM_SIZE};
use datasynth_core::generator::{generate, GenerationRequest};
use datasynth_core::ingest::{load_csv, AttributeOverride, LoadOptions, Table, DEFAULT_CATEGORICAL_THRESHOLD};
use datasynth_core::inspector::{compare, ComparisonReport};
use datasynth_core::linker::{
    estimate_join, generate_linked, read_signatures, write_signatures, JoinEstimate, Signature, SignatureParams,
    DEFAULT_NGRAM, DEFAULT_SEPARATOR, DEFAULT_SIGNATURE_LEN, DEFAULT_THRESHOLD,
};
use datasynth_core::probegen::{run_probe, Preset, ProbeConfig};
use datasynth_service::{ServiceConfig, DEFAULT_ADDR};

/// Usage errors exit with this status, runtime failures with 1.
pub const USAGE_EXIT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "datasynth", version, about = "Differentially private synthetic tabular data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a description from a CSV file.
    Describe(DescribeArgs),
    /// Sample a synthetic CSV from a description.
    Generate(GenerateArgs),
    /// Compare an input CSV with a synthetic one.
    Compare(CompareArgs),
    /// Signatures, join estimates and linked table pairs.
    #[command(subcommand)]
    Link(LinkCommand),
    /// Generate probe data from a description and a probe config.
    Probe(ProbeArgs),
    /// Run the local HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct DescribeArgs {
    pub input: PathBuf,
    #[arg(short, long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = Mode::Correlated)]
    pub mode: Mode,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    #[arg(long, default_value_t = DEFAULT_HISTOGRAM_SIZE)]
    pub histogram_size: usize,
    #[arg(long, default_value_t = DEFAULT_CATEGORICAL_THRESHOLD)]
    pub categorical_threshold: usize,
    /// Random when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON list of `{"name", "type", "categorical"}` overrides.
    #[arg(long)]
    pub overrides: Option<PathBuf>,
    #[command(flatten)]
    pub missing: MissingArgs,
}

#[derive(Debug, Args)]
pub struct MissingArgs {
    /// Cell read as missing besides the empty cell (repeatable; default `N/A`).
    #[arg(long = "missing-token", value_name = "TOKEN")]
    pub tokens: Vec<String>,
}

impl MissingArgs {
    fn load_options(&self, categorical_threshold: usize, overrides: Vec<AttributeOverride>) -> LoadOptions {
        let mut options = LoadOptions {
            categorical_threshold,
            overrides,
            ..LoadOptions::default()
        };
        if !self.tokens.is_empty() {
            options.missing_tokens = self.tokens.clone();
        }
        options
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub description: PathBuf,
    /// Standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Random when absent.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to the input size recorded in the description.
    #[arg(long)]
    pub num_tuples: Option<usize>,
    /// Attribute to sample uniformly (repeatable).
    #[arg(long, value_name = "ATTR")]
    pub uniform: Vec<String>,
    /// A lower-fidelity mode than the description's.
    #[arg(long)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub no_missing_injection: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub input: PathBuf,
    pub synthetic: PathBuf,
    #[arg(short, long)]
    pub description: PathBuf,
    /// Report JSON; only the text summary is printed when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub missing: MissingArgs,
}

#[derive(Debug, Args)]
pub struct SignatureArgs {
    #[arg(long, default_value_t = DEFAULT_NGRAM)]
    pub ngram: usize,
    #[arg(long, default_value_t = DEFAULT_SIGNATURE_LEN)]
    pub signature_len: usize,
    #[arg(long, default_value_t = DEFAULT_SEPARATOR)]
    pub separator: char,
}

impl SignatureArgs {
    fn params(&self) -> SignatureParams {
        SignatureParams {
            n: self.ngram,
            k: self.signature_len,
            separator: self.separator,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum LinkCommand {
    /// Write one signature per CSV row.
    Sign {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        signature: SignatureArgs,
        #[command(flatten)]
        missing: MissingArgs,
    },
    /// Estimate join sizes from two signature files.
    Estimate {
        left: PathBuf,
        right: PathBuf,
        #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
        threshold: f64,
        /// Standard output when absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Generate a linked pair of tables from two descriptions.
    Generate(LinkGenerateArgs),
}

#[derive(Debug, Args)]
pub struct LinkGenerateArgs {
    pub left: PathBuf,
    pub right: PathBuf,
    /// A saved join estimate.
    #[arg(long, conflicts_with_all = ["left_signatures", "right_signatures"])]
    pub estimate: Option<PathBuf>,
    #[arg(long, requires = "right_signatures")]
    pub left_signatures: Option<PathBuf>,
    #[arg(long, requires = "left_signatures")]
    pub right_signatures: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub left_out: PathBuf,
    #[arg(long)]
    pub right_out: PathBuf,
    #[arg(long)]
    pub estimate_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProbeArgs {
    #[arg(required_unless_present = "list_presets")]
    pub description: Option<PathBuf>,
    #[arg(long, required_unless_present = "list_presets")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Standard output when absent.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Also save the edited description.
    #[arg(long)]
    pub description_out: Option<PathBuf>,
    /// Print the named distribution presets and exit.
    #[arg(long)]
    pub list_presets: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = DEFAULT_ADDR)]
    pub addr: SocketAddr,
    #[arg(long, default_value_t = 64)]
    pub max_upload_mb: usize,
    /// Directory of static files served under `/`.
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    #[command(flatten)]
    pub missing: MissingArgs,
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status. Failures print one line to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return 0;
            }
            let text = e.to_string();
            let line = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("datasynth: {}", line.trim_start_matches("error: "));
            return USAGE_EXIT;
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("datasynth: {msg}");
            1
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Describe(a) => run_describe(&a),
        Command::Generate(a) => run_generate(&a),
        Command::Compare(a) => run_compare(&a),
        Command::Link(c) => run_link(&c),
        Command::Probe(a) => run_probe_command(&a),
        Command::Serve(a) => run_serve(&a),
    }
}

fn seed_or_random(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = rand::random();
        log::info!("using seed {s}");
        s
    })
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn write_table(path: Option<&Path>, table: &Table) -> Result<()> {
    match path {
        Some(p) => {
            let mut w = create(p)?;
            table.write_csv(&mut w)?;
            w.flush()?;
        }
        None => table.write_csv(io::stdout().lock())?,
    }
    Ok(())
}

fn load_table(path: &Path, options: &LoadOptions) -> Result<Table> {
    load_csv(path, options).with_context(|| format!("cannot load {}", path.display()))
}

fn load_description(path: &Path) -> Result<DatasetDescription> {
    DatasetDescription::from_json(&read_text(path)?).with_context(|| format!("invalid description {}", path.display()))
}

fn run_describe(a: &DescribeArgs) -> Result<()> {
    let privacy = PrivacyParams {
        epsilon: a.epsilon,
        k: a.k,
        histogram_size: a.histogram_size,
        categorical_threshold: a.categorical_threshold,
    };
    privacy.validate()?;
    let overrides: Vec<AttributeOverride> = match &a.overrides {
        Some(p) => serde_json::from_str(&read_text(p)?).with_context(|| format!("invalid overrides {}", p.display()))?,
        None => Vec::new(),
    };
    let options = a.missing.load_options(a.categorical_threshold, overrides);
    let table = load_table(&a.input, &options)?;
    let desc = describe(&table, a.mode, &privacy, seed_or_random(a.seed))?;
    for w in &desc.warnings {
        log::warn!("{w}");
    }
    desc.save(&a.output).with_context(|| format!("cannot write {}", a.output.display()))?;
    Ok(())
}

fn run_generate(a: &GenerateArgs) -> Result<()> {
    if a.num_tuples == Some(0) {
        bail!("--num-tuples must be positive");
    }
    let desc = load_description(&a.description)?;
    let mut req = GenerationRequest::new(&desc, seed_or_random(a.seed))
        .uniform(a.uniform.iter().cloned())
        .inject_missing(!a.no_missing_injection);
    req.size = a.num_tuples;
    req.mode = a.mode;
    let table = generate(&req)?;
    write_table(a.output.as_deref(), &table)
}

/// Load options that read a CSV with the types and categorical flags the
/// description recorded.
fn conform_options(desc: &DatasetDescription, missing: &MissingArgs) -> LoadOptions {
    let overrides = desc
        .attributes
        .iter()
        .map(|attr| AttributeOverride {
            name: attr.name.clone(),
            data_type: Some(attr.data_type),
            categorical: Some(attr.categorical),
        })
        .collect();
    missing.load_options(desc.privacy.categorical_threshold, overrides)
}

fn run_compare(a: &CompareArgs) -> Result<()> {
    let desc = load_description(&a.description)?;
    let options = conform_options(&desc, &a.missing);
    let input = load_table(&a.input, &options)?;
    let synthetic = load_table(&a.synthetic, &options)?;
    let report = compare(&input, &synthetic, &desc)?;
    if let Some(p) = &a.output {
        write_text(Some(p), &report.to_json()?)?;
    }
    write_text(None, &summary(&report))
}

/// Plain-text digest of a report.
pub fn summary(report: &ComparisonReport) -> String {
    let mut s = String::new();
    let width = report.attributes.iter().map(|a| a.attribute.len()).max().unwrap_or(0).max(9);
    let _ = writeln!(s, "{:<width$}  {:>10}  {:>11}  {:>9}", "attribute", "KL (bits)", "correlation", "unmatched");
    for a in &report.attributes {
        let _ = writeln!(
            s,
            "{:<width$}  {:>10.4}  {:>11.4}  {:>9}",
            a.attribute, a.kl_divergence, a.correlation.value, a.unmatched
        );
    }
    if !report.not_compared.is_empty() {
        let _ = writeln!(s, "not compared: {}", report.not_compared.join(", "));
    }
    let names = &report.input_mi.names;
    let mut worst: Option<(f64, &str, &str)> = None;
    for (i, a) in names.iter().enumerate() {
        for b in &names[i + 1..] {
            if let (Some(x), Some(y)) = (report.input_mi.get(a, b), report.synthetic_mi.get(a, b)) {
                let gap = (x - y).abs();
                if worst.is_none_or(|(w, _, _)| gap > w) {
                    worst = Some((gap, a, b));
                }
            }
        }
    }
    if let Some((gap, a, b)) = worst {
        let _ = writeln!(s, "largest mutual information gap: {gap:.4} ({a}, {b})");
    }
    if let (Some(i), Some(o)) = (&report.input_network, &report.synthetic_network) {
        let shared = i.iter().filter(|e| o.contains(e)).count();
        let _ = writeln!(s, "network edges: {} input, {} synthetic, {} shared", i.len(), o.len(), shared);
    }
    s
}

fn validate_threshold(t: f64) -> Result<()> {
    if !(t > 0.0 && t <= 1.0) {
        bail!("--threshold must be in (0, 1], got {t}");
    }
    Ok(())
}

fn load_signatures(path: &Path) -> Result<Vec<Signature>> {
    let f = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    read_signatures(BufReader::new(f)).with_context(|| format!("invalid signatures {}", path.display()))
}

fn run_link(c: &LinkCommand) -> Result<()> {
    match c {
        LinkCommand::Sign { input, output, signature, missing } => {
            let params = signature.params();
            params.validate()?;
            let table = load_table(input, &missing.load_options(DEFAULT_CATEGORICAL_THRESHOLD, Vec::new()))?;
            let sigs = params.sign_table(&table)?;
            let mut w = create(output)?;
            write_signatures(&sigs, &mut w)?;
            w.flush()?;
            Ok(())
        }
        LinkCommand::Estimate { left, right, threshold, output } => {
            validate_threshold(*threshold)?;
            let est = estimate_join(&load_signatures(left)?, &load_signatures(right)?, *threshold)?;
            write_text(output.as_deref(), &(est.to_json()? + "\n"))
        }
        LinkCommand::Generate(a) => run_link_generate(a),
    }
}

fn run_link_generate(a: &LinkGenerateArgs) -> Result<()> {
    validate_threshold(a.threshold)?;
    let estimate = match (&a.estimate, &a.left_signatures, &a.right_signatures) {
        (Some(p), _, _) => JoinEstimate::from_json(&read_text(p)?).with_context(|| format!("invalid estimate {}", p.display()))?,
        (None, Some(l), Some(r)) => estimate_join(&load_signatures(l)?, &load_signatures(r)?, a.threshold)?,
        _ => bail!("pass --estimate or both --left-signatures and --right-signatures"),
    };
    let left = load_description(&a.left)?;
    let right = load_description(&a.right)?;
    let (l, r) = generate_linked(&left, &right, estimate, seed_or_random(a.seed))?;
    write_table(Some(&a.left_out), &l)?;
    write_table(Some(&a.right_out), &r)?;
    if let Some(p) = &a.estimate_out {
        write_text(Some(p), &(estimate.to_json()? + "\n"))?;
    }
    Ok(())
}

/// One line per preset: name, then what it does.
pub fn preset_listing() -> String {
    Preset::ALL.iter().map(|p| format!("{:<18}{}\n", p.name(), p.summary())).collect()
}

fn run_probe_command(a: &ProbeArgs) -> Result<()> {
    if a.list_presets {
        return write_text(None, &preset_listing());
    }
    let (Some(desc_path), Some(config_path)) = (&a.description, &a.config) else {
        bail!("probe needs a description and --config");
    };
    let desc = load_description(desc_path)?;
    let config = ProbeConfig::from_json(&read_text(config_path)?).with_context(|| format!("invalid probe config {}", config_path.display()))?;
    let out = run_probe(&desc, &config, seed_or_random(a.seed))?;
    for w in &out.description.warnings {
        log::warn!("{w}");
    }
    if let Some(p) = &a.description_out {
        out.description.save(p).with_context(|| format!("cannot write {}", p.display()))?;
    }
    write_table(a.output.as_deref(), &out.table)
}

fn run_serve(a: &ServeArgs) -> Result<()> {
    if a.max_upload_mb == 0 {
        bail!("--max-upload-mb must be positive");
    }
    if let Some(dir) = &a.static_dir {
        if !dir.is_dir() {
            bail!("static directory {} does not exist", dir.display());
        }
    }
    let config = ServiceConfig {
        max_upload_bytes: a.max_upload_mb.saturating_mul(1024 * 1024),
        static_dir: a.static_dir.clone(),
        load_options: a.missing.load_options(DEFAULT_CATEGORICAL_THRESHOLD, Vec::new()),
    };
    let runtime = tokio::runtime::Runtime::new().context("cannot start the async runtime")?;
    eprintln!("datasynth: serving on http://{}", a.addr);
    runtime.block_on(datasynth_service::serve(a.addr, config)).with_context(|| format!("cannot serve on {}", a.addr))
}
