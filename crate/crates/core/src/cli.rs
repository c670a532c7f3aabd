//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numeric or
//! invariant failure.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::denoise::{add_gaussian_noise, denoise, denoise_fixed_dictionary, psnr, DenoiseConfig};
use crate::error::{Error, Result};
use crate::experiments::{
    convergence_trace, denoise_table, lambda_sweep, sample_patches, scaling_bench,
};
use crate::image::{read_pgm, write_pgm, Image, PgmFormat};
use crate::init::{overcomplete_dct, random_unit_dictionary};
use crate::io::{read_matrix, write_matrix, write_trace, Table};
use crate::matrix::TrainingMatrix;
use crate::soup::{learn, AtomOrder, LearnConfig, ZeroCodePolicy};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Environment variable that sets the default worker-thread count.
pub const THREADS_ENV: &str = "SOUP_DIL_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "soup-dil",
    version,
    about = "l0 sum-of-outer-products dictionary learning and denoising"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn a dictionary from a training-matrix file.
    Learn(LearnArgs),
    /// Denoise a PGM image.
    Denoise(DenoiseArgs),
    /// Run an experiment harness and write CSV.
    #[command(subcommand)]
    Experiment(ExperimentCmd),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum OrderArg {
    Cyclic,
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum InitArg {
    /// Overcomplete DCT (needs square n and J).
    Dct,
    /// Seeded random unit columns.
    Random,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ZeroPolicyArg {
    FirstBasis,
    KeepPrevious,
    RandomUnit,
}

#[derive(Debug, Args)]
pub struct LearnArgs {
    /// Training matrix: "n N" then n rows of N floats.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub atoms: usize,
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub iters: usize,
    /// Code magnitude bound L (default ||Y||_F).
    #[arg(long)]
    pub bound: Option<f64>,
    #[arg(long, value_enum, default_value = "cyclic")]
    pub order: OrderArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial dictionary (default: DCT when n and J are squares, else random).
    #[arg(long, value_enum)]
    pub init: Option<InitArg>,
    #[arg(long, value_enum, default_value = "first-basis")]
    pub zero_policy: ZeroPolicyArg,
    #[arg(long)]
    pub out_dict: PathBuf,
    #[arg(long)]
    pub out_trace: PathBuf,
}

#[derive(Debug, Args)]
pub struct DenoiseArgs {
    /// Noisy input image (PGM).
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    /// Clean reference; enables the PSNR report.
    #[arg(long)]
    pub clean: Option<PathBuf>,
    /// Treat --in as clean and add seeded Gaussian noise first.
    #[arg(long)]
    pub add_noise: bool,
    #[arg(long, default_value_t = 1.15)]
    pub omp_gain: f64,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// Train on at most this many patches.
    #[arg(long)]
    pub subsample: Option<usize>,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[arg(long, default_value_t = 256)]
    pub atoms: usize,
    #[arg(long, default_value_t = 8)]
    pub patch: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    /// Learned dictionary output (matrix text format).
    #[arg(long)]
    pub out_dict: Option<PathBuf>,
    /// CSV report: noisy, O-DCT and learned-dictionary PSNR.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCmd {
    /// Per-iteration objective, NSRE, sparsity and iterate changes.
    ConvergenceTrace(ConvergenceArgs),
    /// Final NSRE and sparsity over a lambda grid.
    LambdaSweep(SweepArgs),
    /// Noisy / O-DCT / learned PSNR grid over images and sigmas.
    DenoiseTable(TableArgs),
    /// Seconds per outer iteration against training-set size.
    ScalingBench(ScalingArgs),
}

#[derive(Debug, Args)]
pub struct PatchSource {
    /// Source images (PGM), sampled uniformly.
    #[arg(long = "image", required = true)]
    pub images: Vec<PathBuf>,
    #[arg(long, default_value_t = 30_000)]
    pub patches: usize,
    /// Remove each patch's mean before learning.
    #[arg(long)]
    pub remove_means: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ConvergenceArgs {
    #[command(flatten)]
    pub source: PatchSource,
    #[arg(long, default_value_t = 256)]
    pub atoms: usize,
    #[arg(long, default_value_t = 69.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 30)]
    pub iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub source: PatchSource,
    #[arg(long, default_value_t = 256)]
    pub atoms: usize,
    /// Comma-separated lambda values.
    #[arg(long, value_delimiter = ',', required = true)]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    /// `name=path.pgm`; names matching the published set get reference columns.
    #[arg(long = "image", required = true)]
    pub images: Vec<String>,
    #[arg(long, value_delimiter = ',', default_value = "10,20,25")]
    pub sigmas: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    #[arg(long, default_value_t = 1.15)]
    pub omp_gain: f64,
    #[arg(long, default_value_t = 10)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScalingArgs {
    #[arg(long = "image", required = true)]
    pub images: Vec<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "30000,60000")]
    pub sizes: Vec<usize>,
    #[arg(long, default_value_t = 256)]
    pub atoms: usize,
    #[arg(long, default_value_t = 69.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 2)]
    pub iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_USAGE,
        Error::Io { .. } | Error::Parse { .. } => EXIT_IO,
        Error::Dimension(_) | Error::NonFinite(_) | Error::Invariant(_) => EXIT_NUMERIC,
    }
}

/// Parses `args` (including the program name), runs the command, and
/// returns the process exit code. Messages go to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::Learn(a) => cmd_learn(a),
        Command::Denoise(a) => cmd_denoise(a),
        Command::Experiment(e) => cmd_experiment(e),
    }
}

fn is_square(v: usize) -> bool {
    let r = (v as f64).sqrt().round() as usize;
    r * r == v
}

pub fn cmd_learn(a: &LearnArgs) -> Result<()> {
    let data = TrainingMatrix::new(read_matrix(&a.data)?)?;
    let n = data.dim();
    let init = match a.init {
        Some(InitArg::Dct) => overcomplete_dct(n, a.atoms)?,
        Some(InitArg::Random) => random_unit_dictionary(n, a.atoms, a.seed)?,
        None if is_square(n) && is_square(a.atoms) && a.atoms >= n => overcomplete_dct(n, a.atoms)?,
        None => random_unit_dictionary(n, a.atoms, a.seed)?,
    };
    let mut cfg = LearnConfig::new(init, a.lambda, a.iters);
    cfg.bound = a.bound;
    cfg.seed = a.seed;
    cfg.atom_order = match a.order {
        OrderArg::Cyclic => AtomOrder::Cyclic,
        OrderArg::Random => AtomOrder::Random,
    };
    cfg.zero_code_policy = match a.zero_policy {
        ZeroPolicyArg::FirstBasis => ZeroCodePolicy::FirstBasis,
        ZeroPolicyArg::KeepPrevious => ZeroCodePolicy::KeepPrevious,
        ZeroPolicyArg::RandomUnit => ZeroCodePolicy::RandomUnit,
    };
    let out = learn(&data, &cfg)?;
    write_matrix(&out.dictionary, &a.out_dict)?;
    write_trace(&out.trace, &a.out_trace)?;
    if let Some(last) = out.trace.last() {
        eprintln!(
            "iter {}: objective {:.6e}, nsre {:.4}%, sparsity {:.4}%",
            last.iter,
            last.objective,
            100.0 * last.nsre,
            100.0 * last.sparsity_factor
        );
    }
    Ok(())
}

pub const REPORT_HEADER: [&str; 6] = [
    "sigma",
    "noisy_psnr",
    "denoised_psnr",
    "odct_psnr",
    "mean_nonzeros",
    "seconds",
];

pub fn cmd_denoise(a: &DenoiseArgs) -> Result<()> {
    let input = read_pgm(&a.input)?;
    let clean = a.clean.as_ref().map(read_pgm).transpose()?;
    let noisy = if a.add_noise {
        add_gaussian_noise(&input, a.sigma, a.seed)?
    } else {
        input.clone()
    };
    let clean = match (clean, a.add_noise) {
        (Some(c), _) => Some(c),
        (None, true) => Some(input),
        (None, false) => None,
    };

    let mut cfg = DenoiseConfig::new(a.sigma);
    cfg.omp_gain = a.omp_gain;
    cfg.stride = a.stride;
    cfg.training_subsample = a.subsample;
    cfg.subsample_seed = a.seed;
    cfg.learn_iterations = a.iters;
    cfg.num_atoms = a.atoms;
    cfg.patch_side = a.patch;

    let start = std::time::Instant::now();
    let out = denoise(&noisy, &cfg)?;
    let secs = start.elapsed().as_secs_f64();
    write_pgm(&out.image, &a.out, PgmFormat::Binary)?;
    if let Some(path) = &a.out_dict {
        write_matrix(&out.dictionary, path)?;
    }

    if let Some(clean) = &clean {
        let dct = overcomplete_dct(cfg.patch_side * cfg.patch_side, cfg.num_atoms)?;
        let (odct, _) = denoise_fixed_dictionary(&noisy, &dct, &cfg)?;
        let row = [
            a.sigma,
            psnr(clean, &noisy)?,
            psnr(clean, &out.image)?,
            psnr(clean, &odct)?,
            out.omp.mean_nonzeros(),
            secs,
        ];
        eprintln!(
            "PSNR noisy {:.2} dB, denoised {:.2} dB, O-DCT {:.2} dB",
            row[1], row[2], row[3]
        );
        if let Some(path) = &a.report {
            let mut t = Table::new(&REPORT_HEADER);
            t.push(row.iter().map(f64::to_string).collect());
            t.write(path)?;
        }
    } else if a.report.is_some() {
        return Err(Error::config("--report needs --clean or --add-noise"));
    }
    Ok(())
}

fn load_images(paths: &[PathBuf]) -> Result<Vec<Image>> {
    paths.iter().map(read_pgm).collect()
}

fn named_image(spec: &str) -> Result<(String, Image)> {
    let (name, path) = match spec.split_once('=') {
        Some((n, p)) => (n.to_string(), PathBuf::from(p)),
        None => {
            let p = Path::new(spec);
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| spec.to_string());
            (stem, p.to_path_buf())
        }
    };
    Ok((name, read_pgm(path)?))
}

pub fn cmd_experiment(e: &ExperimentCmd) -> Result<()> {
    match e {
        ExperimentCmd::ConvergenceTrace(a) => {
            let s = &a.source;
            let data = sample_patches(
                &load_images(&s.images)?,
                s.patches,
                8,
                s.remove_means,
                s.seed,
            )?;
            let trace = convergence_trace(&data, a.atoms, a.lambda, a.iters)?;
            write_trace(&trace, &a.out)
        }
        ExperimentCmd::LambdaSweep(a) => {
            let s = &a.source;
            let data = sample_patches(
                &load_images(&s.images)?,
                s.patches,
                8,
                s.remove_means,
                s.seed,
            )?;
            lambda_sweep(&data, a.atoms, &a.lambdas, a.iters)?.write(&a.out)
        }
        ExperimentCmd::DenoiseTable(a) => {
            let images = a
                .images
                .iter()
                .map(|s| named_image(s))
                .collect::<Result<Vec<_>>>()?;
            let mut base = DenoiseConfig::new(1.0);
            base.stride = a.stride;
            base.omp_gain = a.omp_gain;
            base.learn_iterations = a.iters;
            let table = denoise_table(&images, &a.sigmas, &base, a.seed)?;
            print_deltas(&table);
            table.write(&a.out)
        }
        ExperimentCmd::ScalingBench(a) => {
            let images = load_images(&a.images)?;
            scaling_bench(&images, &a.sizes, a.atoms, a.lambda, a.iters, a.seed)?.write(&a.out)
        }
    }
}

fn print_deltas(table: &Table) {
    for row in &table.rows {
        let (image, sigma, soup, delta) = (&row[0], &row[1], &row[4], &row[8]);
        if delta.is_empty() {
            eprintln!("{image} sigma={sigma}: {soup} dB (no reference)");
        } else {
            eprintln!("{image} sigma={sigma}: {soup} dB, {delta} dB vs reference");
        }
    }
}
