//! Command-line front end. [`run`] parses arguments, executes one
//! subcommand and returns the process exit code: 0 on success, 1 for usage
//! errors, 2 for bad input data and 3 for numeric failures.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::beam::{beam_synthesize, BeamConfig, WaveNetSynthesizer};
use crate::dataset::{
    chunk_waveform, compute_domain_stats, denormalize, normalize, split_by_piece, DomainStats,
    PieceManifest,
};
use crate::error::{Error, Result};
use crate::gan::{identity_weight, learning_rate, ObjectiveConfig};
use crate::io::{read_spectrogram, read_wav, write_rainbowgram, write_spectrogram, write_wav, SpectrogramFile};
use crate::musical::{pitch_shift_cqt, retime_conditioning};
use crate::phase::{griffin_lim, GriffinLimConfig, MagnitudeInput, PhaseInit};
use crate::signal::Waveform;
use crate::tf::{
    cqt, log_magnitude, stft, ComplexSpectrogram, CqtParams, LogMagSpectrogram, NormalizationState,
    StftParams, DEFAULT_FLOOR,
};
use crate::wavenet::{
    generate, load_weights, prepare_conditioning, save_weights, BatchSampler, Direction, SamplingMode,
    TrainConfig, Trainer, TrainingClip, WaveNet, WaveNetConfig, WaveNetWeights,
};

#[derive(Debug, Parser)]
#[command(name = "timbre", version, about = "Spectrogram analysis, phase reconstruction and WaveNet synthesis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Transform a WAV file into a .ttsg spectrogram (and optionally a rainbowgram PNG).
    Analyze(AnalyzeArgs),
    /// Reconstruct audio from an STFT magnitude by iterative phase estimation.
    Griffinlim(GriffinLimArgs),
    /// Transpose a log-magnitude CQT by whole semitones.
    Pitchshift(PitchShiftArgs),
    /// Generate audio from a CQT with trained WaveNet weights.
    Synth(SynthArgs),
    /// Train a WaveNet on WAV recordings.
    TrainWavenet(TrainArgs),
    /// Cut a WAV file into fixed-length chunks.
    Chunk(ChunkArgs),
    /// Split a manifest into train and test sets by piece.
    Split(SplitArgs),
    /// Compute per-domain log-magnitude statistics.
    Stats(StatsArgs),
    /// Dump the loss-weight and learning-rate schedules as CSV.
    Schedules(SchedulesArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReprArg {
    Cqt,
    Stft,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value = "cqt")]
    pub repr: ReprArg,
    #[arg(long)]
    pub out: PathBuf,
    /// Rainbowgram image path.
    #[arg(long)]
    pub png: Option<PathBuf>,
    /// Store the complex transform instead of its log magnitude.
    #[arg(long)]
    pub complex: bool,
    /// Normalise the log magnitude with these domain statistics.
    #[arg(long)]
    pub normalize: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhaseInitArg {
    Random,
    Zero,
}

#[derive(Debug, Args)]
pub struct GriffinLimArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    #[arg(long, value_enum, default_value = "random")]
    pub init: PhaseInitArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the per-iteration error sequence as JSON.
    #[arg(long)]
    pub mse_log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PitchShiftArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, allow_hyphen_values = true)]
    pub semitones: i32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generate backwards in time (weights must be trained on reversed audio).
    #[arg(long)]
    pub reverse: bool,
    /// Tempo factor: samples per frame become `round(hop·stretch)`.
    #[arg(long, default_value_t = 1.0)]
    pub stretch: f64,
    /// Beam width; 1 disables the search.
    #[arg(long, default_value_t = 1)]
    pub beam_width: usize,
    #[arg(long, default_value_t = 2048)]
    pub beam_step: usize,
    #[arg(long, default_value_t = 2048)]
    pub beam_lookahead: usize,
    /// Write per-iteration beam scores as JSON.
    #[arg(long)]
    pub beam_log: Option<PathBuf>,
    /// Take the most probable sample instead of drawing.
    #[arg(long)]
    pub greedy: bool,
    /// Use the raw weights even when a moving average is stored.
    #[arg(long)]
    pub raw_weights: bool,
    #[arg(long, default_value_t = crate::wavenet::DEFAULT_COND_SHIFT, allow_hyphen_values = true)]
    pub cond_shift: f64,
    /// Undo domain normalisation of the input with these statistics.
    #[arg(long)]
    pub denormalize: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// key = value training configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Training recordings (repeatable).
    #[arg(long = "in")]
    pub inputs: Vec<PathBuf>,
    /// Manifest whose files are added to the training recordings.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 40)]
    pub layers: usize,
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 10)]
    pub dilation_cycle: usize,
    /// Overrides the configuration seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 100)]
    pub log_every: usize,
}

#[derive(Debug, Args)]
pub struct ChunkArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long, default_value_t = crate::dataset::DEFAULT_CHUNK_SECONDS)]
    pub seconds: f64,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 0.2)]
    pub test_fraction: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub train_out: PathBuf,
    #[arg(long)]
    pub test_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub domain: String,
    #[arg(long, value_enum, default_value = "cqt")]
    pub repr: ReprArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SchedulesArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Distance between dumped steps.
    #[arg(long, default_value_t = 2500)]
    pub every: u64,
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Analyze(a) => analyze(a),
        Command::Griffinlim(a) => griffinlim(a),
        Command::Pitchshift(a) => pitchshift(a),
        Command::Synth(a) => synth(a),
        Command::TrainWavenet(a) => train(a),
        Command::Chunk(a) => chunk(a),
        Command::Split(a) => split(a),
        Command::Stats(a) => stats(a),
        Command::Schedules(a) => schedules(a),
    }
}

fn require_file(path: &Path) -> Result<()> {
    if !path.is_file() {
        return Err(Error::invalid(format!("{} does not exist", path.display())));
    }
    Ok(())
}

fn require_output(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() && !dir.is_dir() => Err(Error::invalid(format!(
            "output directory {} does not exist",
            dir.display()
        ))),
        _ => Ok(()),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| Error::CorruptFile(format!("{}: {e}", path.display())))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

fn transform(wave: &Waveform, repr: ReprArg) -> Result<ComplexSpectrogram> {
    match repr {
        ReprArg::Cqt => cqt(wave, &CqtParams::default()),
        ReprArg::Stft => stft(wave, &StftParams::default()),
    }
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    require_file(&a.input)?;
    require_output(&a.out)?;
    if let Some(p) = &a.png {
        require_output(p)?;
    }
    if a.complex && a.normalize.is_some() {
        return Err(Error::invalid("complex output cannot be normalised"));
    }
    let stats: Option<DomainStats> = a.normalize.as_deref().map(read_json).transpose()?;
    let wave = read_wav(&a.input)?;
    let spec = transform(&wave, a.repr)?;
    if let Some(png) = &a.png {
        write_rainbowgram(png, &spec, DEFAULT_FLOOR)?;
    }
    let file = if a.complex {
        SpectrogramFile::Complex(spec)
    } else {
        let mut lm = log_magnitude(&spec, DEFAULT_FLOOR)?;
        if let Some(stats) = &stats {
            lm = normalize(&lm, stats)?;
        }
        SpectrogramFile::LogMag(lm)
    };
    write_spectrogram(&a.out, &file)?;
    println!("{}: {} frames x {} bins", a.out.display(), file.frames(), file.bins());
    Ok(())
}

fn griffinlim(a: GriffinLimArgs) -> Result<()> {
    require_file(&a.input)?;
    require_output(&a.out)?;
    let cfg = GriffinLimConfig {
        iterations: a.iterations,
        phase_init: match a.init {
            PhaseInitArg::Random => PhaseInit::RandomUniform,
            PhaseInitArg::Zero => PhaseInit::Zero,
        },
        seed: a.seed,
    };
    let out = match read_spectrogram(&a.input)? {
        SpectrogramFile::LogMag(lm) => griffin_lim(MagnitudeInput::Log(&lm), &cfg)?,
        SpectrogramFile::Complex(c) => {
            let crate::tf::TransformParams::Stft(params) = *c.params() else {
                return Err(Error::UnsupportedRepresentation("Griffin-Lim needs an STFT".into()));
            };
            let magnitude = c.magnitude();
            griffin_lim(
                MagnitudeInput::Linear {
                    magnitude: &magnitude,
                    params,
                    sample_rate: c.sample_rate(),
                },
                &cfg,
            )?
        }
    };
    write_wav(&a.out, &out.waveform)?;
    if let Some(log) = &a.mse_log {
        write_json(log, &out.mse)?;
    }
    println!(
        "{}: {} samples, error {:.3e} -> {:.3e}",
        a.out.display(),
        out.waveform.len(),
        out.mse.first().copied().unwrap_or(0.0),
        out.mse.last().copied().unwrap_or(0.0)
    );
    Ok(())
}

fn pitchshift(a: PitchShiftArgs) -> Result<()> {
    require_file(&a.input)?;
    require_output(&a.out)?;
    let spec = read_spectrogram(&a.input)?.into_log_magnitude()?;
    let shifted = pitch_shift_cqt(&spec, a.semitones)?;
    write_spectrogram(&a.out, &SpectrogramFile::LogMag(shifted))?;
    println!("{}: shifted {:+} semitones", a.out.display(), a.semitones);
    Ok(())
}

#[derive(Serialize)]
struct BeamLog<'a> {
    config: BeamConfig,
    final_score: f64,
    iterations: &'a [crate::beam::IterationLog],
}

fn synth(a: SynthArgs) -> Result<()> {
    require_file(&a.spec)?;
    require_file(&a.weights)?;
    require_output(&a.out)?;
    if a.reverse && a.beam_width > 1 {
        return Err(Error::invalid("beam search runs forwards only; drop --reverse or use --beam-width 1"));
    }
    let stats: Option<DomainStats> = a.denormalize.as_deref().map(read_json).transpose()?;
    let mut spec = read_spectrogram(&a.spec)?.into_log_magnitude()?;
    if let Some(stats) = &stats {
        spec = denormalize(&spec, stats)?;
    }
    if spec.state() != NormalizationState::Raw {
        return Err(Error::WrongNormalizationState {
            expected: NormalizationState::Raw,
            found: spec.state(),
        });
    }
    let weights = load_weights(&a.weights, None)?;
    let net = if a.raw_weights { &weights.net } else { weights.for_generation() };
    if net.config().cond_channels != spec.bins() {
        return Err(Error::ShapeMismatch(format!(
            "weights expect {} conditioning channels, spectrogram has {} bins",
            net.config().cond_channels,
            spec.bins()
        )));
    }
    let schedule = retime_conditioning(&spec, a.stretch)?;
    let cond = prepare_conditioning(&spec, a.cond_shift, &schedule)?.cast::<f32>();
    let mode = if a.greedy {
        SamplingMode::Greedy
    } else {
        SamplingMode::Sample { seed: a.seed }
    };
    let start = Instant::now();
    let samples = if a.beam_width > 1 || a.beam_log.is_some() {
        let cfg = BeamConfig {
            beam_width: a.beam_width,
            step: a.beam_step,
            lookahead: a.beam_lookahead,
            seed: a.seed,
        };
        let synth = WaveNetSynthesizer {
            net,
            cond,
            greedy: a.greedy,
        };
        let out = beam_synthesize(&spec, &schedule, &synth, &cfg)?;
        if let Some(log) = &a.beam_log {
            write_json(
                log,
                &BeamLog {
                    config: cfg,
                    final_score: out.final_score,
                    iterations: &out.iterations,
                },
            )?;
        }
        out.waveform.into_samples()
    } else {
        let direction = if a.reverse { Direction::Reverse } else { Direction::Forward };
        generate(net, &cond, mode, direction)?
    };
    let wave = Waveform::new(samples, spec.sample_rate())?;
    write_wav(&a.out, &wave)?;
    println!("{}: {} samples in {:.1?}", a.out.display(), wave.len(), start.elapsed());
    Ok(())
}

fn manifest_path(manifest: &Path, entry: &Path) -> PathBuf {
    if entry.is_absolute() {
        entry.to_path_buf()
    } else {
        manifest.parent().unwrap_or(Path::new("")).join(entry)
    }
}

fn train(a: TrainArgs) -> Result<()> {
    require_output(&a.out)?;
    let mut config = match &a.config {
        Some(p) => TrainConfig::parse(&fs::read_to_string(p)?)?,
        None => TrainConfig::default(),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    config.validate()?;
    let mut paths = a.inputs.clone();
    if let Some(m) = &a.manifest {
        let manifest = PieceManifest::read(m)?;
        paths.extend(manifest.entries.iter().map(|e| manifest_path(m, &e.path)));
    }
    if paths.is_empty() {
        return Err(Error::invalid("no training audio given (use --in or --manifest)"));
    }
    for p in &paths {
        require_file(p)?;
    }
    if a.steps == 0 {
        return Err(Error::invalid("--steps must be positive"));
    }
    let arch = WaveNetConfig {
        dilation_cycle: a.dilation_cycle,
        ..WaveNetConfig::toy(a.layers, a.width, CqtParams::default().n_bins)
    };
    arch.validate()?;

    let clips = paths
        .iter()
        .map(|p| {
            let wave = read_wav(p)?;
            let spec = cqt(&wave, &CqtParams::default())?;
            TrainingClip::new(wave.into_samples(), spec.magnitude(), CqtParams::default().hop, DEFAULT_FLOOR)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut trainer = Trainer::new(WaveNet::<f32>::init(arch, config.seed)?, config.clone())?;
    let mut sampler = BatchSampler::new(config.seed.wrapping_add(1));
    let start = Instant::now();
    for step in 1..=a.steps {
        let batch = sampler.batch::<f32>(&clips, &config)?;
        let loss = trainer.step(&batch)?;
        if a.log_every > 0 && (step % a.log_every == 0 || step == 1 || step == a.steps) {
            println!("step {step:6}  nll {loss:.4}  {:.1?}", start.elapsed());
        }
    }
    save_weights(
        &a.out,
        &WaveNetWeights {
            net: trainer.net,
            ema: Some(trainer.ema),
        },
    )?;
    println!("{}: {} clips, {} steps", a.out.display(), clips.len(), a.steps);
    Ok(())
}

fn chunk(a: ChunkArgs) -> Result<()> {
    require_file(&a.input)?;
    if !a.out_dir.is_dir() {
        return Err(Error::invalid(format!("{} is not a directory", a.out_dir.display())));
    }
    let wave = read_wav(&a.input)?;
    let chunks = chunk_waveform(&wave, a.seconds)?;
    let stem = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or("chunk");
    for (i, c) in chunks.iter().enumerate() {
        write_wav(a.out_dir.join(format!("{stem}_{i:04}.wav")), c)?;
    }
    println!("{} chunks of {} s", chunks.len(), a.seconds);
    Ok(())
}

fn split(a: SplitArgs) -> Result<()> {
    require_file(&a.manifest)?;
    require_output(&a.train_out)?;
    require_output(&a.test_out)?;
    let manifest = PieceManifest::read(&a.manifest)?;
    let (train, test) = split_by_piece(&manifest, a.test_fraction, a.seed)?;
    train.write(&a.train_out)?;
    test.write(&a.test_out)?;
    println!(
        "train: {} pieces / {} files, test: {} pieces / {} files",
        train.pieces().len(),
        train.len(),
        test.pieces().len(),
        test.len()
    );
    Ok(())
}

fn stats(a: StatsArgs) -> Result<()> {
    require_file(&a.manifest)?;
    require_output(&a.out)?;
    let manifest = PieceManifest::read(&a.manifest)?;
    let paths: Vec<PathBuf> = manifest
        .entries
        .iter()
        .filter(|e| e.domain == a.domain)
        .map(|e| manifest_path(&a.manifest, &e.path))
        .collect();
    if paths.is_empty() {
        return Err(Error::invalid(format!("no files for domain `{}`", a.domain)));
    }
    let specs = paths
        .iter()
        .map(|p| log_magnitude(&transform(&read_wav(p)?, a.repr)?, DEFAULT_FLOOR))
        .collect::<Result<Vec<LogMagSpectrogram>>>()?;
    let stats = compute_domain_stats(&a.domain, &specs)?;
    write_json(&a.out, &stats)?;
    println!("{}: mean {:.4}, std {:.4}", a.domain, stats.mean, stats.std);
    Ok(())
}

fn schedules(a: SchedulesArgs) -> Result<()> {
    require_output(&a.out)?;
    if a.every == 0 {
        return Err(Error::invalid("--every must be positive"));
    }
    let cfg = ObjectiveConfig::default();
    let mut csv = String::from("step,identity_weight,learning_rate\n");
    let mut step = 0;
    loop {
        csv.push_str(&format!(
            "{step},{},{}\n",
            identity_weight(step, &cfg),
            learning_rate(step, &cfg)
        ));
        if step >= cfg.total_steps {
            break;
        }
        step = (step + a.every).min(cfg.total_steps);
    }
    fs::write(&a.out, csv)?;
    println!("{}: schedules up to step {}", a.out.display(), cfg.total_steps);
    Ok(())
}
