//! Corpus preparation: fixed-length chunking, piece-disjoint train/test
//! splits, peak-rescaling augmentation and per-domain normalisation.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::Waveform;
use crate::tf::{LogMagSpectrogram, NormalizationState};

pub const DEFAULT_CHUNK_SECONDS: f64 = 4.0;

/// Consecutive non-overlapping chunks of `round(seconds·sr)` samples; any
/// remainder is dropped.
pub fn chunk_waveform(wave: &Waveform, seconds: f64) -> Result<Vec<Waveform>> {
    if !(seconds > 0.0 && seconds.is_finite()) {
        return Err(Error::invalid(format!("chunk length must be positive, got {seconds}")));
    }
    let len = (seconds * wave.sample_rate() as f64).round() as usize;
    if len == 0 {
        return Err(Error::invalid("chunk length rounds to zero samples"));
    }
    if wave.len() < len {
        log::warn!(
            "{:.3} s of audio is shorter than one {seconds} s chunk; nothing produced",
            wave.duration_secs()
        );
    }
    wave.samples()
        .chunks_exact(len)
        .map(|c| Waveform::new(c.to_vec(), wave.sample_rate()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub piece_id: String,
    pub path: PathBuf,
    pub domain: String,
}

/// Audio files with the musical piece and instrument domain each belongs to.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PieceManifest {
    pub entries: Vec<ManifestEntry>,
}

impl PieceManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let mut owner: HashMap<&Path, &str> = HashMap::new();
        for e in &entries {
            if e.piece_id.is_empty() || e.domain.is_empty() {
                return Err(Error::invalid(format!("entry {} lacks a piece or domain", e.path.display())));
            }
            if let Some(prev) = owner.insert(&e.path, &e.piece_id) {
                if prev != e.piece_id {
                    return Err(Error::invalid(format!(
                        "{} listed under pieces `{prev}` and `{}`",
                        e.path.display(),
                        e.piece_id
                    )));
                }
            }
        }
        Ok(Self { entries })
    }

    /// Tab-separated `piece_id  path  domain` lines; blank lines and lines
    /// starting with `#` are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [piece, path, domain] = fields[..] else {
                return Err(Error::invalid(format!(
                    "manifest line {}: expected 3 tab-separated fields, found {}",
                    i + 1,
                    fields.len()
                )));
            };
            entries.push(ManifestEntry {
                piece_id: piece.trim().to_string(),
                path: PathBuf::from(path.trim()),
                domain: domain.trim().to_string(),
            });
        }
        if entries.is_empty() {
            return Err(Error::invalid("manifest has no entries"));
        }
        Self::new(entries)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(s, "{}\t{}\t{}", e.piece_id, e.path.display(), e.domain);
        }
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Distinct piece ids in sorted order.
    pub fn pieces(&self) -> Vec<&str> {
        let set: BTreeSet<&str> = self.entries.iter().map(|e| e.piece_id.as_str()).collect();
        set.into_iter().collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Number of test pieces: whatever remains after rounding the training share
/// half-up, at least one and never all of them.
pub fn test_piece_count(pieces: usize, test_fraction: f64) -> usize {
    let train = ((1.0 - test_fraction) * pieces as f64 + 0.5).floor() as usize;
    pieces.saturating_sub(train).clamp(1, pieces - 1)
}

/// Splits so that every piece lands wholly in train or test.
pub fn split_by_piece(
    manifest: &PieceManifest,
    test_fraction: f64,
    seed: u64,
) -> Result<(PieceManifest, PieceManifest)> {
    if !(0.0..=1.0).contains(&test_fraction) {
        return Err(Error::invalid(format!("test fraction {test_fraction} outside [0, 1]")));
    }
    let mut pieces = manifest.pieces();
    if pieces.len() < 2 {
        return Err(Error::CannotSplit(format!(
            "need at least 2 pieces, manifest has {}",
            pieces.len()
        )));
    }
    let n_test = test_piece_count(pieces.len(), test_fraction);
    pieces.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test_ids: BTreeSet<&str> = pieces[..n_test].iter().copied().collect();
    let (test, train): (Vec<_>, Vec<_>) = manifest
        .entries
        .iter()
        .cloned()
        .partition(|e| test_ids.contains(e.piece_id.as_str()));
    Ok((PieceManifest { entries: train }, PieceManifest { entries: test }))
}

pub const DEFAULT_AUGMENT_RANGE: (f64, f64) = (0.1, 1.0);

/// Rescales so the peak becomes `s ~ U(range)`.
pub fn augment_rescale(wave: &Waveform, range: (f64, f64), rng: &mut impl Rng) -> Result<Waveform> {
    let (lo, hi) = range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::invalid(format!("bad rescale range ({lo}, {hi})")));
    }
    let peak = wave.peak();
    if peak == 0.0 {
        return Err(Error::NoSignal("cannot rescale a silent waveform".into()));
    }
    let s = if hi > lo { rng.random_range(lo..hi) } else { lo };
    let samples = wave.samples().iter().map(|x| s * (x / peak)).collect();
    Waveform::new(samples, wave.sample_rate())
}

/// Per-corpus log-magnitude statistics of one instrument domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainStats {
    pub domain: String,
    pub mean: f64,
    pub std: f64,
    pub scale_rule: String,
}

const SCALE_RULE: &str = "3sigma";

/// Sums per-item partials in sorted order so the result does not depend on
/// corpus order.
fn ordered_sum(mut partials: Vec<f64>) -> f64 {
    partials.sort_by(f64::total_cmp);
    partials.iter().sum()
}

/// Population mean and standard deviation over every cell of every
/// spectrogram (two passes).
pub fn compute_domain_stats(domain: &str, specs: &[LogMagSpectrogram]) -> Result<DomainStats> {
    if specs.is_empty() {
        return Err(Error::invalid("no spectrograms to summarise"));
    }
    for s in specs {
        s.expect_state(NormalizationState::Raw)?;
    }
    let count: usize = specs.iter().map(|s| s.data().len()).sum();
    let mean = ordered_sum(specs.iter().map(|s| s.data().sum()).collect()) / count as f64;
    let var = ordered_sum(
        specs
            .iter()
            .map(|s| s.data().iter().map(|v| (v - mean) * (v - mean)).sum())
            .collect(),
    ) / count as f64;
    let std = var.sqrt();
    if !(std > 0.0) {
        return Err(Error::DegenerateStats(format!("domain `{domain}` has zero variance")));
    }
    Ok(DomainStats {
        domain: domain.to_string(),
        mean,
        std,
        scale_rule: SCALE_RULE.into(),
    })
}

fn check_stats(stats: &DomainStats) -> Result<()> {
    if stats.scale_rule != SCALE_RULE {
        return Err(Error::invalid(format!("unknown scale rule `{}`", stats.scale_rule)));
    }
    if !(stats.std > 0.0 && stats.std.is_finite() && stats.mean.is_finite()) {
        return Err(Error::DegenerateStats("statistics must be finite with std > 0".into()));
    }
    Ok(())
}

/// `(x - mean) / (3·std)`
pub fn normalize(spec: &LogMagSpectrogram, stats: &DomainStats) -> Result<LogMagSpectrogram> {
    spec.expect_state(NormalizationState::Raw)?;
    check_stats(stats)?;
    let scale = 3.0 * stats.std;
    let data = spec.data().mapv(|v| (v - stats.mean) / scale);
    Ok(spec.with_data_and_state(data, NormalizationState::DomainNormalized))
}

pub fn denormalize(spec: &LogMagSpectrogram, stats: &DomainStats) -> Result<LogMagSpectrogram> {
    spec.expect_state(NormalizationState::DomainNormalized)?;
    check_stats(stats)?;
    let scale = 3.0 * stats.std;
    let data = spec.data().mapv(|v| v * scale + stats.mean);
    Ok(spec.with_data_and_state(data, NormalizationState::Raw))
}
