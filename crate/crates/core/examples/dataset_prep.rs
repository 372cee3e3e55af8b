//! Corpus preparation on synthetic audio: chunking, a piece-level split,
//! domain statistics and normalisation.

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use timbre::dataset::{
    augment_rescale, chunk_waveform, compute_domain_stats, normalize, split_by_piece, ManifestEntry,
    PieceManifest, DEFAULT_AUGMENT_RANGE,
};
use timbre::signal::harmonic_tone;
use timbre::tf::{cqt, log_magnitude, CqtParams, DEFAULT_FLOOR};

fn main() -> timbre::Result<()> {
    let recording = harmonic_tone(262.0, 5, 0.6, 0.5, 16000 * 10, 16000);
    let chunks = chunk_waveform(&recording, 4.0)?;
    println!("10 s recording -> {} chunks of 4 s", chunks.len());

    let entries = (0..10)
        .flat_map(|p| {
            (0..2).map(move |c| ManifestEntry {
                piece_id: format!("piece{p}"),
                path: PathBuf::from(format!("piano/piece{p}_{c}.wav")),
                domain: "piano".into(),
            })
        })
        .collect();
    let manifest = PieceManifest::new(entries)?;
    let (train, test) = split_by_piece(&manifest, 0.2, 42)?;
    println!("train pieces {:?}", train.pieces());
    println!("test pieces  {:?}", test.pieces());

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let specs = chunks
        .iter()
        .map(|c| {
            let scaled = augment_rescale(c, DEFAULT_AUGMENT_RANGE, &mut rng)?;
            println!("chunk peak {:.3}", scaled.peak());
            log_magnitude(&cqt(&scaled, &CqtParams::default())?, DEFAULT_FLOOR)
        })
        .collect::<timbre::Result<Vec<_>>>()?;
    let stats = compute_domain_stats("piano", &specs)?;
    println!("{}", serde_json::to_string(&stats).unwrap());
    let normed = normalize(&specs[0], &stats)?;
    let inside = normed.data().iter().filter(|v| v.abs() <= 1.0).count() as f64 / normed.data().len() as f64;
    println!("fraction of normalised cells within [-1, 1]: {inside:.3}");
    Ok(())
}
