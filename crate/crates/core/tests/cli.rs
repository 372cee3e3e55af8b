use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use timbre::io::{read_spectrogram, read_wav, write_wav, SpectrogramFile};
use timbre::signal::sine;
use timbre::Waveform;

fn timbre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_timbre")).args(args).output().unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = timbre(args);
    assert!(
        out.status.success(),
        "`timbre {}` failed: {}",
        args.join(" "),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(args: &[&str]) -> (i32, String) {
    let out = timbre(args);
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Scratch {
    dir: tempfile::TempDir,
}

impl Scratch {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
    fn tone(&self, name: &str, freq: f64, len: usize) -> PathBuf {
        let p = self.path(name);
        write_wav(&p, &sine(freq, 0.5, len, 16000)).unwrap();
        p
    }
}

/// Two-layer, width-8 net trained for a couple of steps: enough for shape
/// and determinism checks.
fn tiny_weights(t: &Scratch) -> PathBuf {
    let wav = t.tone("train.wav", 440.0, 9000);
    let out = t.path("tiny.ttwn");
    ok(&[
        "train-wavenet", "--in", s(&wav), "--layers", "2", "--width", "8", "--dilation-cycle", "2",
        "--steps", "2", "--log-every", "0", "--out", s(&out),
    ]);
    out
}

#[test]
fn usage_and_input_errors_map_to_exit_codes() {
    let t = Scratch::new();
    assert_eq!(code(&[]).0, 1);
    assert_eq!(code(&["analyze"]).0, 1);
    assert_eq!(code(&["synth", "--spec", "a", "--weights", "b", "--out", "c", "--beam-width", "wide"]).0, 1);

    let (c, err) = code(&["analyze", "--in", s(&t.path("absent.wav")), "--out", s(&t.path("x.ttsg"))]);
    assert_eq!(c, 2);
    assert!(err.contains("absent.wav"), "{err}");

    let junk = t.path("junk.wav");
    std::fs::write(&junk, b"definitely not RIFF").unwrap();
    assert_eq!(code(&["analyze", "--in", s(&junk), "--out", s(&t.path("x.ttsg"))]).0, 2);

    let cd = t.path("cd.wav");
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: 44100,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(&cd, spec).unwrap();
    for _ in 0..4410 {
        w.write_sample(0i16).unwrap();
    }
    w.finalize().unwrap();
    let (c, err) = code(&["analyze", "--in", s(&cd), "--out", s(&t.path("x.ttsg"))]);
    assert_eq!(c, 2);
    assert!(err.contains("44100"), "{err}");
}

#[test]
fn analyze_four_seconds_gives_250_frames_and_a_png() {
    let t = Scratch::new();
    let wav = t.tone("a4.wav", 440.0, 64000);
    let (spec, png) = (t.path("a4.ttsg"), t.path("a4.png"));
    ok(&["analyze", "--in", s(&wav), "--out", s(&spec), "--png", s(&png)]);
    let file = read_spectrogram(&spec).unwrap();
    assert!(matches!(file, SpectrogramFile::LogMag(_)));
    assert_eq!((file.frames(), file.bins()), (250, 336));
    assert_eq!(image::image_dimensions(&png).unwrap(), (250, 336));
    let lm = file.into_log_magnitude().unwrap();
    assert!(lm.argmax_bins()[10..240].iter().all(|&b| b == 180));

    let stft = t.path("a4-stft.ttsg");
    ok(&["analyze", "--in", s(&wav), "--repr", "stft", "--complex", "--out", s(&stft)]);
    let file = read_spectrogram(&stft).unwrap();
    assert!(matches!(file, SpectrogramFile::Complex(_)));
    assert_eq!(file.bins(), 337);
}

#[test]
fn pitchshift_moves_the_peak_four_bins_per_semitone() {
    let t = Scratch::new();
    let wav = t.tone("tone.wav", 440.0, 16000);
    let spec = t.path("tone.ttsg");
    ok(&["analyze", "--in", s(&wav), "--out", s(&spec)]);
    for (semitones, bin) in [("12", 228), ("-3", 168)] {
        let out = t.path(&format!("shift{semitones}.ttsg"));
        ok(&["pitchshift", "--in", s(&spec), "--semitones", semitones, "--out", s(&out)]);
        let lm = read_spectrogram(&out).unwrap().into_log_magnitude().unwrap();
        assert!(lm.argmax_bins()[5..55].iter().all(|&b| b == bin), "{semitones}");
    }
    let stft = t.path("tone-stft.ttsg");
    ok(&["analyze", "--in", s(&wav), "--repr", "stft", "--out", s(&stft)]);
    assert_eq!(code(&["pitchshift", "--in", s(&stft), "--semitones", "1", "--out", s(&t.path("no.ttsg"))]).0, 2);
}

#[test]
fn griffinlim_writes_audio_and_a_non_increasing_log() {
    let t = Scratch::new();
    let wav = t.tone("tone.wav", 330.0, 8000);
    let spec = t.path("tone.ttsg");
    ok(&["analyze", "--in", s(&wav), "--repr", "stft", "--out", s(&spec)]);
    let (out, log) = (t.path("gl.wav"), t.path("mse.json"));
    ok(&["griffinlim", "--in", s(&spec), "--out", s(&out), "--iterations", "20", "--mse-log", s(&log)]);
    let mse: Vec<f64> = serde_json::from_str(&std::fs::read_to_string(&log).unwrap()).unwrap();
    assert_eq!(mse.len(), 21);
    assert!(mse.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-7)));
    assert_eq!(read_wav(&out).unwrap().len(), 32 * 256);

    let cqt = t.path("tone-cqt.ttsg");
    ok(&["analyze", "--in", s(&wav), "--out", s(&cqt)]);
    assert_eq!(code(&["griffinlim", "--in", s(&cqt), "--out", s(&t.path("no.wav"))]).0, 2);
}

#[test]
fn synth_is_seeded_and_beam_search_fills_the_whole_spectrogram() {
    let t = Scratch::new();
    let weights = tiny_weights(&t);
    let wav = t.tone("long.wav", 440.0, 64000);
    let spec = t.path("long.ttsg");
    ok(&["analyze", "--in", s(&wav), "--out", s(&spec)]);

    let beam_out = t.path("beam.wav");
    let log = t.path("beam.json");
    ok(&[
        "synth", "--spec", s(&spec), "--weights", s(&weights), "--out", s(&beam_out), "--beam-width", "8",
        "--beam-log", s(&log),
    ]);
    assert_eq!(read_wav(&beam_out).unwrap().len(), 64000);
    let log: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&log).unwrap()).unwrap();
    let iterations = log["iterations"].as_array().unwrap();
    assert_eq!(iterations.len(), 64000 / 2048 + 1);
    assert!(iterations.iter().all(|it| it["scores"].as_array().unwrap().len() == 8));

    let short = t.path("short.ttsg");
    ok(&["analyze", "--in", s(&t.tone("short.wav", 440.0, 4000)), "--out", s(&short)]);
    let run = |name: &str, extra: &[&str]| {
        let out = t.path(name);
        let mut args = vec!["synth", "--spec", s(&short), "--weights", s(&weights), "--out", s(&out)];
        args.extend_from_slice(extra);
        ok(&args);
        read_wav(&out).unwrap()
    };
    let a = run("a.wav", &["--seed", "5"]);
    let b = run("b.wav", &["--seed", "5"]);
    let c = run("c.wav", &["--seed", "6"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.len(), 16 * 256);
    assert_eq!(run("slow.wav", &["--stretch", "2"]).len(), 16 * 512);
    assert_eq!(run("rev.wav", &["--reverse"]).len(), 16 * 256);
    assert_eq!(
        code(&["synth", "--spec", s(&short), "--weights", s(&weights), "--out", s(&t.path("x.wav")), "--reverse", "--beam-width", "2"]).0,
        2
    );
}

#[test]
fn chunk_split_stats_and_schedules() {
    let t = Scratch::new();
    let long = t.tone("take.wav", 220.0, 16000 * 10);
    let chunks = t.path("chunks");
    std::fs::create_dir(&chunks).unwrap();
    ok(&["chunk", "--in", s(&long), "--out-dir", s(&chunks)]);
    let mut names: Vec<String> = std::fs::read_dir(&chunks)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(names, ["take_0000.wav", "take_0001.wav"]);
    let first = read_wav(chunks.join(&names[0])).unwrap();
    assert_eq!(first.len(), 64000);

    let mut manifest = String::from("# piece\tpath\tdomain\n");
    for (i, f) in [196.0, 262.0, 330.0, 392.0, 440.0].iter().enumerate() {
        let name = format!("p{i}.wav");
        t.tone(&name, *f, 8000);
        manifest += &format!("piece{i}\t{name}\tpiano\n");
    }
    let m = t.path("all.tsv");
    std::fs::write(&m, manifest).unwrap();
    let (train, test) = (t.path("train.tsv"), t.path("test.tsv"));
    ok(&["split", "--manifest", s(&m), "--test-fraction", "0.4", "--seed", "3", "--train-out", s(&train), "--test-out", s(&test)]);
    let train_m = timbre::dataset::PieceManifest::read(&train).unwrap();
    let test_m = timbre::dataset::PieceManifest::read(&test).unwrap();
    assert_eq!((train_m.len(), test_m.len()), (3, 2));
    assert!(train_m.pieces().iter().all(|p| !test_m.pieces().contains(p)));

    let stats = t.path("piano.json");
    ok(&["stats", "--manifest", s(&m), "--domain", "piano", "--out", s(&stats)]);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&stats).unwrap()).unwrap();
    assert_eq!(json["domain"], "piano");
    assert!(json["std"].as_f64().unwrap() > 0.0);
    assert_eq!(code(&["stats", "--manifest", s(&m), "--domain", "violin", "--out", s(&t.path("v.json"))]).0, 2);

    let normed = t.path("p0-norm.ttsg");
    ok(&["analyze", "--in", s(&t.path("p0.wav")), "--normalize", s(&stats), "--out", s(&normed)]);
    let weights = tiny_weights(&t);
    let synth_args = |extra: &[&str]| {
        let mut v = vec!["synth", "--spec", s(&normed), "--weights", s(&weights), "--out", s(&t.path("n.wav"))]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>();
        v.extend(extra.iter().map(|x| x.to_string()));
        v
    };
    let refuse = synth_args(&[]);
    assert_eq!(code(&refuse.iter().map(String::as_str).collect::<Vec<_>>()).0, 2);
    let accept = synth_args(&["--denormalize", s(&stats)]);
    ok(&accept.iter().map(String::as_str).collect::<Vec<_>>());

    let csv = t.path("schedules.csv");
    ok(&["schedules", "--out", s(&csv), "--every", "100000"]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "step,identity_weight,learning_rate");
    assert_eq!(rows.len(), 1 + 16);
    assert!(rows.contains(&"800000,2.5,0.00005"), "{rows:?}");
}

#[test]
fn wav_round_trip_through_the_cli_is_sample_exact() {
    let t = Scratch::new();
    let wave = Waveform::new((0..4000).map(|i| ((i * 37 % 200) as f64 - 100.0) / 128.0).collect(), 16000).unwrap();
    let p = t.path("ramp.wav");
    write_wav(&p, &wave).unwrap();
    let back = read_wav(&p).unwrap();
    let again = t.path("again.wav");
    write_wav(&again, &back).unwrap();
    assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(&again).unwrap());
    let chunks = t.path("c");
    std::fs::create_dir(&chunks).unwrap();
    ok(&["chunk", "--in", s(&p), "--seconds", "0.125", "--out-dir", s(&chunks)]);
    let piece = read_wav(chunks.join("ramp_0001.wav")).unwrap();
    assert_eq!(piece.samples(), &back.samples()[2000..4000]);
}
