//! The 8-bit mu-law codec used for WaveNet targets.

use timbre::wavenet::{mulaw_decode, mulaw_encode, MuLawParams};

fn main() -> timbre::Result<()> {
    let p = MuLawParams::default();
    for x in [-1.0, -0.5, -0.1, -0.01, 0.0, 0.01, 0.1, 0.5, 1.0] {
        let code = mulaw_encode(x, &p)?;
        println!("{x:6.2} -> {code:3} -> {:+.5}", mulaw_decode(code, &p)?);
    }
    let worst = (0..=20000)
        .map(|i| -1.0 + i as f64 / 10000.0)
        .map(|x| {
            let back = mulaw_decode(mulaw_encode(x, &p).unwrap(), &p).unwrap();
            (x - back).abs()
        })
        .fold(0.0, f64::max);
    println!("largest round-trip error on a 20001-point grid: {worst:.4}");
    Ok(())
}
