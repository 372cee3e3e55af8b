//! Evaluates the adversarial training objective pieces on small reference
//! maps: gradient penalty, cycle and identity losses, and the schedules.

use ndarray::array;
use timbre::gan::{
    cycle_consistency_loss, gradient_penalty, identity_loss, identity_weight, learning_rate,
    total_objective, ElementwiseAffine, LinearCritic, ObjectiveConfig, ObjectiveParts,
};

fn main() -> timbre::Result<()> {
    let cfg = ObjectiveConfig::default();
    let real = array![[0.1, -0.4, 0.9], [0.3, 0.2, -0.7]];
    let fake = array![[0.0, 0.5, -0.2], [-0.6, 0.1, 0.4]];

    for norm in [1.0, 2.0, 0.5] {
        let critic = LinearCritic { w: vec![norm, 0.0, 0.0], b: 0.3 };
        let gp = gradient_penalty(&critic, &real, &fake, cfg.gp_alpha, 0)?;
        println!("linear critic |w| = {norm}: penalty {:.6} (weighted {:.6})", gp.raw, gp.weighted);
    }

    let forward = ElementwiseAffine::uniform(3, 1.5, 0.2);
    let backward = forward.inverse()?;
    let cycle = cycle_consistency_loss(&real, &fake, &forward, &backward)?;
    let identity = identity_loss(&real, &fake, &forward, &backward)?;
    println!("cycle loss with exact inverse {cycle:.3e}, identity loss {identity:.4}");

    let parts = ObjectiveParts {
        adversarial: 1.2,
        cycle,
        identity,
        gradient_penalty: 0.05,
    };
    for step in [0, 2_500, 100_000, 800_000, 1_500_000] {
        println!(
            "step {step:9}: identity weight {:.3}, lr {:.2e}, total {:.4}",
            identity_weight(step, &cfg),
            learning_rate(step, &cfg),
            total_objective(&parts, &cfg, step)?
        );
    }
    Ok(())
}
