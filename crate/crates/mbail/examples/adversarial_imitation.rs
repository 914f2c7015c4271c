//! The adversarial model-based imitation loop on the small chain
//! environment: exponential-weights reward play, likelihood-based model
//! elimination, and optimistic planning, with the average-regret curve.

use mbail::analysis::regret_summary;
use mbail::harness::small_instance;
use mbail::learner::{evaluate_ail_gap, mixture_policy, run_mbail, MbailConfig};
use mbail::mdp::{sample_trajectory, Dataset};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let (mdp, reward_class, model_class, expert) = small_instance().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let data = Dataset::new(
        (0..20).map(|_| sample_trajectory(&mdp, &expert, &mut rng).unwrap()).collect(),
    );

    let config = MbailConfig::standard(1000, model_class.len(), reward_class.len());
    println!(
        "{} models, {} rewards, beta {:.2}, hedge rate {:.4}",
        model_class.len(),
        reward_class.len(),
        config.beta,
        config.learning_rate
    );

    let log = run_mbail(&mdp, &expert, &data, &reward_class, &model_class, &config, &mut rng)
        .unwrap();
    let summary = regret_summary(&log).unwrap();
    println!("average regret by round:");
    for (k, avg) in &summary.average_regret {
        println!("  round {k:5}: {avg:.4}");
    }
    println!("late/early ratio {:.3}", summary.sublinearity_ratio);
    println!("reward-player optimization error {:.4}", summary.opt_error);
    println!("truth kept in version space {:.1}% of rounds", 100.0 * log.truth_containment_rate());

    let mixed = mixture_policy(&log.policies).unwrap();
    let gap = evaluate_ail_gap(&mdp, &expert, &mixed, &reward_class).unwrap();
    println!("final mixture worst-case value gap {gap:.4}");
}
