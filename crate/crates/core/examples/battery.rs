//! Runs the sampled invariant battery on a random tree spec.

use maho_rd::battery::{all_passed, run_battery, BatteryConfig};
use maho_rd::sample::random_spec;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let spec = random_spec(&mut rng, 4);
    let d = 0.5 * spec.sigma_x0_sq();
    let checks = run_battery(
        &spec,
        d,
        &BatteryConfig {
            samples: 50,
            ..Default::default()
        },
        &mut rng,
    );
    for c in &checks {
        println!(
            "{:<26} {:?} worst {:?} {}",
            c.name,
            c.status,
            c.worst_slack,
            c.note.as_deref().unwrap_or("")
        );
    }
    println!("all passed: {}", all_passed(&checks));
}
