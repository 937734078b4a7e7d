//! Orders documents from pairwise preference weights with the greedy
//! feedback-arc-set heuristic, and checks it against exhaustive search.
//!
//! ```text
//! cargo run --example fas_ranking
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selfrank::decoding::{fas_exact, fas_greedy, Tournament};
use selfrank::verify::random_tournament;

fn main() -> selfrank::Result<()> {
    // Three clear preferences and one contradicting edge.
    let mut t = Tournament::new(4);
    t.set(0, 1, 2.0);
    t.set(1, 2, 1.5);
    t.set(2, 3, 1.0);
    t.set(0, 3, -0.5);
    let order = fas_greedy(&t);
    println!(
        "greedy order {:?}, backward weight {:.2}",
        order.sequence(),
        t.backward_weight(&order)
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (mut matched, total) = (0, 200);
    for _ in 0..total {
        let t = random_tournament(&mut rng, 6);
        let g = t.backward_weight(&fas_greedy(&t));
        let e = t.backward_weight(&fas_exact(&t)?);
        if (g - e).abs() <= 1e-9 * e.abs().max(1.0) {
            matched += 1;
        }
    }
    println!("greedy optimal on {matched}/{total} random 6-document tournaments");
    Ok(())
}
