//! Generates meeting instances of growing size and prints the oracle's
//! schedule for each, checked for feasibility.
//!
//! ```text
//! cargo run --example meeting_oracle [seed]
//! ```

use scope::domains::{generate_meeting_instance, render_meeting_answer, schedule_is_feasible, solve_meeting_oracle};
use scope::engine::clock12;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    for n in 1..=5 {
        let inst = generate_meeting_instance(seed, n)?;
        let schedule = solve_meeting_oracle(&inst);
        assert!(schedule_is_feasible(&inst, &schedule));
        println!(
            "{n} friend(s), start {} at {}: meet {}",
            inst.origin.place,
            clock12(inst.origin.time),
            schedule.friends_met()
        );
        for m in &schedule.visits {
            println!("  {:<10} {} to {}  at {}", m.friend, clock12(m.start), clock12(m.end), m.place);
        }
    }
    let inst = generate_meeting_instance(seed, 3)?;
    println!("\n{}", render_meeting_answer(&inst, &solve_meeting_oracle(&inst)));
    Ok(())
}
