//! Shared inputs for the criterion benchmarks.

use privmine_core::synth::{generate_log, SynthConfig};
use privmine_core::EventLog;

pub fn bench_log(individuals: usize) -> EventLog {
    generate_log(&SynthConfig {
        individuals,
        seed: 11,
        ..SynthConfig::default()
    })
}
