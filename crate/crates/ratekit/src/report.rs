//! JSON rendering of analytic and simulated results.

use ratekit_core::sim::SimResult;
use ratekit_core::ThroughputReport;
use serde_json::{json, Value};

pub fn analysis_json(r: &ThroughputReport) -> Value {
    let states: Vec<Value> = r
        .states
        .iter()
        .enumerate()
        .map(|(k, s)| {
            json!({
                "state": s.to_string(),
                "pi": r.solution.pi[k],
                "mu_s": r.solution.mu[k],
                "theta_s": r.theta[k],
                "time_fraction": r.solution.p_time[k],
            })
        })
        .collect();
    json!({
        "algorithm": r.algorithm.name(),
        "with_overhead": r.with_overhead,
        "throughput_bps": r.throughput_bps,
        "rate_fractions": r.rate_fractions,
        "states": states,
    })
}

pub fn simulation_json(s: &SimResult) -> Value {
    json!({
        "throughput_bps": s.throughput_est,
        "throughput_stderr_bps": s.throughput_stderr,
        "time_fractions": s.time_fraction_est,
        "time_fraction_stderrs": s.time_fraction_stderr,
        "transmit_fractions": s.transmit_fraction_est,
        "transmit_fraction_stderrs": s.transmit_fraction_stderr,
        "measured_packets": s.measured_packets,
        "total_time_s": s.total_sim_time,
        "batches": s.batches,
    })
}
