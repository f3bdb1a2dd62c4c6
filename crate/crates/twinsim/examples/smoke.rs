//! Per-slot trace of a single run, for quick eyeballing.
//!
//! Usage: cargo run --example smoke [scheme] [seed] [bandwidth_hz]

use twinsim::msvs::{ScenarioConfig, Scheme};
use twinsim::sim::{run, SimConfig, SlotEvent};

fn main() {
    let scheme = std::env::args().nth(1).unwrap_or_else(|| "proposed".into());
    let seed: u64 = std::env::args()
        .nth(2)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    let bw: f64 = std::env::args()
        .nth(3)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1.0e6);
    let sim = SimConfig {
        seed,
        horizon: 200,
        ..Default::default()
    };
    let cfg = ScenarioConfig {
        scheme: scheme.parse::<Scheme>().unwrap(),
        total_bandwidth_hz: bw,
        ..Default::default()
    };
    let t0 = std::time::Instant::now();
    let report = run(&sim, &cfg).unwrap();
    let dt = t0.elapsed();
    for row in &report.rows {
        let ev = &report.event_log[row.slot as usize].events;
        let regroups = ev
            .iter()
            .filter(|e| matches!(e, SlotEvent::Regroup { .. }))
            .count();
        let faults = ev
            .iter()
            .filter(|e| matches!(e, SlotEvent::Fault { .. }))
            .count();
        if row.slot % 5 == 0 || row.triggers > 0 || regroups > 0 || faults > 0 {
            println!(
                "slot {:3} qoe {:7.3} trig {:2} upd {} coll {:3} quota {:9.0} bitrate {:9.0} rebuf {:6.1} waste {:6.1} buf {:5.2} rg {} faults {}",
                row.slot,
                row.mean_qoe,
                row.triggers,
                row.updates,
                row.collections,
                row.msvs_quota_hz,
                row.mean_bitrate_bps,
                row.rebuffer_s,
                row.wasted_prefetch_s,
                row.mean_buffer_s,
                regroups,
                faults,
            );
        }
    }
    for se in &report.event_log {
        for e in &se.events {
            if let SlotEvent::Fault { phase, message } = e {
                println!("FAULT slot {} {phase}: {message}", se.slot);
            }
        }
    }
    println!(
        "mean_qoe {:.4} triggers {} updates {} update_slots {:?} elapsed {:.2?}",
        report.mean_qoe(),
        report.trigger_count(),
        report.update_count(),
        report.update_slots(),
        dt
    );
}
