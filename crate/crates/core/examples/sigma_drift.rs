//! Drive a sigma-mode session along a random sigma-stable trajectory and
//! print the per-round telemetry.
//!
//!     cargo run --release --example sigma_drift -- 2000 20 100 7

use invmaint::maintenance::synthetic::{sparse_instance, SigmaDrift};
use invmaint::maintenance::{MaintenanceSession, StabilityConfig};
use invmaint::matrix::WeightVector;
use nalgebra::DVector;
use std::sync::Arc;
use std::time::Instant;

fn main() -> invmaint::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().expect("integer argument")).collect();
    let (n, d, rounds, seed) = match args[..] {
        [n, d, r, s] => (n, d, r, s as u64),
        _ => (2000, 20, 100, 7),
    };
    let a = Arc::new(sparse_instance(n, d, 4, seed)?);
    let mut drift = SigmaDrift::new(a.clone(), seed);
    let cfg = StabilityConfig { seed, ..StabilityConfig::default() };
    let start = Instant::now();
    let (mut session, _) = MaintenanceSession::new(a.clone(), &WeightVector::ones(n), cfg)?;
    let b = DVector::from_element(d, 1.0);
    for _ in 0..rounds {
        let w = drift.next_weights()?;
        let h = session.round(&w)?;
        h.solve(&b, 1e-6)?;
    }
    print!("{}", session.telemetry_report());
    println!("total_resampled={}", session.total_resampled());
    println!("restarts={}", session.restarts());
    eprintln!("elapsed {:.2?}", start.elapsed());
    Ok(())
}
