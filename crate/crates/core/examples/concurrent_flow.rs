//! Maximum concurrent flow of three commodities on a directed ring.
//!
//!     cargo run --release --example concurrent_flow

use invmaint::lp::flow::{concurrent_flow, FlowInstance};
use invmaint::lp::IpmConfig;

fn main() -> invmaint::Result<()> {
    let n = 6;
    let mut f = FlowInstance::new(n);
    for v in 0..n {
        f = f.arc(v, (v + 1) % n, 2, 0).arc((v + 1) % n, v, 1, 0);
    }
    let f = f.commodity(0, 3).commodity(1, 4).commodity(2, 5);
    let r = concurrent_flow(&f, 1e-7, &IpmConfig::default())?;
    println!("alpha = {:.6} ({} iterations)", r.alpha, r.stats.iterations);
    for (i, flow) in r.flows.iter().enumerate() {
        let used: Vec<String> = f
            .arcs
            .iter()
            .zip(flow)
            .filter(|(_, v)| **v > 1e-6)
            .map(|(a, v)| format!("{}->{}:{v:.3}", a.from, a.to))
            .collect();
        println!("commodity {i}: {}", used.join(" "));
    }
    Ok(())
}
