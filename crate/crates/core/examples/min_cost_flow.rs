//! Exact minimum cost maximum flow through the LP solver, from a DIMACS file
//! or a built-in grid.
//!
//!     cargo run --release --example min_cost_flow -- data/bundle/flow.dimacs

use invmaint::lp::flow::{min_cost_flow, read_dimacs, FlowInstance};
use invmaint::lp::IpmConfig;

fn main() -> invmaint::Result<()> {
    let f = match std::env::args().nth(1) {
        Some(path) => read_dimacs(path)?,
        None => {
            // 3x3 grid, source top-left, sink bottom-right
            let id = |r: usize, c: usize| 3 * r + c;
            let mut f = FlowInstance::new(9);
            for r in 0..3 {
                for c in 0..3 {
                    if c + 1 < 3 {
                        f = f.arc(id(r, c), id(r, c + 1), 1 + ((r + c) % 3) as i64, 1 + (r * c % 4) as i64);
                    }
                    if r + 1 < 3 {
                        f = f.arc(id(r, c), id(r + 1, c), 2, 1 + ((r + 2 * c) % 3) as i64);
                    }
                }
            }
            f.terminals(0, 8)
        }
    };
    let r = min_cost_flow(&f, 1, &IpmConfig::default())?;
    println!("flow value {} at cost {}", r.value, r.cost);
    println!("largest rounding distance {:.2e}, {} iterations", r.rounding_error, r.stats.iterations);
    for (a, v) in f.arcs.iter().zip(&r.flow) {
        if *v != 0 {
            println!("  {} -> {}: {v}/{} (cost {})", a.from + 1, a.to + 1, a.cap, a.cost);
        }
    }
    Ok(())
}
