//! Repulsion and attraction eigenfrequencies across a detuning sweep.
//!
//!     cargo run --example eigenmodels

use kerrsim::analysis::{eigenfreqs_attraction, eigenfreqs_repulsion};

fn main() {
    let (wb, j) = (5.0, 0.002);
    println!("{:>10} {:>22} {:>34}", "delta MHz", "repulsion (MHz)", "attraction (MHz, re/im)");
    for k in -8..=8 {
        let delta = k as f64 * 1e-3;
        let (u, l) = eigenfreqs_repulsion(wb + delta, wb, j);
        let (p, m) = eigenfreqs_attraction(wb + delta, wb, j);
        println!(
            "{:>10.1} {:>10.3} {:>10.3}   {:>7.3}{:+.3}i {:>7.3}{:+.3}i",
            delta * 1e3,
            (u - wb) * 1e3,
            (l - wb) * 1e3,
            (p.re - wb) * 1e3,
            p.im * 1e3,
            (m.re - wb) * 1e3,
            m.im * 1e3
        );
    }
    println!("exceptional points at delta = +-{:.1} MHz", 2e3 * j);
}
