//! Balance-equation refinement ladder on the reference American put.
use amopt::balance::{BalanceExperiment, LadderLevel};

fn main() -> amopt::Result<()> {
    let levels = [
        LadderLevel { time_steps: 250, space_nodes: 100 },
        LadderLevel { time_steps: 500, space_nodes: 200 },
        LadderLevel { time_steps: 1000, space_nodes: 400 },
    ];
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(2024);
    let base = BalanceExperiment::<f64>::reference_put(100.0, 100.0, 0.05, 0.2, 1.0, levels[0], 2000, seed)?;
    for level in levels {
        let start = std::time::Instant::now();
        let out = base.with_level(level).run()?;
        println!("dt=1/{} nodes={} v0={:.5} ({:.1}s)", level.time_steps, level.space_nodes, out.surface.eval_v(0.0, &[100.0])?, start.elapsed().as_secs_f64());
        for (i, c) in out.balance.report.checkpoints.iter().enumerate() {
            let ratios: Vec<String> = out.probes.probes.iter().map(|p| format!("{:.2}", p.ratios[i])).collect();
            println!(
                "  t={:.3} mean={:+.5} se={:.5} std={:.5} max={:.4} stop_frac={:.3} ratios=[{}]",
                c.t, c.mean, out.balance.report.stderr(i), c.std, c.max_abs, c.argmax_at_t_fraction, ratios.join(", ")
            );
        }
        println!("  compensator tol={:.5} fraction={:.5}", out.compensator.tolerance, out.compensator.fraction);
    }
    Ok(())
}
