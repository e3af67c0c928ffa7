//! Pilot sweep used to pick the zeta-variant budget constant `kappa`.
//!
//! Runs the four zeta-variant sweeps over L in {1e3, 3e3, 1e4, 3e4, 1e5} and
//! prints, per check, the largest `|ratio - 1| / (ln ln(pi L) / ln(pi L))`
//! seen at `L >= 1e4`.
//!
//!     cargo run --release -p ladderlab --example pilot -- [cache.csv]

use std::time::Instant;

use ladderlab::factorization::FunctionId;
use ladderlab::hybrid::{zeta_budget, Check, Variant, BUDGET_FROM_L};
use ladderlab::LabConfig;

fn main() -> ladderlab::Result<()> {
    let cache = std::env::args().nth(1).map(Into::into);
    let cfg = LabConfig::default();
    let lab = cfg.build_lab(cache)?;
    let mut plan = cfg.sweep_plan(vec![1.0e3, 3.0e3, 1.0e4, 3.0e4, 1.0e5]);
    plan.kappa = None;
    let checks = [
        Check::Lemma {
            f: FunctionId::F1,
            k: 1,
        },
        Check::Chf { levels: [1; 4] },
        Check::Sincos { k5: 1, k6: 1 },
        Check::Secondary { levels: [1; 4] },
    ];
    for check in &checks {
        let start = Instant::now();
        let sweep = lab.sweep(check, &plan, cfg.u_default, Variant::Zeta)?;
        let worst = sweep
            .points
            .iter()
            .filter(|p| p.l >= BUDGET_FROM_L)
            .filter_map(|p| p.deviation().map(|d| d / zeta_budget(1.0, p.l)))
            .fold(0.0f64, f64::max);
        let failed = sweep.points.iter().filter(|p| p.error.is_some()).count();
        println!(
            "{:<12} worst normalised deviation {worst:.3e}  failed points {failed}  [{:.1}s]",
            sweep.formula,
            start.elapsed().as_secs_f64()
        );
        for m in &sweep.decade_medians {
            println!(
                "    decade {} (n = {}): median |ratio - 1| = {:.3e}",
                m.decade, m.count, m.median
            );
        }
    }
    Ok(())
}
