// Compares the closed-form rates and moments with a Monte Carlo simulation of the
// same channel model.

use noma_secrecy::montecarlo::{ergodic_rate_oracle, moment_suite};
use noma_secrecy::optim::fixed_downlink;
use noma_secrecy::{secrecy_report, SystemConfig, UplinkPower};

pub fn main() -> noma_secrecy::Result<()> {
    let cfg = SystemConfig::from_betas(128, vec![vec![60.0, 20.0], vec![35.0, 8.0]], 2, 300, 10.0)?;
    let p = UplinkPower::uniform(&cfg, 1.0);
    let q = fixed_downlink(&cfg, 100.0, 0.2)?;
    let trials = 2000;

    let moments = moment_suite(&cfg, &p, &q, trials, 1)?;
    let worst = moments.iter().map(|r| r.z_score()).fold(0.0, f64::max);
    println!("{} moments, largest deviation {worst:.2} standard errors", moments.len());

    let closed = secrecy_report(&cfg, &p, &q)?;
    let mc = ergodic_rate_oracle(&cfg, &p, &q, trials, 1)?;
    for (m, k) in cfg.users() {
        let (c, s) = (closed.secrecy[m][k], mc.report.secrecy[m][k]);
        println!(
            "cluster {m} user {k}: closed form {c:.4}  simulated {s:.4} +- {:.4}  gap {:.2}%",
            mc.gap_se[m][k],
            100.0 * (c - s).abs() / s
        );
    }
    Ok(())
}
