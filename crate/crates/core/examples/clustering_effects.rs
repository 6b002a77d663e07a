// Twenty users grouped three ways with the same total power. Smaller clusters give
// each user a cleaner channel estimate.

use noma_secrecy::experiment::random_betas;
use noma_secrecy::optim::fixed_downlink;
use noma_secrecy::{secrecy_report, SystemConfig, UplinkPower};

pub fn main() -> noma_secrecy::Result<()> {
    let seeds = 20;
    for (m, k) in [(10, 2), (5, 4), (4, 5)] {
        let mut mean = 0.0;
        for seed in 0..seeds {
            // pilot length equals the number of clusters
            let cfg = SystemConfig::from_betas(64, random_betas(m, k, 100.0, seed), m, 300, 10.0)?;
            let r = secrecy_report(&cfg, &UplinkPower::uniform(&cfg, 1.0), &fixed_downlink(&cfg, 100.0, 0.2)?)?;
            mean += r.mean_secrecy() / seeds as f64;
        }
        println!("M={m:>2} K={k}: mean per-user secrecy rate {mean:.4}");
    }
    Ok(())
}
