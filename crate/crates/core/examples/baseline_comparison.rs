// Proposed allocation against downlink-only, uplink-only and fixed allocation.

use noma_secrecy::experiment::random_betas;
use noma_secrecy::optim::{allocate_se, Scheme, SolverOptions};
use noma_secrecy::{PowerBudget, SystemConfig};

pub fn main() -> noma_secrecy::Result<()> {
    let base = SystemConfig::from_betas(32, random_betas(4, 3, 100.0, 0), 4, 300, 10.0)?;
    let budget = PowerBudget::uniform(1.0, 100.0);
    let opts = SolverOptions::default();

    println!("{:>5} {:>9} {:>9} {:>9} {:>9}", "N", "proposed", "downlink", "uplink", "fixed");
    for n in [32, 64, 128] {
        let cfg = base.with_n_antennas(n)?;
        print!("{n:>5}");
        for scheme in Scheme::ALL {
            print!(" {:>9.4}", allocate_se(&cfg, &budget, scheme, &opts)?.report.sum_secrecy);
        }
        println!();
    }
    Ok(())
}
