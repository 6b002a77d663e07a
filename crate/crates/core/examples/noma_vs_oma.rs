// NOMA clusters against TDMA, where each user of a cluster gets its own slot.

use noma_secrecy::experiment::random_betas;
use noma_secrecy::optim::{allocate_tdma, maximize_ee, maximize_se, Scheme, SolverOptions};
use noma_secrecy::{db_to_linear, PowerBudget, SystemConfig};

pub fn main() -> noma_secrecy::Result<()> {
    let budget = PowerBudget::uniform(1.0, 100.0);
    let p_f = db_to_linear(-5.0);
    let opts = SolverOptions::default();
    let betas = random_betas(4, 2, 100.0, 0);

    for n in [32, 128] {
        let cfg = SystemConfig::from_betas(n, betas.clone(), 4, 300, 10.0)?;
        let noma_se = maximize_se(&cfg, &budget, &opts)?.report.sum_secrecy;
        let noma_ee = maximize_ee(&cfg, &budget, p_f, &opts)?.report.ee.unwrap_or(f64::NAN);
        let oma_se = allocate_tdma(&cfg, &budget, Scheme::Proposed, None, &opts)?.sum_secrecy;
        let oma_ee = allocate_tdma(&cfg, &budget, Scheme::Proposed, Some(p_f), &opts)?.ee.unwrap_or(f64::NAN);
        println!("N={n}: NOMA SE {noma_se:.4} EE {noma_ee:.4} | TDMA SE {oma_se:.4} EE {oma_ee:.4}");
    }
    Ok(())
}
