// Alternating uplink/downlink power allocation maximizing the sum secrecy rate.

use noma_secrecy::experiment::random_betas;
use noma_secrecy::optim::{maximize_se, SolverOptions};
use noma_secrecy::{PowerBudget, SystemConfig};

pub fn main() -> noma_secrecy::Result<()> {
    let cfg = SystemConfig::from_betas(64, random_betas(4, 3, 100.0, 7), 4, 300, 10.0)?;
    // P_max = 0 dB per user, Q_max = 20 dB in total
    let budget = PowerBudget::uniform(1.0, 100.0);
    let a = maximize_se(&cfg, &budget, &SolverOptions::default())?;

    println!("outer values: {:?}", a.trace.outer_values);
    println!("DC steps: {}, converged: {}", a.trace.steps.len(), a.trace.converged);
    println!("sum secrecy {:.4}, AN power {:.3}, data power {:.3}", a.report.sum_secrecy, a.q.an_total(), a.q.total() - a.q.an_total());
    for m in 0..cfg.n_clusters() {
        println!("cluster {m}: P {:?}  Q {:?}", a.p.cluster(m), a.q.row(m));
    }
    Ok(())
}
