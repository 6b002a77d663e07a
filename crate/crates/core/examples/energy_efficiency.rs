// Energy-efficient allocation by Dinkelbach iterations, next to the SE-optimal one.

use noma_secrecy::experiment::random_betas;
use noma_secrecy::optim::{maximize_ee, maximize_se, SolverOptions};
use noma_secrecy::rates::energy_efficiency;
use noma_secrecy::{db_to_linear, PowerBudget, SystemConfig};

pub fn main() -> noma_secrecy::Result<()> {
    let cfg = SystemConfig::from_betas(64, random_betas(4, 3, 100.0, 7), 4, 300, 10.0)?;
    let budget = PowerBudget::uniform(1.0, 100.0);
    let p_f = db_to_linear(-5.0);
    let opts = SolverOptions::default();

    let ee = maximize_ee(&cfg, &budget, p_f, &opts)?;
    println!("lambda: {:?}", ee.trace.lambda_sequence);
    println!("F(lambda): {:?}", ee.trace.subtractive_values);

    let se = maximize_se(&cfg, &budget, &opts)?;
    for (label, a) in [("EE-optimal", &ee), ("SE-optimal", &se)] {
        println!(
            "{label}: SE {:.4}, EE {:.4}, power {:.3}",
            a.report.sum_secrecy,
            energy_efficiency(&a.report, &a.p, &a.q, p_f)?,
            a.p.total() + a.q.total()
        );
    }
    Ok(())
}
