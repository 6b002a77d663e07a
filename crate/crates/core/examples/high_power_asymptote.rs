// Rates saturate when the downlink power grows with fixed fractions.

use noma_secrecy::optim::fixed_downlink;
use noma_secrecy::rates::{asymptotic_high_power, PowerFractions};
use noma_secrecy::{compute_rho, secrecy_report, SystemConfig, UplinkPower};

pub fn main() -> noma_secrecy::Result<()> {
    let cfg = SystemConfig::from_betas(64, vec![vec![50.0, 9.0], vec![30.0, 4.0]], 2, 300, 10.0)?;
    let p = UplinkPower::uniform(&cfg, 1.0);
    let sigma = PowerFractions::normalized(&fixed_downlink(&cfg, 1.0, 0.2)?)?;
    let limits = asymptotic_high_power(&cfg, &compute_rho(&cfg, &p), &sigma)?;

    for db in [0.0, 20.0, 40.0, 60.0] {
        let r = secrecy_report(&cfg, &p, &sigma.at_total(10f64.powf(db / 10.0)))?;
        println!("Q = {db:>2} dB: sum secrecy {:.5}", r.sum_secrecy);
    }
    let limit: f64 = limits.iter().flatten().map(|l| l.secrecy()).sum();
    println!("limit:     sum secrecy {limit:.5}");
    Ok(())
}
