// Secrecy rate of the weaker users as the array grows, against its large-array limit.

use noma_secrecy::optim::fixed_downlink;
use noma_secrecy::rates::large_nt_secrecy_limit;
use noma_secrecy::{secrecy_report, SystemConfig, UplinkPower};

pub fn main() -> noma_secrecy::Result<()> {
    let base = SystemConfig::from_betas(64, vec![vec![90.0, 40.0, 10.0], vec![70.0, 50.0, 20.0]], 2, 300, 10.0)?;
    let q = fixed_downlink(&base, 100.0, 0.2)?;

    for (m, k) in base.users().filter(|(_, k)| *k > 0) {
        let limit = large_nt_secrecy_limit(&base, &q, m, k)?.value().expect("bounded for weaker users");
        print!("cluster {m} user {k} (limit {limit:.4}):");
        for n in [64, 256, 1024, 4096] {
            let cfg = base.with_n_antennas(n)?;
            let r = secrecy_report(&cfg, &UplinkPower::uniform(&cfg, 1.0), &q)?;
            print!("  N={n} {:.4}", r.secrecy[m][k]);
        }
        println!();
    }
    Ok(())
}
