// Closed-form legitimate, eavesdropping and secrecy rates for a small two-cluster cell.

use noma_secrecy::optim::fixed_downlink;
use noma_secrecy::{secrecy_report, DownlinkPower, SystemConfig, UplinkPower};

pub fn main() -> noma_secrecy::Result<()> {
    // 64 antennas, two clusters of two users, pilots of length 2, coherence 300, eavesdropper gain 10
    let cfg = SystemConfig::from_betas(64, vec![vec![80.0, 12.0], vec![45.0, 3.0]], 2, 300, 10.0)?;
    let p = UplinkPower::uniform(&cfg, 1.0);

    for (label, q) in [
        ("fixed 80/20 split", fixed_downlink(&cfg, 100.0, 0.2)?),
        ("no artificial noise", DownlinkPower::new(&cfg, vec![vec![0.0, 10.0, 40.0], vec![0.0, 10.0, 40.0]])?),
    ] {
        let r = secrecy_report(&cfg, &p, &q)?;
        println!("{label}: sum secrecy {:.4} bit/s/Hz", r.sum_secrecy);
        for (m, k) in cfg.users() {
            println!(
                "  cluster {m} user {k}: legit {:.4}  eaves {:.4}  secrecy {:.4}",
                r.legit[m][k], r.eaves[m][k], r.secrecy[m][k]
            );
        }
    }
    Ok(())
}
