// Runs an antenna sweep through the experiment driver and prints the summary table.

use noma_secrecy::experiment::{run_sweep, ExperimentSpec};

pub fn main() -> noma_secrecy::Result<()> {
    let spec = ExperimentSpec::from_json(
        r#"{
            "scenario": "antenna-sweep",
            "n_antennas": 32,
            "random_clusters": {"n_clusters": 4, "users_per_cluster": 2},
            "sweep": {"axis": "n_antennas", "values": [32, 64]},
            "seed": 3
        }"#,
    )?;
    let out = run_sweep(&spec)?;
    print!("{}", out.summary.to_csv()?);
    Ok(())
}
