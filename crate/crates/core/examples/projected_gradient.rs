// The concave maximization kernel on its own: a log-utility problem over a capped simplex.

use noma_secrecy::kernel::{maximize, ConcaveProblem, FeasibleSet, FnObjective, KernelOptions};

pub fn main() -> noma_secrecy::Result<()> {
    // maximize sum_i log(1 + a_i x_i) subject to x >= 0, sum x <= 10: water-filling
    let a = [4.0, 2.0, 1.0, 0.25];
    let obj = FnObjective::new(a.len(), |x: &[f64]| {
        let v = a.iter().zip(x).map(|(ai, xi)| (1.0 + ai * xi).ln()).sum();
        let g = a.iter().zip(x).map(|(ai, xi)| ai / (1.0 + ai * xi)).collect();
        (v, g)
    });
    let problem = ConcaveProblem {
        objective: &obj,
        feasible_set: FeasibleSet::CappedSimplex { cap: 10.0 },
    };
    let res = maximize(&problem, &[0.0; 4], &KernelOptions::default())?;
    println!("x = {:?}", res.point);
    println!("value {:.6}, stationarity {:.1e}, {} iterations", res.value, res.stationarity, res.iterations);
    // active users share a common water level 1/a_i + x_i
    for (ai, xi) in a.iter().zip(&res.point) {
        println!("  a = {ai:<4}  level {:.6}", 1.0 / ai + xi);
    }
    Ok(())
}
