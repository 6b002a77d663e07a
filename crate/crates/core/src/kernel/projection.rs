use serde::Serialize;

/// Feasible regions used by the power-allocation subproblems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FeasibleSet {
    /// `lower <= x <= upper` componentwise.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    /// `x >= 0`, `sum x <= cap`.
    CappedSimplex { cap: f64 },
}

impl FeasibleSet {
    pub fn unit_box(dim: usize) -> Self {
        FeasibleSet::Box {
            lower: vec![0.0; dim],
            upper: vec![1.0; dim],
        }
    }

    /// Euclidean projection of `x`.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        match self {
            FeasibleSet::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .map(|(v, (lo, hi))| v.clamp(*lo, *hi))
                .collect(),
            FeasibleSet::CappedSimplex { cap } => project_capped_simplex(x, *cap),
        }
    }

    /// Membership up to `tol` per constraint.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match self {
            FeasibleSet::Box { lower, upper } => {
                x.len() == lower.len()
                    && x
                        .iter()
                        .zip(lower.iter().zip(upper))
                        .all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
            }
            FeasibleSet::CappedSimplex { cap } => {
                x.iter().all(|v| *v >= -tol) && x.iter().sum::<f64>() <= cap + tol
            }
        }
    }
}

pub fn project(set: &FeasibleSet, x: &[f64]) -> Vec<f64> {
    set.project(x)
}

fn project_capped_simplex(x: &[f64], cap: f64) -> Vec<f64> {
    let clipped: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    if clipped.iter().sum::<f64>() <= cap {
        return clipped;
    }
    // water level theta with sum max(x - theta, 0) = cap
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut prefix = 0.0;
    let mut theta = 0.0;
    for (j, u) in sorted.iter().enumerate() {
        prefix += u;
        let t = (prefix - cap) / (j + 1) as f64;
        if u - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    x.iter().map(|v| (v - theta).max(0.0)).collect()
}
