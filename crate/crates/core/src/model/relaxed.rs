//! Numerical solution of the resource-constrained problem
//! `max sum pi N^beta  s.t.  sum N = M, N >= 0`.
//!
//! Uses scaled projected ascent: each step is a diagonal Newton step projected
//! back onto the resource hyperplane in the Hessian metric, followed by a
//! backtracking line search. Nothing here uses the closed-form optimum, so it
//! serves as an independent check on the target distribution.

use super::{CoverageField, SensingWeights, UtilityParams};
use crate::error::{DscError, Result};

#[derive(Debug, Clone)]
pub struct RelaxedAllocation {
    pub field: CoverageField,
    pub objective: f64,
    pub iterations: usize,
    /// Max relative spread of `pi * N^(beta-1)` over positive-weight cells.
    pub stationarity_gap: f64,
}

fn objective(pi: &[f64], n: &[f64], beta: f64) -> f64 {
    pi.iter().zip(n).map(|(w, x)| w * x.powf(beta)).sum()
}

pub fn maximize_with_total(
    weights: &SensingWeights,
    params: &UtilityParams,
    total: f64,
    max_iters: usize,
) -> Result<RelaxedAllocation> {
    params.validate()?;
    if !(total > 0.0 && total.is_finite()) {
        return Err(DscError::Domain(format!("total resource must be positive, got {total}")));
    }
    let (ng, nt) = (weights.n_grids(), weights.n_windows());
    let beta = params.beta;
    let cells: Vec<usize> = (0..ng * nt).filter(|&i| weights.cell(i / nt, i % nt) > 0.0).collect();
    if cells.is_empty() {
        return Err(DscError::Domain("no cell has positive weight".into()));
    }
    let pi: Vec<f64> = cells.iter().map(|&i| weights.cell(i / nt, i % nt)).collect();
    let mut n = vec![total / cells.len() as f64; cells.len()];
    let mut phi = objective(&pi, &n, beta);
    let mut iterations = 0;

    for _ in 0..max_iters {
        iterations += 1;
        let grad: Vec<f64> = pi.iter().zip(&n).map(|(w, x)| beta * w * x.powf(beta - 1.0)).collect();
        // |Hessian| diagonal
        let curv: Vec<f64> = pi.iter().zip(&n).map(|(w, x)| beta * (1.0 - beta) * w * x.powf(beta - 2.0)).collect();
        // d_i(tau) = max(-n_i / 2, (g_i - tau) / h_i), with sum d = 0
        let step = |tau: f64| -> Vec<f64> {
            grad.iter().zip(&curv).zip(&n).map(|((g, h), x)| ((g - tau) / h).max(-0.5 * x)).collect()
        };
        let sum_at = |tau: f64| step(tau).iter().sum::<f64>();
        let (mut lo, mut hi) = grad.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), g| (l.min(*g), h.max(*g)));
        // sum_at is nonincreasing in tau: positive at min(grad), <= 0 at max(grad)
        if sum_at(lo) < 0.0 || sum_at(hi) > 0.0 {
            break;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if sum_at(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-16 * hi.abs().max(1e-300) {
                break;
            }
        }
        let mut d = step(0.5 * (lo + hi));
        // restore the resource constraint exactly
        let drift: f64 = d.iter().sum();
        let free: Vec<usize> = (0..d.len()).filter(|&i| d[i] > -0.5 * n[i]).collect();
        if !free.is_empty() {
            let share = drift / free.len() as f64;
            for &i in &free {
                d[i] -= share;
            }
        }

        let mut alpha = 1.0;
        let mut rel_change = f64::INFINITY;
        let mut accepted = false;
        while alpha > 1e-12 {
            let trial: Vec<f64> = n.iter().zip(&d).map(|(x, s)| (x + alpha * s).max(f64::MIN_POSITIVE)).collect();
            let trial_phi = objective(&pi, &trial, beta);
            if trial_phi >= phi {
                rel_change = n.iter().zip(&trial).map(|(a, b)| ((a - b) / a).abs()).fold(0.0, f64::max);
                n = trial;
                phi = trial_phi;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted || rel_change < 1e-15 {
            break;
        }
    }

    // renormalize the total exactly
    let sum: f64 = n.iter().sum();
    n.iter_mut().for_each(|x| *x *= total / sum);
    phi = objective(&pi, &n, beta);

    let marginal: Vec<f64> = pi.iter().zip(&n).map(|(w, x)| w * x.powf(beta - 1.0)).collect();
    let (mn, mx) = marginal.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), m| (l.min(*m), h.max(*m)));
    let mut values = vec![0.0; ng * nt];
    for (&i, &x) in cells.iter().zip(&n) {
        values[i] = x;
    }
    Ok(RelaxedAllocation {
        field: CoverageField::from_vec(ng, nt, values)?,
        objective: phi,
        iterations,
        stationarity_gap: (mx - mn) / mx,
    })
}
