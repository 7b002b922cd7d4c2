//! OSPA distance and the average log-determinant precision statistic.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Vector};
use crate::tracker::Track;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OspaParams {
    pub cutoff: f64,
    pub order: f64,
}

impl OspaParams {
    pub fn new(cutoff: f64, order: f64) -> Result<Self> {
        if !(cutoff > 0.0) || !(order >= 1.0) || !cutoff.is_finite() || !order.is_finite() {
            return Err(Error::invalid(format!(
                "OSPA needs cutoff > 0 and order >= 1, got c={cutoff}, p={order}"
            )));
        }
        Ok(Self { cutoff, order })
    }
}

impl Default for OspaParams {
    fn default() -> Self {
        Self {
            cutoff: 100.0,
            order: 2.0,
        }
    }
}

/// OSPA distance of order `p` with cutoff `c` between two finite point sets.
pub fn ospa(x: &[Vector], y: &[Vector], params: &OspaParams) -> f64 {
    let (small, large) = if x.len() <= y.len() { (x, y) } else { (y, x) };
    let (m, n) = (small.len(), large.len());
    if n == 0 {
        return 0.0;
    }
    let c = params.cutoff;
    let p = params.order;
    let cost: Vec<Vec<f64>> = small
        .iter()
        .map(|a| large.iter().map(|b| (a - b).norm().min(c).powf(p)).collect())
        .collect();
    let assignment = hungarian(&cost);
    // summed in sorted order so that swapping the arguments gives the same bits
    let mut terms: Vec<f64> = assignment.iter().enumerate().map(|(i, &j)| cost[i][j]).collect();
    terms.sort_by(f64::total_cmp);
    let matched: f64 = terms.iter().sum();
    let total = matched + c.powf(p) * (n - m) as f64;
    (total / n as f64).powf(1.0 / p).min(c)
}

/// Extracts the position sub-vector (coordinates `idx`) of each track.
pub fn positions(tracks: &[Track], idx: &[usize]) -> Vec<Vector> {
    tracks
        .iter()
        .map(|t| Vector::from_iterator(idx.len(), idx.iter().map(|&i| t.mean[i])))
        .collect()
}

/// `−(1/N) Σ log det P_i`; `None` when there are no tracks.
pub fn precision_stat(tracks: &[Track]) -> Result<Option<f64>> {
    if tracks.is_empty() {
        return Ok(None);
    }
    let mut sum = 0.0;
    for t in tracks {
        let chol = linalg::check_spd(&t.covariance, "track covariance")?;
        sum += linalg::log_det(&chol);
    }
    Ok(Some(-sum / tracks.len() as f64))
}

/// Minimum-cost assignment of every row to a distinct column
/// (rows ≤ columns). Returns the column chosen for each row.
pub fn hungarian(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "hungarian: more rows than columns");
    // 1-based potentials formulation; index 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut way = vec![0usize; m + 1];
    let mut owner = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=m {
        if owner[j] > 0 {
            out[owner[j] - 1] = j - 1;
        }
    }
    out
}
