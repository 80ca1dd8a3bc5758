//! Minimum-cost rectangular assignment (Kuhn-Munkres with potentials).

use super::SupervisionError;

/// Optimal assignment of `min(n, m)` disjoint `(row, col)` pairs, sorted by
/// row. Runs in `O(min(n,m)² · max(n,m))`.
///
/// Columns are scanned in increasing order and only strictly smaller slack
/// replaces the current choice, so equal-cost alternatives resolve toward
/// lower indices and the result is deterministic.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Vec<(usize, usize)>, SupervisionError> {
    let n = cost.len();
    let m = cost.first().map_or(0, Vec::len);
    for (r, row) in cost.iter().enumerate() {
        if row.len() != m {
            return Err(SupervisionError::RaggedMatrix { row: r, len: row.len(), expected: m });
        }
        if let Some(c) = row.iter().position(|x| !x.is_finite()) {
            return Err(SupervisionError::NonFiniteCost { row: r, col: c });
        }
    }
    if n == 0 || m == 0 {
        return Ok(Vec::new());
    }
    if n <= m {
        Ok(solve(n, m, |i, j| cost[i][j]))
    } else {
        let mut pairs: Vec<(usize, usize)> = solve(m, n, |i, j| cost[j][i])
            .into_iter()
            .map(|(c, r)| (r, c))
            .collect();
        pairs.sort_unstable();
        Ok(pairs)
    }
}

/// Sum of `cost[r][c]` over the pairs, in the given order.
pub fn assignment_cost(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(r, c)| cost[r][c]).sum()
}

// Rows 1..=n are assigned to distinct columns 1..=m (n <= m); index 0 is the
// virtual root of each augmenting search.
fn solve(n: usize, m: usize, a: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut col_owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        col_owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a(i0 - 1, j - 1) - u[i0] - v[j];
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
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut pairs: Vec<(usize, usize)> = (1..=m)
        .filter(|&j| col_owner[j] != 0)
        .map(|j| (col_owner[j] - 1, j - 1))
        .collect();
    pairs.sort_unstable();
    pairs
}
