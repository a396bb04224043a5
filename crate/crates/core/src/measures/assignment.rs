//! Exact minimum-cost perfect matching (Hungarian method with potentials).

/// Solves the square assignment problem for the row-major `n x n` matrix
/// `cost`. Returns `col_of_row` and the total cost of the matching.
///
/// Runs in `O(n^3)` time and `O(n)` extra space beyond the matrix.
pub fn min_cost_assignment(cost: &[f64], n: usize) -> (Vec<usize>, f64) {
    assert_eq!(cost.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return (Vec::new(), 0.0);
    }
    // 1-based bookkeeping; index 0 is the virtual source row/column.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        row_of_col[0] = row;
        let mut col0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);
        loop {
            used[col0] = true;
            let r0 = row_of_col[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0usize;
            let base = (r0 - 1) * n;
            for col in 1..=n {
                if used[col] {
                    continue;
                }
                let reduced = cost[base + col - 1] - u[r0] - v[col];
                if reduced < minv[col] {
                    minv[col] = reduced;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=n {
                if used[col] {
                    u[row_of_col[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if row_of_col[col0] == 0 {
                break;
            }
        }
        loop {
            let prev = way[col0];
            row_of_col[col0] = row_of_col[prev];
            col0 = prev;
            if col0 == 0 {
                break;
            }
        }
    }

    let mut col_of_row = vec![0usize; n];
    for col in 1..=n {
        col_of_row[row_of_col[col] - 1] = col - 1;
    }
    // Sum in row order so the total does not depend on the augmentation history.
    let total = col_of_row
        .iter()
        .enumerate()
        .map(|(r, &c)| cost[r * n + c])
        .sum();
    (col_of_row, total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn permutations(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for perm in permutations(n - 1) {
            for pos in 0..=perm.len() {
                let mut p = perm.clone();
                p.insert(pos, n - 1);
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn matches_brute_force_on_small_matrices() {
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 1..=6 {
            for _ in 0..20 {
                let cost: Vec<f64> = (0..n * n).map(|_| next() * 10.0 - 3.0).collect();
                let (assign, total) = min_cost_assignment(&cost, n);
                let mut seen = vec![false; n];
                for &c in &assign {
                    assert!(!seen[c]);
                    seen[c] = true;
                }
                let best = permutations(n)
                    .iter()
                    .map(|p| p.iter().enumerate().map(|(r, &c)| cost[r * n + c]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                assert!((total - best).abs() < 1e-9, "n={n}: {total} vs {best}");
            }
        }
    }

    #[test]
    fn identity_is_optimal_for_diagonal_zero() {
        let cost = vec![0.0, 5.0, 5.0, 5.0, 0.0, 5.0, 5.0, 5.0, 0.0];
        let (assign, total) = min_cost_assignment(&cost, 3);
        assert_eq!(assign, vec![0, 1, 2]);
        assert_eq!(total, 0.0);
    }
}
