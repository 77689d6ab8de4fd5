//! Exact linear algebra over `BigRational`: row reduction, affine solution
//! sets, minimum-norm solutions, and a dense Bland-rule simplex.

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;
pub type QMatrix = Vec<Vec<Q>>;

pub fn q(n: i64, d: i64) -> Q {
    Q::new(n.into(), d.into())
}

/// Reduces `m` in place to reduced row echelon form and returns the pivot
/// columns.
pub fn rref(m: &mut QMatrix) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for v in m[r].iter_mut() {
            *v *= &inv;
        }
        let pivot = m[r].clone();
        for (i, row) in m.iter_mut().enumerate().take(rows) {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (v, p) in row.iter_mut().zip(&pivot).take(cols) {
                    *v -= &f * p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &QMatrix) -> usize {
    let mut a = m.clone();
    rref(&mut a).len()
}

/// Basis of `{x : A x = 0}` for an `r × cols` matrix.
pub fn nullspace(a: &QMatrix, cols: usize) -> Vec<Vec<Q>> {
    let mut m = a.clone();
    let pivots = rref(&mut m);
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); cols];
            v[f] = Q::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][f].clone();
            }
            v
        })
        .collect()
}

/// The solution set `x_p + span(null)` of `A x = b`, or `None` when the
/// system is inconsistent.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineSolution {
    pub particular: Vec<Q>,
    pub null: Vec<Vec<Q>>,
}

pub fn solve_affine(a: &QMatrix, b: &[Q], cols: usize) -> Option<AffineSolution> {
    let mut aug: QMatrix = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    let pivots = rref(&mut aug);
    if pivots.contains(&cols) {
        return None;
    }
    let mut particular = vec![Q::zero(); cols];
    for (row, &pc) in pivots.iter().enumerate() {
        particular[pc] = aug[row][cols].clone();
    }
    Some(AffineSolution { particular, null: nullspace(a, cols) })
}

fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}

/// Minimum-Euclidean-norm element of an affine solution set: the particular
/// solution minus its projection onto the null space.
pub fn min_norm(sol: &AffineSolution) -> Vec<Q> {
    let k = sol.null.len();
    if k == 0 {
        return sol.particular.clone();
    }
    // Gram system (NᵀN) c = Nᵀ x_p.
    let gram: QMatrix = (0..k)
        .map(|i| (0..k).map(|j| dot(&sol.null[i], &sol.null[j])).collect())
        .collect();
    let rhs: Vec<Q> = sol.null.iter().map(|n| dot(n, &sol.particular)).collect();
    let c = solve_affine(&gram, &rhs, k).expect("Gram matrix of a basis is invertible").particular;
    let mut x = sol.particular.clone();
    for (ci, n) in c.iter().zip(&sol.null) {
        for (xv, nv) in x.iter_mut().zip(n) {
            *xv -= ci * nv;
        }
    }
    x
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<Q>, value: Q },
    Infeasible,
    Unbounded,
}

/// Maximizes `cᵀx` subject to `A x = b`, `x ≥ 0`, exactly. Two-phase dense
/// tableau with Bland's rule, so it terminates on degenerate problems.
pub fn maximize(c: &[Q], a: &QMatrix, b: &[Q]) -> LpOutcome {
    let n = c.len();
    let rows = a.len();
    // Phase 1 tableau: [A | I | b], with rows negated so b ≥ 0.
    let width = n + rows + 1;
    let mut t: QMatrix = Vec::with_capacity(rows);
    for (i, (row, bi)) in a.iter().zip(b).enumerate() {
        let flip = bi.is_negative();
        let mut r: Vec<Q> = row.iter().map(|v| if flip { -v.clone() } else { v.clone() }).collect();
        r.extend((0..rows).map(|k| if k == i { Q::one() } else { Q::zero() }));
        r.push(if flip { -bi.clone() } else { bi.clone() });
        t.push(r);
    }
    let mut basis: Vec<usize> = (n..n + rows).collect();

    // Phase 1 objective: maximize -Σ artificials.
    let phase1: Vec<Q> = (0..n + rows).map(|k| if k >= n { -Q::one() } else { Q::zero() }).collect();
    if !run_simplex(&mut t, &mut basis, &phase1, n + rows) {
        unreachable!("phase 1 is bounded");
    }
    let infeasibility: Q = basis
        .iter()
        .enumerate()
        .filter(|(_, &bv)| bv >= n)
        .fold(Q::zero(), |acc, (i, _)| acc + &t[i][width - 1]);
    if infeasibility.is_positive() {
        return LpOutcome::Infeasible;
    }
    // Drive remaining (zero-valued) artificials out of the basis; drop
    // redundant rows.
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n {
            if let Some(col) = (0..n).find(|&k| !t[i][k].is_zero()) {
                pivot(&mut t, i, col);
                basis[i] = col;
            } else {
                t.remove(i);
                basis.remove(i);
                continue;
            }
        }
        i += 1;
    }
    // Freeze artificial columns by zeroing them out.
    for row in t.iter_mut() {
        for v in row[n..n + rows].iter_mut() {
            *v = Q::zero();
        }
    }
    if !run_simplex(&mut t, &mut basis, c, n) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Q::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        x[bv] = t[i][width - 1].clone();
    }
    let value = dot(c, &x);
    LpOutcome::Optimal { x, value }
}

fn pivot(t: &mut QMatrix, r: usize, c: usize) {
    let inv = t[r][c].recip();
    for v in t[r].iter_mut() {
        *v *= &inv;
    }
    let pivot = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r && !row[c].is_zero() {
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot) {
                *v -= &f * p;
            }
        }
    }
}

/// Runs primal simplex on columns `0..active` for objective `obj`. Returns
/// `false` when unbounded.
fn run_simplex(t: &mut QMatrix, basis: &mut [usize], obj: &[Q], active: usize) -> bool {
    let width = t.first().map_or(0, Vec::len);
    loop {
        // Reduced cost r_k = obj_k - Σ_i obj_{basis_i} t[i][k]; enter the
        // lowest index with r_k > 0 (Bland).
        let entering = (0..active).find(|&k| {
            if basis.contains(&k) {
                return false;
            }
            let mut r = obj[k].clone();
            for (i, &bv) in basis.iter().enumerate() {
                if bv < obj.len() && !obj[bv].is_zero() {
                    r -= &obj[bv] * &t[i][k];
                }
            }
            r.is_positive()
        });
        let Some(k) = entering else {
            return true;
        };
        let mut leave: Option<(usize, Q)> = None;
        for i in 0..t.len() {
            if t[i][k].is_positive() {
                let ratio = &t[i][width - 1] / &t[i][k];
                let better = match &leave {
                    None => true,
                    Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
                };
                if better {
                    leave = Some((i, ratio));
                }
            }
        }
        let Some((r, _)) = leave else {
            return false;
        };
        pivot(t, r, k);
        basis[r] = k;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qi(n: i64) -> Q {
        q(n, 1)
    }

    fn mat(rows: &[&[i64]]) -> QMatrix {
        rows.iter().map(|r| r.iter().map(|&v| qi(v)).collect()).collect()
    }

    #[test]
    fn rref_and_rank() {
        let mut m = mat(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        let p = rref(&mut m);
        assert_eq!(p, vec![0, 1]);
        assert_eq!(rank(&mat(&[&[0, 0], &[0, 0]])), 0);
    }

    #[test]
    fn nullspace_is_annihilated() {
        let a = mat(&[&[1, 1, 0], &[0, 1, 1]]);
        let n = nullspace(&a, 3);
        assert_eq!(n.len(), 1);
        for row in &a {
            assert!(dot(row, &n[0]).is_zero());
        }
    }

    #[test]
    fn inconsistent_system() {
        // β1 = 1 and 2β1 = 1.
        let a = mat(&[&[1, 0], &[0, 2], &[2, 0]]);
        assert!(solve_affine(&a, &[qi(1), qi(1), qi(1)], 2).is_none());
    }

    #[test]
    fn min_norm_of_a_line() {
        // x + y = 1 → (1/2, 1/2).
        let sol = solve_affine(&mat(&[&[1, 1]]), &[qi(1)], 2).unwrap();
        assert_eq!(min_norm(&sol), vec![q(1, 2), q(1, 2)]);
        // 2x + y = 1 → (2/5, 1/5).
        let sol = solve_affine(&mat(&[&[2, 1]]), &[qi(1)], 2).unwrap();
        assert_eq!(min_norm(&sol), vec![q(2, 5), q(1, 5)]);
    }

    #[test]
    fn simplex_small_problems() {
        // max x + y, x + 2y + s1 = 4, 3x + y + s2 = 6 → (8/5, 6/5), value 14/5.
        let a = mat(&[&[1, 2, 1, 0], &[3, 1, 0, 1]]);
        match maximize(&[qi(1), qi(1), qi(0), qi(0)], &a, &[qi(4), qi(6)]) {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, q(14, 5));
                assert_eq!(&x[..2], &[q(8, 5), q(6, 5)]);
            }
            other => panic!("{other:?}"),
        }
        // x = -1 infeasible with x ≥ 0.
        assert_eq!(maximize(&[qi(1)], &mat(&[&[1]]), &[qi(-1)]), LpOutcome::Infeasible);
        // max x with x - y = 0 unbounded.
        assert_eq!(maximize(&[qi(1), qi(0)], &mat(&[&[1, -1]]), &[qi(0)]), LpOutcome::Unbounded);
        // Redundant rows are tolerated.
        let a = mat(&[&[1, 1], &[2, 2]]);
        assert!(matches!(maximize(&[qi(1), qi(0)], &a, &[qi(1), qi(2)]), LpOutcome::Optimal { .. }));
    }
}
