//! Just enough dense linear algebra for the rank tests: symmetric 3x3
//! eigenvalues by cyclic Jacobi rotations and singular values of 3x4
//! gradient stacks.

use crate::fp;

/// Eigenvalues of a symmetric 3x3 matrix, descending.
#[allow(clippy::needless_range_loop)]
pub fn sym3_eigenvalues(m: [[f64; 3]; 3]) -> [f64; 3] {
    let mut a = m;
    for _sweep in 0..64 {
        let off = a[0][1] * a[0][1] + a[0][2] * a[0][2] + a[1][2] * a[1][2];
        if off < 1e-300 {
            break;
        }
        let scale = a[0][0].abs().max(a[1][1].abs()).max(a[2][2].abs()).max(1e-300);
        if fp::sqrt(off) < 1e-17 * scale {
            break;
        }
        for p in 0..2 {
            for q in (p + 1)..3 {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + fp::sqrt(theta * theta + 1.0));
                let c = 1.0 / fp::sqrt(t * t + 1.0);
                let s = t * c;
                let mut b = a;
                for k in 0..3 {
                    b[p][k] = c * a[p][k] - s * a[q][k];
                    b[q][k] = s * a[p][k] + c * a[q][k];
                }
                let mut a2 = b;
                for k in 0..3 {
                    a2[k][p] = c * b[k][p] - s * b[k][q];
                    a2[k][q] = s * b[k][p] + c * b[k][q];
                }
                a = a2;
            }
        }
    }
    let mut ev = [a[0][0], a[1][1], a[2][2]];
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev
}

/// Singular values (descending) of a 3x4 matrix given by rows.
///
/// One-sided Jacobi on the row vectors: rotations make the rows mutually
/// orthogonal, their norms are the singular values. Unlike forming J J^T,
/// this keeps full precision for tiny sigma_3 (the rank tests rely on it).
#[allow(clippy::needless_range_loop)]
pub fn singular_values_3x4(rows: [[f64; 4]; 3]) -> [f64; 3] {
    let mut u = rows;
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..2 {
            for q in (p + 1)..3 {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut g = 0.0;
                for k in 0..4 {
                    alpha += u[p][k] * u[p][k];
                    beta += u[q][k] * u[q][k];
                    g += u[p][k] * u[q][k];
                }
                if g.abs() <= 1e-17 * fp::sqrt(alpha * beta) || g == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + fp::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / fp::sqrt(1.0 + t * t);
                let s = c * t;
                for k in 0..4 {
                    let up = u[p][k];
                    let uq = u[q][k];
                    u[p][k] = c * up - s * uq;
                    u[q][k] = s * up + c * uq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv = [0.0f64; 3];
    for (i, row) in u.iter().enumerate() {
        sv[i] = fp::sqrt(row.iter().map(|v| v * v).sum());
    }
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}
