//! Roots of monic real polynomials through companion-matrix eigenvalues.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Roots of `z^n + c[0] z^(n-1) + ... + c[n-1]`.
///
/// The companion matrix is balanced before its eigenvalues are taken from
/// a real Schur form; each root then gets a few Newton corrections against
/// the polynomial itself. Returns `None` if the Schur iteration fails.
pub fn monic_roots(c: &[f64]) -> Option<Vec<Complex64>> {
    let n = c.len();
    match n {
        0 => return Some(Vec::new()),
        1 => return Some(vec![Complex64::new(-c[0], 0.0)]),
        _ => {}
    }
    if c.iter().any(|v| !v.is_finite()) {
        return None;
    }
    let mut m = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        m[(0, j)] = -c[j];
    }
    for i in 1..n {
        m[(i, i - 1)] = 1.0;
    }
    balance(&mut m);
    let schur = nalgebra::linalg::Schur::try_new(m, f64::EPSILON, 10_000)?;
    let eig = schur.complex_eigenvalues();
    let mut roots: Vec<Complex64> = eig.iter().map(|z| Complex64::new(z.re, z.im)).collect();
    for r in &mut roots {
        *r = polish(c, *r);
    }
    // exact conjugate symmetry for paired roots
    for r in &mut roots {
        if r.im.abs() <= 1e-14 * r.norm().max(1.0) {
            r.im = 0.0;
        }
    }
    Some(roots)
}

fn eval(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &ck in c {
        dp = dp * z + p;
        p = p * z + ck;
    }
    (p, dp)
}

fn polish(c: &[f64], mut z: Complex64) -> Complex64 {
    let (mut p, _) = eval(c, z);
    for _ in 0..4 {
        let (_, dp) = eval(c, z);
        if dp.norm() == 0.0 {
            break;
        }
        let cand = z - p / dp;
        let (pc, _) = eval(c, cand);
        if !(pc.norm() < p.norm()) {
            break;
        }
        z = cand;
        p = pc;
    }
    z
}

/// Parlett-Reinsch diagonal similarity scaling by powers of two.
fn balance(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    let radix = 2.0f64;
    let sq = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut col = 0.0;
            for j in 0..n {
                if j != i {
                    col += m[(j, i)].abs();
                    r += m[(i, j)].abs();
                }
            }
            if col == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / radix;
            let mut f = 1.0;
            let s = col + r;
            while col < g {
                f *= radix;
                col *= sq;
            }
            g = r * radix;
            while col > g {
                f /= radix;
                col /= sq;
            }
            if (col + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    m[(i, j)] *= inv;
                }
                for j in 0..n {
                    m[(j, i)] *= f;
                }
            }
        }
    }
}
