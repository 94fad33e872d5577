//! Restarted GMRES for complex linear systems given as a matrix-free operator.

use num_complex::Complex64;

pub(crate) struct GmresOutcome {
    pub matvecs: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Solves `A x = b` starting from the `x` passed in. `apply(v, out)` writes
/// `A v` into `out`. Convergence is on `‖b − Ax‖ / ‖b‖`.
pub(crate) fn gmres(
    mut apply: impl FnMut(&[Complex64], &mut [Complex64]),
    b: &[Complex64],
    x: &mut [Complex64],
    tolerance: f64,
    max_matvecs: usize,
    restart: usize,
) -> GmresOutcome {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.fill(Complex64::default());
        return GmresOutcome { matvecs: 0, residual: 0.0, converged: true };
    }
    let mut matvecs = 0;
    let mut ax = vec![Complex64::default(); n];
    loop {
        apply(x, &mut ax);
        matvecs += 1;
        let r: Vec<Complex64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        let rel = beta / b_norm;
        if rel <= tolerance || matvecs >= max_matvecs {
            return GmresOutcome { matvecs, residual: rel, converged: rel <= tolerance };
        }

        let mut basis: Vec<Vec<Complex64>> = vec![r.iter().map(|v| v / beta).collect()];
        let mut h: Vec<Vec<Complex64>> = Vec::new();
        let mut cs: Vec<f64> = Vec::new();
        let mut sn: Vec<Complex64> = Vec::new();
        let mut g = vec![Complex64::new(beta, 0.0)];
        let mut inner_rel = rel;

        while basis.len() <= restart && matvecs < max_matvecs {
            let j = basis.len() - 1;
            let mut w = vec![Complex64::default(); n];
            apply(&basis[j], &mut w);
            matvecs += 1;
            let mut col = Vec::with_capacity(j + 2);
            for v in &basis {
                let hij = dot(v, &w);
                w.iter_mut().zip(v).for_each(|(wi, vi)| *wi -= hij * vi);
                col.push(hij);
            }
            let wn = norm(&w);
            col.push(Complex64::new(wn, 0.0));

            for i in 0..j {
                let t = cs[i] * col[i] + sn[i] * col[i + 1];
                col[i + 1] = -sn[i].conj() * col[i] + cs[i] * col[i + 1];
                col[i] = t;
            }
            let (a, bb) = (col[j], col[j + 1]);
            let denom = (a.norm_sqr() + bb.norm_sqr()).sqrt();
            let (c, s) = if denom == 0.0 {
                (1.0, Complex64::default())
            } else if a.norm() == 0.0 {
                (0.0, bb.conj() / bb.norm())
            } else {
                (a.norm() / denom, (a / a.norm()) * bb.conj() / denom)
            };
            col[j] = c * a + s * bb;
            col[j + 1] = Complex64::default();
            cs.push(c);
            sn.push(s);
            let gj = g[j];
            g[j] = c * gj;
            g.push(-s.conj() * gj);
            h.push(col);
            inner_rel = g[j + 1].norm() / b_norm;
            if inner_rel <= tolerance || wn == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / wn).collect());
        }

        // back substitution on the triangular system
        let k = h.len();
        let mut y = vec![Complex64::default(); k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for (jj, yj) in y.iter().enumerate().take(k).skip(i + 1) {
                acc -= h[jj][i] * yj;
            }
            y[i] = acc / h[i][i];
        }
        for (yi, v) in y.iter().zip(&basis) {
            x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += yi * vi);
        }
        if inner_rel <= tolerance {
            // confirm with a true residual on the next pass
            continue;
        }
    }
}
