//! Small dense linear-algebra helpers for linearization.

use nalgebra::{Complex, DMatrix, Schur};

use crate::error::Result;

/// Central-difference step used for Jacobians.
pub const FD_STEP: f64 = 1e-6;

/// Central-difference Jacobian of `f: R^n -> R^m` at `x`.
pub fn jacobian_fd<F>(f: F, x: &[f64], m: usize, h: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&[f64], &mut [f64]) -> Result<()>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    let mut xp = x.to_vec();
    let (mut fp, mut fm) = (vec![0.0; m], vec![0.0; m]);
    for j in 0..n {
        xp[j] = x[j] + h;
        f(&xp, &mut fp)?;
        xp[j] = x[j] - h;
        f(&xp, &mut fm)?;
        xp[j] = x[j];
        for i in 0..m {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// Coefficients `[1, c1, .., cn]` of `det(λ I - A) = λ^n + c1 λ^(n-1) + .. + cn`
/// by the Faddeev–LeVerrier recursion.
pub fn characteristic_polynomial(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut coeffs = vec![1.0];
    let mut m = DMatrix::<f64>::zeros(n, n);
    let id = DMatrix::<f64>::identity(n, n);
    let mut c = 1.0;
    for k in 1..=n {
        m = a * &m + &id * c;
        let am = a * &m;
        c = -am.trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

const SCHUR_MAX_ITER: usize = 10_000;
const SCHUR_RETRIES: usize = 8;

/// Eigenvalues sorted by real part, then imaginary part.
pub fn eigenvalues(a: &DMatrix<f64>) -> Vec<Complex<f64>> {
    let n = a.nrows();
    let mut m = a.clone();
    for attempt in 0..SCHUR_RETRIES {
        if let Some(schur) = Schur::try_new(m.clone(), f64::EPSILON, SCHUR_MAX_ITER) {
            let mut ev: Vec<Complex<f64>> = schur.complex_eigenvalues().iter().copied().collect();
            ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
            return ev;
        }
        // shifted QR stalls on companions of x^n = k
        let q = DMatrix::from_fn(n, n, |i, j| ((3 * i + 7 * j + attempt + 1) as f64).sin())
            .qr()
            .q();
        m = q.transpose() * m * q;
    }
    panic!("Schur iteration did not converge for a {n}x{n} matrix");
}

/// Leading principal minors `Δ1..Δn` of the Hurwitz matrix of
/// `a0 λ^n + a1 λ^(n-1) + .. + an`.
pub fn hurwitz_minors(a: &[f64]) -> Vec<f64> {
    let n = a.len() - 1;
    let coeff = |k: isize| {
        if k < 0 || k as usize > n {
            0.0
        } else {
            a[k as usize]
        }
    };
    let h = DMatrix::from_fn(n, n, |i, j| coeff(2 * j as isize - i as isize + 1));
    (1..=n)
        .map(|k| h.view((0, 0), (k, k)).determinant())
        .collect()
}

/// Drop the `count` eigenvalues of smallest modulus.
pub fn without_smallest(
    mut ev: Vec<Complex<f64>>,
    count: usize,
) -> (Vec<Complex<f64>>, Vec<Complex<f64>>) {
    let mut idx: Vec<usize> = (0..ev.len()).collect();
    idx.sort_by(|&i, &j| ev[i].norm().total_cmp(&ev[j].norm()).then(i.cmp(&j)));
    let mut small: Vec<usize> = idx[..count.min(ev.len())].to_vec();
    small.sort_unstable_by(|a, b| b.cmp(a));
    let removed = small.iter().map(|&i| ev.remove(i)).collect();
    (ev, removed)
}
