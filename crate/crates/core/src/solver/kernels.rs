//! Dense slice kernels on column-major storage shared by the iterative solvers.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for k in 0..chunks {
        let i = 4 * k;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `out = A^T t` with `A` column-major `m x n`.
pub(crate) fn mul_transpose(a: &[f64], m: usize, t: &[f64], out: &mut [f64]) {
    for (j, o) in out.iter_mut().enumerate() {
        *o = dot(&a[j * m..(j + 1) * m], t);
    }
}

/// `out = A x`, skipping zero entries of `x`.
pub(crate) fn mul_skip_zeros(a: &[f64], m: usize, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            axpy(xj, &a[j * m..(j + 1) * m], out);
        }
    }
}

/// `out = S c` for symmetric column-major `S`.
pub(crate) fn mul_symmetric(s: &[f64], c: &[f64], out: &mut [f64]) {
    let k = c.len();
    for (i, o) in out.iter_mut().enumerate() {
        *o = dot(&s[i * k..(i + 1) * k], c);
    }
}

