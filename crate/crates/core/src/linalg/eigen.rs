use super::dense::null_space;
use super::Matrix;
use crate::error::{Error, Result};

/// A (possibly complex) eigenvalue `re + i·im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    #[inline]
    pub fn modulus(self) -> f64 {
        self.re.hypot(self.im)
    }
}

const MAX_ITER_PER_EIGENVALUE: usize = 60;

/// Spectral radius of `m`: largest eigenvalue modulus.
pub fn spectral_radius(m: &Matrix) -> Result<f64> {
    Ok(eigenvalues(m)?.into_iter().map(Eigenvalue::modulus).fold(0.0, f64::max))
}

/// All eigenvalues of `m`, unordered.
pub fn eigenvalues(m: &Matrix) -> Result<Vec<Eigenvalue>> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    eigenvalues_raw(m.as_slice(), m.dim())
}

/// Eigenvalues of a row-major `n × n` matrix of any size.
pub fn eigenvalues_raw(a: &[f64], n: usize) -> Result<Vec<Eigenvalue>> {
    assert_eq!(a.len(), n * n);
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    match n {
        0 => return Ok(Vec::new()),
        1 => return Ok(vec![Eigenvalue { re: a[0], im: 0.0 }]),
        _ => {}
    }
    // eigenvalues scale linearly; normalizing keeps long products away
    // from the subnormal range where the QR sweeps stall
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(vec![Eigenvalue { re: 0.0, im: 0.0 }; n]);
    }
    let mut h: Vec<f64> = a.iter().map(|v| v / scale).collect();
    balance(&mut h, n);
    hessenberg(&mut h, n);
    Ok(hqr(&mut h, n)?
        .into_iter()
        .map(|e| Eigenvalue {
            re: e.re * scale,
            im: e.im * scale,
        })
        .collect())
}

/// Diagonal similarity scaling by powers of two that equalizes row and
/// column norms.
fn balance(a: &mut [f64], n: usize) {
    const RADIX: f64 = 2.0;
    const SQRDX: f64 = RADIX * RADIX;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[j * n + i].abs();
                    r += a[i * n + j].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= SQRDX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= SQRDX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[i * n + j] *= g;
                }
                for j in 0..n {
                    a[j * n + i] *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form, in place.
fn hessenberg(a: &mut [f64], n: usize) {
    let mut v = vec![0.0; n];
    for k in 0..n.saturating_sub(2) {
        let alpha_sq: f64 = (k + 1..n).map(|i| a[i * n + k] * a[i * n + k]).sum();
        if alpha_sq == 0.0 {
            continue;
        }
        let x0 = a[(k + 1) * n + k];
        let alpha = if x0 >= 0.0 { -alpha_sq.sqrt() } else { alpha_sq.sqrt() };
        for i in k + 1..n {
            v[i] = a[i * n + k];
        }
        v[k + 1] -= alpha;
        let vnorm_sq: f64 = (k + 1..n).map(|i| v[i] * v[i]).sum();
        if vnorm_sq == 0.0 {
            continue;
        }
        // left: rows k+1..n
        for j in k..n {
            let dot: f64 = (k + 1..n).map(|i| v[i] * a[i * n + j]).sum();
            let f = 2.0 * dot / vnorm_sq;
            for i in k + 1..n {
                a[i * n + j] -= f * v[i];
            }
        }
        // right: columns k+1..n
        for i in 0..n {
            let dot: f64 = (k + 1..n).map(|j| a[i * n + j] * v[j]).sum();
            let f = 2.0 * dot / vnorm_sq;
            for j in k + 1..n {
                a[i * n + j] -= f * v[j];
            }
        }
        a[(k + 1) * n + k] = alpha;
        for i in k + 2..n {
            a[i * n + k] = 0.0;
        }
    }
}

/// Shifted double-step QR iteration on an upper Hessenberg matrix.
fn hqr(h: &mut [f64], n: usize) -> Result<Vec<Eigenvalue>> {
    let nn_total = n as isize;
    let idx = |i: isize, j: isize| (i * nn_total + j) as usize;
    let eps = f64::EPSILON;
    let mut out = vec![Eigenvalue { re: 0.0, im: 0.0 }; n];

    let mut anorm = 0.0;
    for i in 0..nn_total {
        for j in (i - 1).max(0)..nn_total {
            anorm += h[idx(i, j)].abs();
        }
    }

    let mut nn = nn_total - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let mut l = nn;
            while l > 0 {
                let mut s = h[idx(l - 1, l - 1)].abs() + h[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if h[idx(l, l - 1)].abs() <= eps * s {
                    h[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = h[idx(nn, nn)];
            if l == nn {
                out[nn as usize] = Eigenvalue { re: x + t, im: 0.0 };
                nn -= 1;
            } else {
                let mut y = h[idx(nn - 1, nn - 1)];
                let mut w = h[idx(nn, nn - 1)] * h[idx(nn - 1, nn)];
                if l == nn - 1 {
                    let p = 0.5 * (y - x);
                    let q = p * p + w;
                    let mut z = q.abs().sqrt();
                    x += t;
                    if q >= 0.0 {
                        z = p + z.copysign(p);
                        let mut lo = x + z;
                        let hi = x + z;
                        if z != 0.0 {
                            lo = x - w / z;
                        }
                        out[(nn - 1) as usize] = Eigenvalue { re: hi, im: 0.0 };
                        out[nn as usize] = Eigenvalue { re: lo, im: 0.0 };
                    } else {
                        out[(nn - 1) as usize] = Eigenvalue { re: x + p, im: z };
                        out[nn as usize] = Eigenvalue { re: x + p, im: -z };
                    }
                    nn -= 2;
                } else {
                    if its == MAX_ITER_PER_EIGENVALUE {
                        return Err(Error::NumericalFailure("QR iteration did not converge".into()));
                    }
                    if its > 0 && its % 10 == 0 {
                        // exceptional shift
                        t += x;
                        for i in 0..=nn {
                            h[idx(i, i)] -= x;
                        }
                        let s = h[idx(nn, nn - 1)].abs() + h[idx(nn - 1, nn - 2)].abs();
                        x = 0.75 * s;
                        y = x;
                        w = -0.4375 * s * s;
                    }
                    its += 1;
                    let mut m = nn - 2;
                    let (mut p, mut q, mut r);
                    loop {
                        let z = h[idx(m, m)];
                        let rr = x - z;
                        let ss = y - z;
                        p = (rr * ss - w) / h[idx(m + 1, m)] + h[idx(m, m + 1)];
                        q = h[idx(m + 1, m + 1)] - z - rr - ss;
                        r = h[idx(m + 2, m + 1)];
                        let s = p.abs() + q.abs() + r.abs();
                        p /= s;
                        q /= s;
                        r /= s;
                        if m == l {
                            break;
                        }
                        let u = h[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                        let v = p.abs() * (h[idx(m - 1, m - 1)].abs() + z.abs() + h[idx(m + 1, m + 1)].abs());
                        if u <= eps * v {
                            break;
                        }
                        m -= 1;
                    }
                    for i in m..nn - 1 {
                        h[idx(i + 2, i)] = 0.0;
                        if i != m {
                            h[idx(i + 2, i - 1)] = 0.0;
                        }
                    }
                    let mut k = m;
                    while k < nn {
                        if k != m {
                            p = h[idx(k, k - 1)];
                            q = h[idx(k + 1, k - 1)];
                            r = 0.0;
                            if k + 1 != nn {
                                r = h[idx(k + 2, k - 1)];
                            }
                            x = p.abs() + q.abs() + r.abs();
                            if x != 0.0 {
                                p /= x;
                                q /= x;
                                r /= x;
                            }
                        }
                        let s = (p * p + q * q + r * r).sqrt().copysign(p);
                        if s != 0.0 {
                            if k == m {
                                if l != m {
                                    h[idx(k, k - 1)] = -h[idx(k, k - 1)];
                                }
                            } else {
                                h[idx(k, k - 1)] = -s * x;
                            }
                            p += s;
                            x = p / s;
                            y = q / s;
                            let z = r / s;
                            q /= p;
                            r /= p;
                            for j in k..=nn {
                                let mut pp = h[idx(k, j)] + q * h[idx(k + 1, j)];
                                if k + 1 != nn {
                                    pp += r * h[idx(k + 2, j)];
                                    h[idx(k + 2, j)] -= pp * z;
                                }
                                h[idx(k + 1, j)] -= pp * y;
                                h[idx(k, j)] -= pp * x;
                            }
                            let mmin = if nn < k + 3 { nn } else { k + 3 };
                            for i in l..=mmin {
                                let mut pp = x * h[idx(i, k)] + y * h[idx(i, k + 1)];
                                if k + 1 != nn {
                                    pp += z * h[idx(i, k + 2)];
                                    h[idx(i, k + 2)] -= pp * r;
                                }
                                h[idx(i, k + 1)] -= pp * q;
                                h[idx(i, k)] -= pp;
                            }
                        }
                        k += 1;
                    }
                }
            }
            if l + 1 >= nn {
                break;
            }
        }
    }
    Ok(out)
}

/// Real invariant subspaces spanned by eigenvectors of `m`.
///
/// Each real eigenvalue contributes its eigenvectors one by one; each
/// complex pair `a ± ib` contributes `{Re v, Im v}` for its eigenvectors
/// `v`. Eigenvalues closer than `cluster_tol` (relative) are merged.
pub fn real_eigenvectors(m: &Matrix, cluster_tol: f64) -> Result<Vec<Vec<Vec<f64>>>> {
    let n = m.dim();
    let eig = eigenvalues(m)?;
    let scale = m.max_abs().max(1.0);
    let mut reps: Vec<Eigenvalue> = Vec::new();
    for e in eig {
        if e.im < 0.0 {
            continue;
        }
        let e = if e.im.abs() <= cluster_tol * scale {
            Eigenvalue { re: e.re, im: 0.0 }
        } else {
            e
        };
        if reps
            .iter()
            .all(|r| (r.re - e.re).hypot(r.im - e.im) > cluster_tol * scale)
        {
            reps.push(e);
        }
    }
    let null_tol = 1e-8 * scale * n as f64;
    let mut out = Vec::new();
    for lam in reps {
        if lam.im == 0.0 {
            let mut shifted = m.as_slice().to_vec();
            for i in 0..n {
                shifted[i * n + i] -= lam.re;
            }
            let (sigma, v) = null_space(&shifted, n, n);
            for (j, vec) in v.into_iter().enumerate().rev() {
                if sigma[j] <= null_tol || j == n - 1 {
                    out.push(vec![vec]);
                }
            }
        } else {
            let n2 = 2 * n;
            let mut block = vec![0.0; n2 * n2];
            for i in 0..n {
                for j in 0..n {
                    let v = m[(i, j)] - if i == j { lam.re } else { 0.0 };
                    block[i * n2 + j] = v;
                    block[(i + n) * n2 + j + n] = v;
                }
                block[i * n2 + i + n] = lam.im;
                block[(i + n) * n2 + i] = -lam.im;
            }
            let (sigma, v) = null_space(&block, n2, n2);
            for (j, z) in v.into_iter().enumerate().rev() {
                if sigma[j] <= null_tol || j == n2 - 1 {
                    out.push(vec![z[..n].to_vec(), z[n..].to_vec()]);
                }
            }
        }
    }
    Ok(out)
}
