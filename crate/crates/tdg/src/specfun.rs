//! Integer-order Bessel and Hankel functions of real positive argument.
//!
//! `J_n` is computed by Miller's backward recurrence with the normalization
//! `J_0 + 2 Σ_{m≥1} J_{2m} = 1`, which is stable for every order; `Y_n` uses
//! upward recurrence from the order-0/1 seeds, which is stable because `Y_n`
//! grows with `n`. Derivatives always use the half-difference identity
//! `C_n' = (C_{n-1} - C_{n+1})/2`. Negative orders are reduced with
//! `C_{-n} = (-1)^n C_n`.

use crate::{C64, Error, Result};

/// Largest supported order. Series solutions use at most 40 modes plus
/// derivative neighbors; 128 leaves headroom for convergence studies.
pub const N_MAX: i32 = 128;

fn check_args(n: i32, x: f64) -> Result<()> {
    if !(x > 0.0) {
        return Err(Error::SpecFun(format!("argument x = {x} must be positive")));
    }
    if n.abs() > N_MAX {
        return Err(Error::SpecFun(format!(
            "order |{n}| exceeds the supported cap {N_MAX}"
        )));
    }
    Ok(())
}

/// `J_0(x) .. J_{nmax}(x)` by Miller's backward recurrence.
///
/// The recurrence starts well above both `nmax` and `x` with an arbitrary
/// tail value, runs `f_{n-1} = (2n/x) f_n - f_{n+1}` down to zero, and is
/// normalized with `J_0(x) + 2 Σ J_{2m}(x) = 1`.
pub fn bessel_j_sequence(nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_args(nmax as i32, x)?;
    let base = (nmax as f64).max(x.ceil());
    let nstart = base as usize + 20 + (40.0 * base).sqrt().ceil() as usize;
    let mut out = vec![0.0f64; nmax + 1];
    let mut fp = 0.0f64; // f_{n+1}
    let mut fc = 1e-155f64; // f_n, arbitrary small tail
    let mut norm = 0.0f64;
    let mut n = nstart;
    loop {
        if n <= nmax {
            out[n] = fc;
        }
        if n % 2 == 0 {
            norm += if n == 0 { fc } else { 2.0 * fc };
        }
        if n == 0 {
            break;
        }
        let fm = (2.0 * n as f64 / x) * fc - fp;
        fp = fc;
        fc = fm;
        if fc.abs() > 1e250 {
            let s = 1e-250;
            fc *= s;
            fp *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
        n -= 1;
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    Ok(out)
}

/// `Y_0(x) .. Y_{nmax}(x)` by upward recurrence from libm seeds.
pub fn bessel_y_sequence(nmax: usize, x: f64) -> Result<Vec<f64>> {
    check_args(nmax as i32, x)?;
    let mut out = vec![0.0f64; nmax + 1];
    out[0] = libm::y0(x);
    if nmax >= 1 {
        out[1] = libm::y1(x);
    }
    for n in 1..nmax {
        out[n + 1] = (2.0 * n as f64 / x) * out[n] - out[n - 1];
        if !out[n + 1].is_finite() {
            // Y_n underflows the f64 exponent range for very large order and
            // small argument; saturate rather than propagate NaN from inf-inf.
            out[n + 1] = if out[n] < 0.0 { f64::MIN } else { f64::MAX };
        }
    }
    Ok(out)
}

/// Values and derivatives of `J` and `Y` for orders `0..=nmax` at `x`.
#[derive(Debug, Clone)]
pub struct CylArrays {
    pub j: Vec<f64>,
    pub jp: Vec<f64>,
    pub y: Vec<f64>,
    pub yp: Vec<f64>,
}

/// Compute `J_n, J_n', Y_n, Y_n'` for all `n ∈ [0, nmax]`.
pub fn cyl_arrays(nmax: usize, x: f64) -> Result<CylArrays> {
    let j = bessel_j_sequence(nmax + 1, x)?;
    let y = bessel_y_sequence(nmax + 1, x)?;
    let mut jp = vec![0.0f64; nmax + 1];
    let mut yp = vec![0.0f64; nmax + 1];
    jp[0] = -j[1];
    yp[0] = -y[1];
    for n in 1..=nmax {
        let jm1 = j[n - 1];
        let ym1 = y[n - 1];
        // C_{n+1} = (2n/x) C_n - C_{n-1}; using it here keeps the identity
        // C_n' = (C_{n-1} - C_{n+1})/2 exact without growing the sequences.
        jp[n] = 0.5 * (jm1 - ((2.0 * n as f64 / x) * j[n] - jm1));
        yp[n] = 0.5 * (ym1 - ((2.0 * n as f64 / x) * y[n] - ym1));
    }
    Ok(CylArrays {
        j,
        jp,
        y,
        yp,
    })
}

fn parity_sign(n: i32) -> f64 {
    if n.rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bessel function of the first kind, `J_n(x)`.
pub fn bessel_j(n: i32, x: f64) -> Result<f64> {
    check_args(n, x)?;
    let m = n.unsigned_abs() as usize;
    let seq = bessel_j_sequence(m, x)?;
    Ok(if n < 0 { parity_sign(n) * seq[m] } else { seq[m] })
}

/// Bessel function of the second kind, `Y_n(x)`.
pub fn bessel_y(n: i32, x: f64) -> Result<f64> {
    check_args(n, x)?;
    let m = n.unsigned_abs() as usize;
    let seq = bessel_y_sequence(m, x)?;
    Ok(if n < 0 { parity_sign(n) * seq[m] } else { seq[m] })
}

/// Derivative `J_n'(x)` via the half-difference identity.
pub fn bessel_j_prime(n: i32, x: f64) -> Result<f64> {
    check_args(n, x)?;
    let m = n.unsigned_abs() as usize;
    let arr = cyl_arrays(m, x)?;
    Ok(if n < 0 {
        parity_sign(n) * arr.jp[m]
    } else {
        arr.jp[m]
    })
}

/// Derivative `Y_n'(x)` via the half-difference identity.
pub fn bessel_y_prime(n: i32, x: f64) -> Result<f64> {
    check_args(n, x)?;
    let m = n.unsigned_abs() as usize;
    let arr = cyl_arrays(m, x)?;
    Ok(if n < 0 {
        parity_sign(n) * arr.yp[m]
    } else {
        arr.yp[m]
    })
}

/// Hankel function of the first kind, `H_n^{(1)}(x) = J_n(x) + i Y_n(x)`.
pub fn hankel1(n: i32, x: f64) -> Result<C64> {
    Ok(C64::new(bessel_j(n, x)?, bessel_y(n, x)?))
}

/// Derivative of the Hankel function of the first kind.
pub fn hankel1_prime(n: i32, x: f64) -> Result<C64> {
    Ok(C64::new(bessel_j_prime(n, x)?, bessel_y_prime(n, x)?))
}

/// Hankel function of the second kind, `H_n^{(2)}(x) = conj(H_n^{(1)}(x))`
/// for real `x`.
pub fn hankel2(n: i32, x: f64) -> Result<C64> {
    Ok(hankel1(n, x)?.conj())
}

/// Derivative of the Hankel function of the second kind.
pub fn hankel2_prime(n: i32, x: f64) -> Result<C64> {
    Ok(hankel1_prime(n, x)?.conj())
}
