//! Matrix exponential via scaling-and-squaring with the degree-13 Padé
//! approximant, and the integral `∫₀ᵗ e^{Ss} ds` via an augmented block
//! exponential.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

// Padé(13) numerator coefficients b_0..b_13 (Higham 2005, Table 10.4).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `e^{S t}`.
pub fn matrix_exponential(s: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !s.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", s.nrows(), s.ncols())));
    }
    if !t.is_finite() || s.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let k = s.nrows();
    if k == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    let a = s * t;
    let norm = one_norm(&a);
    let squarings = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let a = a * 2f64.powi(-squarings);

    let b = &PADE13;
    let ident = DMatrix::<f64>::identity(k, k);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]);
    let u = &a * (u_inner + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &ident * b[1]);
    let v_inner = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]);
    let v = v_inner + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &ident * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::InvalidArgument("Padé denominator is singular".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

/// `∫₀^{t_c} e^{S s} ds`, read off the upper-right block of
/// `exp([[S, I], [0, 0]] t_c)`. Valid for singular `S`.
pub fn exp_integral(s: &DMatrix<f64>, t_c: f64) -> Result<DMatrix<f64>> {
    if !(t_c > 0.0) || !t_c.is_finite() {
        return Err(Error::InvalidTime(format!("integration horizon must be positive, got {t_c}")));
    }
    if !s.is_square() {
        return Err(Error::Dimension(format!("{}x{} matrix is not square", s.nrows(), s.ncols())));
    }
    let k = s.nrows();
    let mut aug = DMatrix::zeros(2 * k, 2 * k);
    aug.view_mut((0, 0), (k, k)).copy_from(s);
    aug.view_mut((0, k), (k, k)).fill_with_identity();
    let e = matrix_exponential(&aug, t_c)?;
    Ok(e.view((0, k), (k, k)).into_owned())
}
