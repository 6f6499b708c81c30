use super::{AlgError, MPoly};

/// Sylvester matrix of `f` and `g` viewed as polynomials in `var`.
pub fn sylvester_matrix(f: &MPoly, g: &MPoly, var: &str) -> Vec<Vec<MPoly>> {
    let fc = f.coeffs_in(var);
    let gc = g.coeffs_in(var);
    let m = f.degree_in(var).unwrap_or(0) as usize;
    let n = g.degree_in(var).unwrap_or(0) as usize;
    let size = m + n;
    let mut rows = vec![vec![MPoly::zero(); size]; size];
    for (r, row) in rows.iter_mut().enumerate().take(n) {
        for i in 0..=m {
            row[r + i] = fc[m - i].clone();
        }
    }
    for r in 0..m {
        for j in 0..=n {
            rows[n + r][r + j] = gc[n - j].clone();
        }
    }
    rows
}

/// Resultant of `f` and `g` with respect to `var`, as a polynomial in the
/// remaining variables.
///
/// Uses fraction-free (Bareiss) elimination on the Sylvester matrix, so
/// every intermediate division is exact in Q[params].
pub fn resultant(f: &MPoly, g: &MPoly, var: &str) -> Result<MPoly, AlgError> {
    if f.var_index(var).is_none() && g.var_index(var).is_none() {
        return Err(AlgError::UnknownVariable(var.to_string()));
    }
    if f.is_zero() || g.is_zero() {
        return Ok(MPoly::zero());
    }
    let mut a = sylvester_matrix(f, g, var);
    let size = a.len();
    if size == 0 {
        return Ok(MPoly::one());
    }
    let mut prev = MPoly::one();
    let mut negate = false;
    for k in 0..size.saturating_sub(1) {
        if a[k][k].is_zero() {
            match (k + 1..size).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    negate = !negate;
                }
                None => return Ok(MPoly::zero()),
            }
        }
        for i in k + 1..size {
            for j in k + 1..size {
                let num = &(&a[k][k] * &a[i][j]) - &(&a[i][k] * &a[k][j]);
                a[i][j] = num.div_exact(&prev).ok_or(AlgError::DivisionNotExact)?;
            }
            a[i][k] = MPoly::zero();
        }
        prev = a[k][k].clone();
    }
    let det = a[size - 1][size - 1].clone();
    Ok(if negate { -det } else { det }.trimmed())
}
