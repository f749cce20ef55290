use num_complex::Complex64;

use super::{ComplexMatrix, ModeConfig};
use crate::{Error, Result};

/// Largest matrix [`permanent`] accepts.
pub const DEFAULT_PERMANENT_CAP: usize = 20;

/// `Perm(A) = Σ_{π ∈ S_n} Π_i A_{i,π(i)}`, capped at [`DEFAULT_PERMANENT_CAP`].
pub fn permanent(a: &ComplexMatrix) -> Result<Complex64> {
    permanent_with_cap(a, DEFAULT_PERMANENT_CAP)
}

pub fn permanent_with_cap(a: &ComplexMatrix, cap: usize) -> Result<Complex64> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "permanent needs a square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let n = a.rows();
    if n > cap {
        return Err(Error::PermanentTooLarge { size: n, cap });
    }
    Ok(match n {
        0 => Complex64::new(1.0, 0.0),
        1 => a[(0, 0)],
        2 => a[(0, 0)] * a[(1, 1)] + a[(0, 1)] * a[(1, 0)],
        3 => {
            a[(0, 0)] * (a[(1, 1)] * a[(2, 2)] + a[(1, 2)] * a[(2, 1)])
                + a[(0, 1)] * (a[(1, 0)] * a[(2, 2)] + a[(1, 2)] * a[(2, 0)])
                + a[(0, 2)] * (a[(1, 0)] * a[(2, 1)] + a[(1, 1)] * a[(2, 0)])
        }
        _ => ryser_gray(a),
    })
}

/// Ryser's inclusion-exclusion formula visiting column subsets in Gray-code
/// order, so each step adds or removes one column from the row sums:
///
/// `Perm(A) = (-1)^n Σ_{S ⊆ cols} (-1)^{|S|} Π_i Σ_{j ∈ S} A_ij`.
fn ryser_gray(a: &ComplexMatrix) -> Complex64 {
    let n = a.rows();
    let mut row_sums = vec![Complex64::new(0.0, 0.0); n];
    let mut total = Complex64::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let j = k.trailing_zeros() as usize;
        gray ^= 1 << j;
        if gray >> j & 1 == 1 {
            row_sums.iter_mut().enumerate().for_each(|(i, s)| *s += a[(i, j)]);
        } else {
            row_sums.iter_mut().enumerate().for_each(|(i, s)| *s -= a[(i, j)]);
        }
        let prod: Complex64 = row_sums.iter().product();
        if gray.count_ones().is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    if n % 2 == 1 {
        -total
    } else {
        total
    }
}

/// `U_{k|c}`: entry `(i, j)` is `U[k_i, c_j]`; repeated modes repeat rows or columns.
pub fn submatrix(u: &ComplexMatrix, k: &ModeConfig, c: &ModeConfig) -> Result<ComplexMatrix> {
    if k.n_photons() != c.n_photons() {
        return Err(Error::Dimension(format!(
            "row config has {} photons, column config has {}",
            k.n_photons(),
            c.n_photons()
        )));
    }
    for (&idx, size) in k
        .modes()
        .iter()
        .map(|i| (i, u.rows()))
        .chain(c.modes().iter().map(|j| (j, u.cols())))
    {
        if idx >= size {
            return Err(Error::IndexOutOfRange { index: idx, size });
        }
    }
    let n = k.n_photons();
    let data = k
        .modes()
        .iter()
        .flat_map(|&r| c.modes().iter().map(move |&col| (r, col)))
        .map(|(r, col)| u[(r, col)])
        .collect();
    ComplexMatrix::from_vec(n, n, data)
}
