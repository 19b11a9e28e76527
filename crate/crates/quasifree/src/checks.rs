//! Osterwalder-Schrader positivity and Euclidean-axiom checks.
//!
//! Positivity is certified through the smallest eigenvalue of the relevant
//! Gram matrix, so reports carry a quantitative margin instead of a bare
//! Cholesky success bit.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::TestVector;
use crate::thermal::{multi_green_euclid, s_kernel, EuclideanWord, ThermalContext};

/// Smallest eigenvalue and max-norm of a real symmetric matrix
/// (symmetrized first so roundoff asymmetry cannot poison the eigensolve).
pub fn symmetric_eigmin(m: &DMatrix<f64>) -> (f64, f64) {
    let norm = m.amax().max(f64::MIN_POSITIVE);
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    (min, norm)
}

/// Smallest eigenvalue and max-norm of a complex Hermitian matrix, through the
/// real embedding [[Re, -Im], [Im, Re]] whose spectrum doubles the original.
pub fn hermitian_eigmin(m: &DMatrix<Complex64>) -> (f64, f64) {
    let n = m.nrows();
    let mut norm = f64::MIN_POSITIVE;
    let mut embedded = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            // Hermitian part; the anti-Hermitian remainder is rounding noise.
            let z = 0.5 * (m[(i, j)] + m[(j, i)].conj());
            norm = norm.max(z.norm());
            embedded[(i, j)] = z.re;
            embedded[(n + i, n + j)] = z.re;
            embedded[(i, n + j)] = -z.im;
            embedded[(n + i, j)] = z.im;
        }
    }
    let eig = SymmetricEigen::new(embedded);
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    (min, norm)
}

/// Result of a Gram-positivity check: the smallest eigenvalue plus the matrix
/// scale that tolerances are measured against.
#[derive(Debug, Clone, Copy)]
pub struct GramCheck {
    pub min_eigenvalue: f64,
    pub norm: f64,
}

impl GramCheck {
    pub fn passes(&self, tol: f64) -> bool {
        self.min_eigenvalue >= -tol * self.norm.max(1.0)
    }
}

/// Result of `os_gram_check`: the reflection-positivity Gram
/// S(f_k, f_l; s_k + s_l) and the stationary Gram S(f_k, f_l; |s_k - s_l|).
#[derive(Debug, Clone, Copy)]
pub struct OsGramResult {
    pub os: GramCheck,
    pub stationary: GramCheck,
}

/// OS positivity of the Euclidean kernel over a family of real vectors with
/// times in [0, beta/2].
pub fn os_gram_check(ctx: &ThermalContext, family: &[(TestVector, f64)]) -> Result<OsGramResult> {
    let half_beta = half_period(ctx);
    for (f, s) in family {
        if !f.is_real() {
            return Err(Error::NonRealVector {
                max_imag: f.max_imag(),
            });
        }
        if *s < 0.0 || *s > half_beta {
            return Err(Error::TimeOutOfRange {
                time: *s,
                beta: ctx.beta.to_string(),
            });
        }
    }
    let n = family.len();
    let mut os = DMatrix::zeros(n, n);
    let mut stationary = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let (fk, sk) = &family[k];
            let (fl, sl) = &family[l];
            os[(k, l)] = s_kernel(ctx, fk, fl, sk + sl)?.re;
            stationary[(k, l)] = s_kernel(ctx, fk, fl, (sk - sl).abs())?.re;
        }
    }
    let (os_min, os_norm) = symmetric_eigmin(&os);
    let (st_min, st_norm) = symmetric_eigmin(&stationary);
    Ok(OsGramResult {
        os: GramCheck {
            min_eigenvalue: os_min,
            norm: os_norm,
        },
        stationary: GramCheck {
            min_eigenvalue: st_min,
            norm: st_norm,
        },
    })
}

/// Reflection times live in [0, beta/2] for a finite beta and on the whole
/// half line in the ground state.
fn half_period(ctx: &ThermalContext) -> f64 {
    match ctx.beta {
        crate::thermal::Beta::Finite(b) => 0.5 * b,
        crate::thermal::Beta::Infinite => f64::INFINITY,
    }
}

/// OS positivity at the Weyl level: Gram of Euclidean Green functions over
/// reflected-and-concatenated words. Word times must lie in [0, beta/2]
/// (or [0, inf) in the ground state); the empty word stands for the unit.
pub fn weyl_os_check(ctx: &ThermalContext, words: &[EuclideanWord]) -> Result<GramCheck> {
    let half_beta = half_period(ctx);
    for word in words {
        for (_, s) in &word.entries {
            if *s < 0.0 || *s > half_beta {
                return Err(Error::TimeOutOfRange {
                    time: *s,
                    beta: ctx.beta.to_string(),
                });
            }
        }
    }
    let n = words.len();
    let mut gram = DMatrix::zeros(n, n);
    for k in 0..n {
        for l in 0..n {
            let combined = words[k].reflected().concat(&words[l]);
            gram[(k, l)] = multi_green_euclid(ctx, &combined)?;
        }
    }
    let (min_eigenvalue, norm) = hermitian_eigmin(&gram);
    Ok(GramCheck {
        min_eigenvalue,
        norm,
    })
}

/// Weak KMS (cyclicity) residual for a word of n + 1 letters.
///
/// With relative times s_k = t_k - t_0 in [0, beta], both sides of
/// G-hat(W_0, ..., W_n; s_1, ..., s_n)
///   = G-hat(W_n, W_0, ..., W_{n-1}; beta - s_n, beta - s_n + s_1, ...)
/// are evaluated through `multi_green_euclid` with the first letter pinned at
/// -beta/2, and the absolute difference is returned.
pub fn eg4_cyclic_check(ctx: &ThermalContext, word: &EuclideanWord) -> Result<f64> {
    let beta = ctx.beta.value()?;
    if word.is_empty() {
        return Ok(0.0);
    }
    let t0 = word.entries[0].1;
    let rel: Vec<f64> = word.entries.iter().map(|(_, t)| t - t0).collect();
    if let Some(&span) = rel.last() {
        if span > beta + 1e-12 {
            return Err(Error::TimeOutOfRange {
                time: span,
                beta: ctx.beta.to_string(),
            });
        }
    }

    let base = -0.5 * beta;
    let lhs_word = EuclideanWord::new(
        word.entries
            .iter()
            .zip(&rel)
            .map(|((f, _), &s)| (f.clone(), base + s))
            .collect(),
    );
    let lhs = multi_green_euclid(ctx, &lhs_word)?;

    let n = word.len() - 1;
    let s_n = rel[n];
    let mut rotated = Vec::with_capacity(word.len());
    rotated.push((word.entries[n].0.clone(), base));
    for ((f, _), &rel_k) in word.entries.iter().zip(&rel).take(n) {
        rotated.push((f.clone(), base + beta - s_n + rel_k));
    }
    let rhs = multi_green_euclid(ctx, &EuclideanWord::new(rotated))?;

    Ok((lhs - rhs).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{GeneratorModel, MatrixModel};
    use crate::thermal::Beta;
    use nalgebra::DMatrix;

    fn ctx_2x2(beta: f64) -> ThermalContext {
        let h = DMatrix::from_row_slice(2, 2, &[1.6, 0.4, 0.4, 1.1]);
        ThermalContext::new(
            GeneratorModel::Matrix(MatrixModel::eigendecompose(h).unwrap()),
            Beta::Finite(beta),
        )
    }

    #[test]
    fn hermitian_eigmin_matches_known_spectrum() {
        // [[2, i], [-i, 2]] has eigenvalues 1 and 3
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 1.0),
                Complex64::new(0.0, -1.0),
                Complex64::new(2.0, 0.0),
            ],
        );
        let (min, _) = hermitian_eigmin(&m);
        assert!((min - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_element_gram_is_nonnegative() {
        let ctx = ctx_2x2(2.0);
        let f = TestVector::from_real(&[0.8, -0.3]);
        let res = os_gram_check(&ctx, &[(f, 0.4)]).unwrap();
        assert!(res.os.min_eigenvalue >= 0.0);
        assert!(res.stationary.min_eigenvalue >= 0.0);
    }

    #[test]
    fn equal_vectors_at_time_zero_give_rank_one_gram() {
        let ctx = ctx_2x2(2.0);
        let f = TestVector::from_real(&[0.8, -0.3]);
        let family: Vec<_> = (0..3).map(|_| (f.clone(), 0.0)).collect();
        let res = os_gram_check(&ctx, &family).unwrap();
        assert!(res.os.min_eigenvalue.abs() <= 1e-12 * res.os.norm);
    }

    #[test]
    fn os_gram_rejects_bad_inputs() {
        let ctx = ctx_2x2(2.0);
        let f = TestVector::from_real(&[0.8, -0.3]);
        assert!(os_gram_check(&ctx, &[(f.clone(), 1.5)]).is_err());
        let fi = f.scaled(Complex64::I);
        assert!(os_gram_check(&ctx, &[(fi, 0.1)]).is_err());
    }

    #[test]
    fn weyl_gram_with_unit_included_is_psd() {
        let ctx = ctx_2x2(2.0);
        let f = TestVector::from_real(&[0.8, -0.3]);
        let g = TestVector::from_real(&[-0.2, 0.9]);
        let words = vec![
            EuclideanWord::default(),
            EuclideanWord::new(vec![(f.clone(), 0.2)]),
            EuclideanWord::new(vec![(g.clone(), 0.6)]),
            EuclideanWord::new(vec![(f, 0.1), (g, 0.8)]),
        ];
        let res = weyl_os_check(&ctx, &words).unwrap();
        assert!(
            res.passes(1e-10),
            "min {} at norm {}",
            res.min_eigenvalue,
            res.norm
        );
        // a word against itself gives a real positive diagonal entry
        let diag = multi_green_euclid(
            &ctx,
            &words[3].reflected().concat(&words[3]),
        )
        .unwrap();
        assert!(diag.re > 0.0 && diag.im.abs() < 1e-14);
    }

    #[test]
    fn eg4_single_letter_reduces_to_reflection() {
        let ctx = ctx_2x2(2.0);
        let f = TestVector::from_real(&[0.8, -0.3]);
        let g = TestVector::from_real(&[-0.2, 0.9]);
        for s in [0.0, 0.7, 1.9] {
            let word = EuclideanWord::new(vec![(f.clone(), 0.0), (g.clone(), s)]);
            let r = eg4_cyclic_check(&ctx, &word).unwrap();
            assert!(r <= 1e-12, "s = {s}: residual {r}");
        }
    }

    #[test]
    fn eg4_equal_times_cycle_exactly() {
        let ctx = ctx_2x2(2.0);
        let f = TestVector::from_real(&[0.8, -0.3]);
        let g = TestVector::from_real(&[-0.2, 0.9]);
        let k = TestVector::from_real(&[0.5, 0.5]);
        let word = EuclideanWord::new(vec![(f, 0.0), (g, 0.0), (k, 0.0)]);
        let r = eg4_cyclic_check(&ctx, &word).unwrap();
        assert!(r <= 1e-12, "residual {r}");
    }

    #[test]
    fn eg4_three_letter_random_word() {
        let ctx = ctx_2x2(2.0);
        let f = TestVector::from_real(&[0.8, -0.3]);
        let g = TestVector::from_real(&[-0.2, 0.9]);
        let k = TestVector::from_real(&[0.5, 0.5]);
        let word = EuclideanWord::new(vec![(f, 0.15), (g, 0.95), (k, 1.6)]);
        let r = eg4_cyclic_check(&ctx, &word).unwrap();
        assert!(r <= 1e-12, "residual {r}");
    }
}
