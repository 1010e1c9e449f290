//! Tables built once before sampling: contractions of `U` with itself and
//! falling-factorial ratios for the target pattern.

use std::sync::Arc;

use num_complex::Complex64;

use crate::pattern::OutputPattern;
use crate::unitary::UnitaryMatrix;

/// Pattern-independent contractions of `U`, summed over the input index `i`.
#[derive(Debug, Clone)]
pub struct Contractions {
    n: usize,
    t2: Vec<Complex64>,
    m2: Vec<Complex64>,
    q4: Vec<Complex64>,
}

impl Contractions {
    pub fn new(u: &UnitaryMatrix) -> Self {
        let n = u.n();
        let mut t2 = vec![Complex64::default(); n * n];
        let mut m2 = vec![Complex64::default(); n * n];
        for i in 0..n {
            let row = u.row(i);
            for j in 0..n {
                let uij = row[j];
                for k in 0..n {
                    t2[j * n + k] += uij * row[k];
                    m2[j * n + k] += uij * row[k].conj();
                }
            }
        }

        // pair[(k, l)][i] = U_ik U_il, laid out so each Q entry is a contiguous dot product.
        let n2 = n * n;
        let mut pair = vec![Complex64::default(); n2 * n];
        for i in 0..n {
            let row = u.row(i);
            for k in 0..n {
                for l in 0..n {
                    pair[(k * n + l) * n + i] = row[k] * row[l];
                }
            }
        }
        let mut q4 = vec![Complex64::default(); n2 * n2];
        for kl in 0..n2 {
            let a = &pair[kl * n..(kl + 1) * n];
            for mn in 0..n2 {
                let b = &pair[mn * n..(mn + 1) * n];
                let mut acc = Complex64::default();
                for i in 0..n {
                    acc += a[i] * b[i].conj();
                }
                q4[kl * n2 + mn] = acc;
            }
        }
        Self { n, t2, m2, q4 }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `T_jk = Σ_i U_ij U_ik`.
    #[inline]
    pub fn t2(&self, j: usize, k: usize) -> Complex64 {
        self.t2[j * self.n + k]
    }

    /// `M_jk = Σ_i U_ij U*_ik`.
    #[inline]
    pub fn m2(&self, j: usize, k: usize) -> Complex64 {
        self.m2[j * self.n + k]
    }

    /// `Q_klmn = Σ_i U_ik U_il U*_im U*_in`.
    #[inline]
    pub fn q4(&self, k: usize, l: usize, m: usize, n: usize) -> Complex64 {
        let d = self.n;
        self.q4[((k * d + l) * d + m) * d + n]
    }
}

/// Falling factorials `F^m_p = m!/(m−p)!` for `0 ≤ m ≤ max`, with
/// `F^m_p = 0` for `p > m`.
#[derive(Debug, Clone)]
pub struct FactorialTable {
    max: usize,
    falling: Vec<f64>,
    factorial: Vec<f64>,
}

impl FactorialTable {
    pub fn new(max: usize) -> Self {
        let width = max + 1;
        let mut falling = vec![0.0; width * width];
        let mut factorial = vec![1.0; width];
        for m in 0..=max {
            if m > 0 {
                factorial[m] = factorial[m - 1] * m as f64;
            }
            falling[m * width] = 1.0;
            for p in 1..=m {
                falling[m * width + p] = (m - p + 1) as f64 * falling[m * width + p - 1];
            }
        }
        Self {
            max,
            falling,
            factorial,
        }
    }

    pub fn max(&self) -> usize {
        self.max
    }

    /// `F^m_p`; zero whenever `p > m`.
    #[inline]
    pub fn falling(&self, m: usize, p: usize) -> f64 {
        if p > m {
            return 0.0;
        }
        self.falling[m * (self.max + 1) + p]
    }

    /// `m!`.
    #[inline]
    pub fn factorial(&self, m: usize) -> f64 {
        self.factorial[m]
    }
}

/// Everything the per-sample evaluation reads besides `ξ₀`.
#[derive(Debug, Clone)]
pub struct PrecomputeTables {
    contractions: Arc<Contractions>,
    factorials: FactorialTable,
}

impl PrecomputeTables {
    /// Reuses contractions shared across patterns of the same `U`.
    pub fn with_contractions(contractions: Arc<Contractions>, pattern: &OutputPattern) -> Self {
        Self {
            contractions,
            factorials: FactorialTable::new(pattern.max_count() as usize),
        }
    }

    pub fn contractions(&self) -> &Contractions {
        &self.contractions
    }

    pub fn factorials(&self) -> &FactorialTable {
        &self.factorials
    }
}

pub fn build_tables(u: &UnitaryMatrix, pattern: &OutputPattern) -> PrecomputeTables {
    PrecomputeTables::with_contractions(Arc::new(Contractions::new(u)), pattern)
}
