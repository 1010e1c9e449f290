//! Exact pattern probabilities for small photon numbers.
//!
//! Before any Taylor expansion the probability is a Gaussian moment,
//!
//! ```text
//! P(n⃗) = scale^N · E[ Π_j L_j^{n_j} L̃_j^{n_j} ] / Π_j n_j!,
//! L_j = c Σ_i ξ_i U_ij,   L̃_j = c Σ_i ξ̃_i U*_ij,
//! ```
//!
//! with independent per-mode pairs `(ξ_i, ξ̃_i) ~ N(0, Σ)`. By Isserlis'
//! theorem the moment of the `2M` linear forms is the sum over all
//! `(2M − 1)!!` perfect matchings of products of pairwise covariances.
//! Nothing here is shared with the expansion in [`crate::trace`].

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::model::ModelParams;
use crate::pattern::OutputPattern;
use crate::unitary::UnitaryMatrix;

/// Largest total photon number the oracle accepts (`11!! = 10395` matchings).
pub const MAX_ORACLE_PHOTONS: usize = 6;

/// Which member of the per-mode Gaussian pair a linear form is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormKind {
    Xi,
    XiTilde,
}

/// `Σ_i coeffs[i] · ξ_i` (or `ξ̃_i`).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianForm {
    pub kind: FormKind,
    pub coeffs: Vec<Complex64>,
}

/// Expectation of a product of zero-mean Gaussian linear forms.
#[derive(Debug, Clone)]
pub struct PairingSum {
    forms: Vec<GaussianForm>,
    cov: [[f64; 2]; 2],
}

impl PairingSum {
    pub fn new(forms: Vec<GaussianForm>, cov: [[f64; 2]; 2]) -> Self {
        Self { forms, cov }
    }

    pub fn len(&self) -> usize {
        self.forms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forms.is_empty()
    }

    fn pair_covariance(&self, a: &GaussianForm, b: &GaussianForm) -> Complex64 {
        let sigma = match (a.kind, b.kind) {
            (FormKind::Xi, FormKind::Xi) | (FormKind::XiTilde, FormKind::XiTilde) => self.cov[0][0],
            _ => self.cov[0][1],
        };
        let dot: Complex64 = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x * y).sum();
        dot * sigma
    }

    /// Sum over perfect matchings of the products of pair covariances.
    pub fn evaluate(&self) -> Complex64 {
        let m = self.forms.len();
        if m % 2 == 1 {
            return Complex64::default();
        }
        let mut cov = vec![Complex64::default(); m * m];
        for a in 0..m {
            for b in a + 1..m {
                let v = self.pair_covariance(&self.forms[a], &self.forms[b]);
                cov[a * m + b] = v;
                cov[b * m + a] = v;
            }
        }
        let mut total = Complex64::default();
        for_each_matching(m, |pairs| {
            total += pairs.iter().map(|&(a, b)| cov[a * m + b]).product::<Complex64>();
        });
        total
    }
}

/// Calls `visit` once per perfect matching of `0..count`, pairing the
/// lowest-indexed unpaired element first. Odd `count` has no matchings.
pub fn for_each_matching(count: usize, mut visit: impl FnMut(&[(usize, usize)])) {
    if count % 2 == 1 {
        return;
    }
    let mut used = vec![false; count];
    let mut pairs = Vec::with_capacity(count / 2);
    recurse(&mut used, &mut pairs, &mut visit);
}

fn recurse(used: &mut [bool], pairs: &mut Vec<(usize, usize)>, visit: &mut impl FnMut(&[(usize, usize)])) {
    let Some(first) = used.iter().position(|u| !u) else {
        visit(pairs);
        return;
    };
    used[first] = true;
    for partner in first + 1..used.len() {
        if used[partner] {
            continue;
        }
        used[partner] = true;
        pairs.push((first, partner));
        recurse(used, pairs, visit);
        pairs.pop();
        used[partner] = false;
    }
    used[first] = false;
}

pub fn matching_count(count: usize) -> u64 {
    let mut n = 0;
    for_each_matching(count, |_| n += 1);
    n
}

/// Exact probability of `pattern`, computed by Wick summation.
pub fn exact_probability(u: &UnitaryMatrix, params: &ModelParams, pattern: &OutputPattern) -> Result<f64> {
    let n = u.n();
    if pattern.modes() != n {
        return Err(Error::Dimension {
            what: "pattern",
            got: pattern.modes(),
            expected: n,
        });
    }
    if pattern.total() > MAX_ORACLE_PHOTONS {
        return Err(Error::ResourceLimit {
            photons: pattern.total(),
            limit: MAX_ORACLE_PHOTONS,
        });
    }
    let c = params.c();
    let mut forms = Vec::with_capacity(2 * pattern.total());
    let mut factorials = 1.0;
    for (j, &nj) in pattern.counts().iter().enumerate() {
        let column: Vec<Complex64> = (0..n).map(|i| u.get(i, j) * c).collect();
        let conj: Vec<Complex64> = column.iter().map(|z| z.conj()).collect();
        for k in 0..nj {
            forms.push(GaussianForm {
                kind: FormKind::Xi,
                coeffs: column.clone(),
            });
            forms.push(GaussianForm {
                kind: FormKind::XiTilde,
                coeffs: conj.clone(),
            });
            factorials *= f64::from(k + 1);
        }
    }
    let moment = PairingSum::new(forms, params.sigma()).evaluate();
    if moment.im.abs() > 1e-10 * (1.0 + moment.re.abs()) {
        return Err(Error::ComplexResidue {
            real: moment.re,
            imag: moment.im,
        });
    }
    Ok(params.scale(n) * moment.re / factorials)
}

/// All patterns on `modes` modes with `photons` in total, in descending
/// lexicographic order: `(M, 0, …), (M−1, 1, …), …, (…, 0, M)`.
pub fn enumerate_patterns(modes: usize, photons: usize) -> Vec<OutputPattern> {
    let mut out = Vec::new();
    let mut counts = vec![0u32; modes];
    fill(&mut counts, 0, photons, &mut out);
    out
}

fn fill(counts: &mut [u32], pos: usize, left: usize, out: &mut Vec<OutputPattern>) {
    if pos + 1 >= counts.len() {
        if let Some(last) = counts.last_mut() {
            *last = left as u32;
            out.push(OutputPattern::new(counts.to_vec()));
        } else if left == 0 {
            out.push(OutputPattern::new(Vec::new()));
        }
        return;
    }
    for k in (0..=left).rev() {
        counts[pos] = k as u32;
        fill(counts, pos + 1, left - k, out);
    }
    counts[pos] = 0;
}

/// Total exact probability of all patterns with at most `max_photons` photons.
pub fn normalization_check(u: &UnitaryMatrix, params: &ModelParams, max_photons: usize) -> Result<f64> {
    if max_photons > MAX_ORACLE_PHOTONS {
        return Err(domain("max_photons", max_photons as f64, "max_photons <= 6"));
    }
    let mut total = 0.0;
    for m in 0..=max_photons {
        for pattern in enumerate_patterns(u.n(), m) {
            total += exact_probability(u, params, &pattern)?;
        }
    }
    Ok(total)
}
