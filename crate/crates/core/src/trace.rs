//! Closed-form pattern traces of the rank-one operator
//! `ν(x) = e^{Σ S_j d_j†}|0⟩⟨0|e^{Σ S_j* d_j}` and the per-sample integrand
//! of the Taylor expansion in the fluctuations `(χ, χ̃)`.
//!
//! With `S_j = Σ_i x_i U_ij`, the trace with `q_j` creation insertions on the
//! left and `p_j` annihilation insertions on the right factorizes per mode as
//!
//! ```text
//! Tr{ d†^q ν d^p |n⟩⟨n| } = Π_j  n_j! / ((n_j − p_j)! (n_j − q_j)!) · S_j^{n_j − q_j} · S̄_j^{n_j − p_j}
//! ```
//!
//! which only ever raises `S_j` to non-negative powers, so `S_j = 0` needs no
//! special handling. Modes with `n_j = 0` contribute a factor of one and kill
//! every insertion, which restricts all insertion sums to occupied modes.

use std::fmt;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::pattern::OutputPattern;
use crate::precompute::PrecomputeTables;
use crate::unitary::UnitaryMatrix;

/// Truncation order of the expansion, counted in powers of `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Order {
    Zero,
    Two,
    Four,
}

impl Order {
    pub const ALL: [Order; 3] = [Order::Zero, Order::Two, Order::Four];

    pub fn as_u32(self) -> u32 {
        match self {
            Order::Zero => 0,
            Order::Two => 2,
            Order::Four => 4,
        }
    }
}

impl TryFrom<u32> for Order {
    type Error = Error;

    fn try_from(k: u32) -> Result<Self> {
        match k {
            0 => Ok(Order::Zero),
            2 => Ok(Order::Two),
            4 => Ok(Order::Four),
            other => Err(Error::UnsupportedOrder(other)),
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u32())
    }
}

/// Weight of the fourth-order term pairing `χ_i χ_j` with `χ̃_i χ̃_j` for
/// `i ≠ j`.
///
/// Expanding `½(Σ_i χ_i A_i)² · ½(Σ_j χ̃_j B_j)²` gives `½ h²` for these
/// cross pairs, so together with the coincident `i = j` part the fourth-order
/// `h²` contribution is `½ h² Σ M_km M_ln`. Writing `Σ_{i≠l}` without the
/// `½` in the second-order product doubles the weight to `h²`; [`Self::Doubled`] is
/// kept for comparison and is biased.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrossPairWeight {
    #[default]
    Half,
    Doubled,
}

impl CrossPairWeight {
    fn factor(self) -> f64 {
        match self {
            CrossPairWeight::Half => 0.5,
            CrossPairWeight::Doubled => 1.0,
        }
    }
}

/// Largest `|Im| / (1 + |Re|)` tolerated in an assembled integrand.
pub const IMAG_RESIDUE_TOLERANCE: f64 = 1e-9;

/// `S_j = Σ_i x_i U_ij` for one sample `x = c·ξ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearForms {
    s_vals: Vec<Complex64>,
}

impl LinearForms {
    pub fn s_vals(&self) -> &[Complex64] {
        &self.s_vals
    }

    pub(crate) fn compute_into(&mut self, u: &UnitaryMatrix, x: &[f64]) {
        self.s_vals.iter_mut().for_each(|s| *s = Complex64::default());
        for (i, &xi) in x.iter().enumerate() {
            if xi == 0.0 {
                continue;
            }
            for (s, uij) in self.s_vals.iter_mut().zip(u.row(i)) {
                *s += uij * xi;
            }
        }
    }
}

/// `S = Uᵀ x`.
pub fn linear_forms(u: &UnitaryMatrix, x: &[f64]) -> Result<LinearForms> {
    if x.len() != u.n() {
        return Err(Error::Dimension {
            what: "x",
            got: x.len(),
            expected: u.n(),
        });
    }
    let mut forms = LinearForms {
        s_vals: vec![Complex64::default(); u.n()],
    };
    forms.compute_into(u, x);
    Ok(forms)
}

fn falling(m: u32, p: u32) -> f64 {
    (0..p).map(|k| (m - k) as f64).product()
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// `Tr{ν n̂} = Π_j |S_j|^{2 n_j} / n_j!`.
pub fn base_trace(forms: &LinearForms, pattern: &OutputPattern) -> f64 {
    forms
        .s_vals
        .iter()
        .zip(pattern.counts())
        .filter(|(_, &n)| n > 0)
        .map(|(s, &n)| s.norm_sqr().powi(n as i32) / factorial(n))
        .product()
}

/// `Tr{ d†^q ν d^p n̂ }` for arbitrary non-negative insertion counts; zero as
/// soon as some `p_j` or `q_j` exceeds `n_j`.
pub fn insertion_trace(forms: &LinearForms, pattern: &OutputPattern, p: &[u32], q: &[u32]) -> Complex64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for (j, &n) in pattern.counts().iter().enumerate() {
        let (pj, qj) = (p[j], q[j]);
        if pj > n || qj > n {
            return Complex64::default();
        }
        if n == 0 {
            continue;
        }
        let s = forms.s_vals[j];
        if pj == 0 && qj == 0 {
            acc *= s.norm_sqr().powi(n as i32) / factorial(n);
            continue;
        }
        let coef = falling(n, pj) * falling(n, qj) / factorial(n);
        acc *= s.powu(n - qj) * s.conj().powu(n - pj) * coef;
    }
    acc
}

/// Per-occupied-mode amplitudes `g(d) = F^n_d · S^{n−d}` for up to two insertions.
struct OccupiedModes {
    modes: Vec<usize>,
    amp: Vec<[Complex64; 3]>,
    inv_factorial: Vec<f64>,
}

impl OccupiedModes {
    fn new(forms: &LinearForms, pattern: &OutputPattern, tables: &PrecomputeTables) -> Self {
        let f = tables.factorials();
        let modes: Vec<usize> = pattern.occupied().collect();
        let mut amp = Vec::with_capacity(modes.len());
        let mut inv_factorial = Vec::with_capacity(modes.len());
        for &j in &modes {
            let n = pattern.counts()[j];
            let s = forms.s_vals[j];
            let mut g = [Complex64::default(); 3];
            for (d, slot) in g.iter_mut().enumerate() {
                if d as u32 <= n {
                    *slot = s.powu(n - d as u32) * f.falling(n as usize, d);
                }
            }
            amp.push(g);
            inv_factorial.push(1.0 / f.factorial(n as usize));
        }
        Self {
            modes,
            amp,
            inv_factorial,
        }
    }

    /// Trace with creations on occupied slots `cre` and annihilations on `ann`
    /// (each at most two entries, repeats allowed).
    #[inline]
    fn trace(&self, cre: &[usize], ann: &[usize]) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for (t, g) in self.amp.iter().enumerate() {
            let q = cre.iter().filter(|&&c| c == t).count();
            let p = ann.iter().filter(|&&a| a == t).count();
            acc *= g[q] * g[p].conj() * self.inv_factorial[t];
        }
        acc
    }
}

/// Integrand for one `ξ₀` sample: builds `S = Uᵀ(c ξ₀)` and evaluates
/// [`integrand_from_forms`] with the default cross-pair weight.
pub fn integrand(
    tables: &PrecomputeTables,
    params: &ModelParams,
    u: &UnitaryMatrix,
    pattern: &OutputPattern,
    xi0: &[f64],
    order: Order,
) -> Result<f64> {
    pattern.check_modes(u.n())?;
    let x: Vec<f64> = xi0.iter().map(|v| v * params.c()).collect();
    let forms = linear_forms(u, &x)?;
    integrand_from_forms(tables, params, &forms, pattern, order, CrossPairWeight::Half)
}

/// Bracketed sum of the expansion for fixed `S`:
///
/// * order 0: `Tr{ν n̂}`
/// * order 2: `½ var_chi c² Σ T_jk Tr{d†_j d†_k ν n̂}` + its conjugate
///   `+ h c² Σ M_jk Tr{d†_j ν d_k n̂}`
/// * order 4: `c⁴ Σ_klmn [¼ var_chi² T_kl T̄_mn + ½ h² Q_klmn + w h² (M_km M_ln − Q_klmn)]
///   Tr{d†_k d†_l ν d_m d_n n̂}` with `w` from [`CrossPairWeight`]
///
/// Fails if the imaginary part does not cancel.
pub fn integrand_from_forms(
    tables: &PrecomputeTables,
    params: &ModelParams,
    forms: &LinearForms,
    pattern: &OutputPattern,
    order: Order,
    weight: CrossPairWeight,
) -> Result<f64> {
    let occ = OccupiedModes::new(forms, pattern, tables);
    let mut total = Complex64::new(base_trace(forms, pattern), 0.0);

    if order >= Order::Two {
        let c2 = params.transmission_c2();
        let con = tables.contractions();
        let (mut cre, mut ann, mut mix) = (Complex64::default(), Complex64::default(), Complex64::default());
        for (a, &ja) in occ.modes.iter().enumerate() {
            for (b, &jb) in occ.modes.iter().enumerate() {
                let t = con.t2(ja, jb);
                cre += t * occ.trace(&[a, b], &[]);
                ann += t.conj() * occ.trace(&[], &[a, b]);
                mix += con.m2(ja, jb) * occ.trace(&[a], &[b]);
            }
        }
        total += (cre + ann) * (0.5 * params.var_chi() * c2) + mix * (params.h() * c2);
    }

    if order >= Order::Four {
        let c4 = params.transmission_c2().powi(2);
        let con = tables.contractions();
        let (mut wick, mut coincident, mut distinct) =
            (Complex64::default(), Complex64::default(), Complex64::default());
        for (a, &k) in occ.modes.iter().enumerate() {
            for (b, &l) in occ.modes.iter().enumerate() {
                let tkl = con.t2(k, l);
                for (e, &m) in occ.modes.iter().enumerate() {
                    for (f, &n) in occ.modes.iter().enumerate() {
                        let tr = occ.trace(&[a, b], &[e, f]);
                        let q = con.q4(k, l, m, n);
                        wick += tkl * con.t2(m, n).conj() * tr;
                        coincident += q * tr;
                        distinct += (con.m2(k, m) * con.m2(l, n) - q) * tr;
                    }
                }
            }
        }
        let h2 = params.h() * params.h();
        total += wick * (0.25 * c4 * params.var_chi().powi(2))
            + coincident * (0.5 * c4 * h2)
            + distinct * (weight.factor() * c4 * h2);
    }

    if total.im.abs() > IMAG_RESIDUE_TOLERANCE * (1.0 + total.re.abs()) || !total.re.is_finite() {
        return Err(Error::ComplexResidue {
            real: total.re,
            imag: total.im,
        });
    }
    Ok(total.re)
}
