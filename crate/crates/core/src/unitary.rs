//! Interferometer transmission matrices.
//!
//! Row `i` is the input mode and column `j` the output mode:
//! `a_i† = Σ_j U_ij d_j†`.

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;

use crate::error::{domain, Error, Result};

/// Largest `‖U†U − I‖_max` accepted as unitary.
pub const UNITARITY_TOLERANCE: f64 = 1e-10;

/// Square complex matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    n: usize,
    entries: Vec<Complex64>,
}

impl UnitaryMatrix {
    /// Wraps row-major entries. Unitarity is not checked here; see
    /// [`check_unitary`].
    pub fn from_row_major(n: usize, entries: Vec<Complex64>) -> Result<Self> {
        if n == 0 {
            return Err(domain("n", 0.0, "n >= 1"));
        }
        if entries.len() != n * n {
            return Err(Error::Dimension {
                what: "entries",
                got: entries.len(),
                expected: n * n,
            });
        }
        Ok(Self { n, entries })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut entries = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            entries[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self::from_row_major(n, entries)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.n + col]
    }

    pub fn row(&self, row: usize) -> &[Complex64] {
        &self.entries[row * self.n..(row + 1) * self.n]
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Reorders output modes: column `j` of the result is column `perm[j]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.n);
        let n = self.n;
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            entries.extend(perm.iter().map(|&p| self.get(i, p)));
        }
        Self { n, entries }
    }

    /// Multiplies every entry by `e^{iθ}`.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let phase = Complex64::from_polar(1.0, theta);
        Self {
            n: self.n,
            entries: self.entries.iter().map(|z| z * phase).collect(),
        }
    }

    #[cfg(test)]
    pub(crate) fn to_dmatrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }

    /// Writes the JSON document `{"n": N, "entries": [[[re, im], ...], ...]}`.
    ///
    /// Floats are printed with the shortest representation that parses back
    /// to the same bits.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<Value> = (0..self.n)
            .map(|i| Value::Array(self.row(i).iter().map(|z| serde_json::json!([z.re, z.im])).collect()))
            .collect();
        let doc = serde_json::json!({ "n": self.n, "entries": rows });
        let mut out = serde_json::to_string_pretty(&doc).expect("serializing a JSON value");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Value = serde_json::from_str(text).map_err(|e| Error::Parse(format!("invalid JSON: {e}")))?;
        let n = doc
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Parse("missing or non-integer field `n`".into()))? as usize;
        if n == 0 {
            return Err(Error::Parse("`n` must be at least 1".into()));
        }
        let rows = doc
            .get("entries")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Parse("missing array field `entries`".into()))?;
        if rows.len() != n {
            return Err(Error::Parse(format!("`entries` has {} rows but n = {n}", rows.len())));
        }
        let mut entries = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            let row = row
                .as_array()
                .ok_or_else(|| Error::Parse(format!("row {i} is not an array")))?;
            if row.len() != n {
                return Err(Error::Parse(format!("row {i} has {} columns but n = {n}", row.len())));
            }
            for (j, cell) in row.iter().enumerate() {
                let pair = cell.as_array().filter(|p| p.len() == 2);
                let parsed = pair.and_then(|p| Some(Complex64::new(p[0].as_f64()?, p[1].as_f64()?)));
                let z = parsed
                    .ok_or_else(|| Error::Parse(format!("entry at row {i}, column {j} is not a [re, im] pair")))?;
                entries.push(z);
            }
        }
        Self::from_row_major(n, entries)
    }
}

/// Draws a Haar-distributed unitary: QR of a complex Ginibre matrix, with the
/// phases of `R`'s diagonal moved into the columns of `Q`.
pub fn haar_random(n: usize, seed: u64) -> Result<UnitaryMatrix> {
    if n == 0 {
        return Err(domain("n", 0.0, "n >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let ginibre = DMatrix::<Complex64>::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re * scale, im * scale)
    });
    let qr = ginibre.qr();
    let r = qr.r();
    let mut q = qr.q();
    // QR = (QΛ)(Λ*R) with Λ = diag(r_jj / |r_jj|): R keeps a positive diagonal.
    for j in 0..n {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            q.column_mut(j).iter_mut().for_each(|z| *z *= phase);
        }
    }
    let mut entries = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push(q[(i, j)]);
        }
    }
    UnitaryMatrix::from_row_major(n, entries)
}

/// `‖U†U − I‖_max`.
pub fn check_unitary(u: &UnitaryMatrix) -> f64 {
    let n = u.n();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for i in 0..n {
                acc += u.get(i, a).conj() * u.get(i, b);
            }
            if a == b {
                acc -= 1.0;
            }
            worst = worst.max(acc.norm());
        }
    }
    worst
}
