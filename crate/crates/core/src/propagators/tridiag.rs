use num_complex::Complex64;

/// Pre-factored tridiagonal system (Thomas algorithm).
///
/// Row `i` reads `sub[i]·u[i-1] + diag[i]·u[i] + sup[i]·u[i+1] = r[i]`.
#[derive(Debug, Clone)]
pub(crate) struct Tridiagonal {
    sub: Vec<Complex64>,
    cprime: Vec<Complex64>,
    inv_pivot: Vec<Complex64>,
}

impl Tridiagonal {
    /// Returns `None` when a pivot vanishes.
    pub(crate) fn factor(sub: &[Complex64], diag: &[Complex64], sup: &[Complex64]) -> Option<Self> {
        let n = diag.len();
        let mut cprime = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        let mut prev_c = Complex64::new(0.0, 0.0);
        for i in 0..n {
            let pivot = if i == 0 { diag[0] } else { diag[i] - sub[i] * prev_c };
            if pivot.norm() == 0.0 || !pivot.is_finite() {
                return None;
            }
            inv_pivot[i] = 1.0 / pivot;
            cprime[i] = if i + 1 < n {
                sup[i] * inv_pivot[i]
            } else {
                Complex64::new(0.0, 0.0)
            };
            prev_c = cprime[i];
        }
        Some(Self {
            sub: sub.to_vec(),
            cprime,
            inv_pivot,
        })
    }

    pub(crate) fn solve_in_place(&self, r: &mut [Complex64]) {
        let n = r.len();
        r[0] *= self.inv_pivot[0];
        for i in 1..n {
            r[i] = (r[i] - self.sub[i] * r[i - 1]) * self.inv_pivot[i];
        }
        for i in (0..n.saturating_sub(1)).rev() {
            r[i] -= self.cprime[i] * r[i + 1];
        }
    }
}
