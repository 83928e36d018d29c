//! Banded LU factorization of singular-free M-matrices.
//!
//! The chain solver produces `A = I - P^T` restricted to the non-regeneration
//! states. Columns of such a matrix sum to the probability of jumping to the
//! regeneration state ("leak"). Pivots are rebuilt from the off-diagonal
//! entries and the leaks instead of by subtraction, so they stay accurate
//! even when the leak is tiny. No pivoting is needed and fill-in stays inside
//! the band.

#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    data: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ZeroPivot {
    pub row: usize,
    pub value: f64,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            data: vec![0.0; n * (kl + ku + 1)],
        }
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if j + self.kl < i || j > i + self.ku || i >= self.n || j >= self.n {
            None
        } else {
            Some(i * (self.kl + self.ku + 1) + (j + self.kl - i))
        }
    }

    #[cfg(test)]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |k| self.data[k])
    }

    /// Adds `v` to entry `(i, j)`.
    ///
    /// # Panics
    /// If `(i, j)` lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band"));
        self.data[k] += v;
    }

    /// Factorizes in place into unit-lower `L` and upper `U`.
    ///
    /// `leak[j]` is the column sum of column `j`. Off-diagonal entries must be
    /// non-positive and leaks non-negative; diagonal entries are recomputed.
    pub fn factorize_m_matrix(&mut self, leak: &mut [f64]) -> Result<(), ZeroPivot> {
        let w = self.kl + self.ku + 1;
        for k in 0..self.n {
            let last_row = (k + self.kl).min(self.n - 1);
            let last_col = (k + self.ku).min(self.n - 1);
            let mut pivot = leak[k];
            for i in k + 1..=last_row {
                pivot -= self.data[i * w + (k + self.kl - i)];
            }
            if !(pivot > 1e-300) || !pivot.is_finite() {
                return Err(ZeroPivot { row: k, value: pivot });
            }
            self.data[k * w + self.kl] = pivot;
            let leak_ratio = leak[k] / pivot;
            for j in k + 1..=last_col {
                let akj = self.data[k * w + (j + self.kl - k)];
                leak[j] -= akj * leak_ratio;
            }
            let (head, tail) = self.data.split_at_mut((k + 1) * w);
            let urow = &head[k * w + self.kl + 1..k * w + self.kl + 1 + (last_col - k)];
            for i in k + 1..=last_row {
                let row = &mut tail[(i - k - 1) * w..(i - k) * w];
                let ik = k + self.kl - i;
                let l = row[ik] / pivot;
                row[ik] = l;
                if l == 0.0 {
                    continue;
                }
                // columns k+1..=last_col of row i, contiguous after column k
                let seg = &mut row[ik + 1..ik + 1 + urow.len()];
                for (dst, &u) in seg.iter_mut().zip(urow) {
                    *dst -= l * u;
                }
            }
        }
        Ok(())
    }

    /// Solves `A x = b` after [`Self::factorize`], overwriting `b` with `x`.
    pub fn solve_factored(&self, b: &mut [f64]) {
        let w = self.kl + self.ku + 1;
        for i in 0..self.n {
            let first = i.saturating_sub(self.kl);
            let mut s = b[i];
            for j in first..i {
                s -= self.data[i * w + (j + self.kl - i)] * b[j];
            }
            b[i] = s;
        }
        for i in (0..self.n).rev() {
            let last = (i + self.ku).min(self.n - 1);
            let mut s = b[i];
            for j in i + 1..=last {
                s -= self.data[i * w + (j + self.kl - i)] * b[j];
            }
            b[i] = s / self.data[i * w + self.kl];
        }
    }
}
