//! Banded symmetric positive-definite storage and Cholesky factorization.

/// Lower band of a symmetric matrix with half-bandwidth `bw`.
#[derive(Debug, Clone)]
pub struct BandedSpd {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl BandedSpd {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw);
        i * (self.bw + 1) + (j + self.bw - i)
    }

    /// Adds `v` at `(i, j)` (and implicitly `(j, i)`).
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        let k = self.slot(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.slot(i, j)]
        }
    }

    pub fn fill_zero(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    /// In-place Cholesky `A = L Lᵀ`; `None` if a pivot is not positive.
    pub fn cholesky(mut self) -> Option<BandedCholesky> {
        let (n, bw) = (self.n, self.bw);
        for i in 0..n {
            let j0 = i.saturating_sub(bw);
            for j in j0..=i {
                let k0 = j0.max(j.saturating_sub(bw));
                let mut sum = self.data[self.slot(i, j)];
                for k in k0..j {
                    sum -= self.data[self.slot(i, k)] * self.data[self.slot(j, k)];
                }
                if i == j {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return None;
                    }
                    let s = self.slot(i, i);
                    self.data[s] = sum.sqrt();
                } else {
                    let s = self.slot(i, j);
                    self.data[s] = sum / self.data[self.slot(j, j)];
                }
            }
        }
        Some(BandedCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    factor: BandedSpd,
}

impl BandedCholesky {
    /// Solves `A x = b` in place.
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let l = &self.factor;
        let (n, bw) = (l.n, l.bw);
        for i in 0..n {
            let mut sum = b[i];
            for k in i.saturating_sub(bw)..i {
                sum -= l.data[l.slot(i, k)] * b[k];
            }
            b[i] = sum / l.data[l.slot(i, i)];
        }
        for i in (0..n).rev() {
            let mut sum = b[i];
            for k in (i + 1)..n.min(i + bw + 1) {
                sum -= l.data[l.slot(k, i)] * b[k];
            }
            b[i] = sum / l.data[l.slot(i, i)];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_tridiagonal_system() {
        let n = 6;
        let mut a = BandedSpd::zeros(n, 1);
        for i in 0..n {
            a.add(i, i, 2.0);
            if i + 1 < n {
                a.add(i + 1, i, -1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64).sin() + 1.0).collect();
        let mut b: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 2.0 * x_true[i];
                if i > 0 {
                    s -= x_true[i - 1];
                }
                if i + 1 < n {
                    s -= x_true[i + 1];
                }
                s
            })
            .collect();
        a.cholesky().unwrap().solve_in_place(&mut b);
        for (x, y) in b.iter().zip(&x_true) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut a = BandedSpd::zeros(2, 1);
        a.add(0, 0, 1.0);
        a.add(1, 1, 1.0);
        a.add(1, 0, 2.0);
        assert!(a.cholesky().is_none());
    }
}
