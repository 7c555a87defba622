//! Type-II Anderson acceleration of a fixed-point map `w -> F(w)`.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
pub struct Anderson {
    memory: usize,
    regularization: f64,
    s: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
    /// Inner products of the stored residual differences.
    gram: VecDeque<VecDeque<f64>>,
    last: Option<(Vec<f64>, Vec<f64>)>,
}

impl Anderson {
    pub fn new(memory: usize, regularization: f64) -> Self {
        Anderson {
            memory,
            regularization,
            s: VecDeque::with_capacity(memory),
            y: VecDeque::with_capacity(memory),
            gram: VecDeque::with_capacity(memory),
            last: None,
        }
    }

    pub fn reset(&mut self) {
        self.s.clear();
        self.y.clear();
        self.gram.clear();
        self.last = None;
    }

    /// Given the input `w` and its image `f = F(w)`, returns the next input.
    pub fn next(&mut self, w: &[f64], f: &[f64]) -> Vec<f64> {
        let g: Vec<f64> = f.iter().zip(w).map(|(a, b)| a - b).collect();
        if let Some((w0, g0)) = self.last.take() {
            if self.s.len() == self.memory {
                self.s.pop_front();
                self.y.pop_front();
                self.gram.pop_front();
                self.gram.iter_mut().for_each(|row| {
                    row.pop_front();
                });
            }
            let yn: Vec<f64> = g.iter().zip(&g0).map(|(a, b)| a - b).collect();
            let mut row: VecDeque<f64> = self.y.iter().map(|y| dot(y, &yn)).collect();
            row.push_back(dot(&yn, &yn));
            for (r, &v) in self.gram.iter_mut().zip(&row) {
                r.push_back(v);
            }
            self.gram.push_back(row);
            self.s.push_back(w.iter().zip(&w0).map(|(a, b)| a - b).collect());
            self.y.push_back(yn);
        }
        self.last = Some((w.to_vec(), g.clone()));
        let m = self.y.len();
        if m == 0 {
            return f.to_vec();
        }

        // normal equations of min |g - Y gamma|, Tikhonov-regularized
        let mut a = vec![0.0; m * m];
        let mut rhs = vec![0.0; m];
        let mut scale = 0.0;
        for i in 0..m {
            for j in 0..m {
                a[i * m + j] = self.gram[i][j];
            }
            scale += a[i * m + i];
            rhs[i] = dot(&self.y[i], &g);
        }
        let reg = self.regularization * scale.max(f64::MIN_POSITIVE);
        for i in 0..m {
            a[i * m + i] += reg;
        }
        let Some(gamma) = cholesky_solve(&mut a, &mut rhs, m) else {
            self.reset();
            return f.to_vec();
        };

        let mut out = f.to_vec();
        for (k, &c) in gamma.iter().enumerate() {
            for ((o, s), y) in out.iter_mut().zip(&self.s[k]).zip(&self.y[k]) {
                *o -= c * (s + y);
            }
        }
        if out.iter().all(|v| v.is_finite()) {
            out
        } else {
            self.reset();
            f.to_vec()
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` in place for a symmetric positive definite `m x m` matrix.
fn cholesky_solve(a: &mut [f64], b: &mut [f64], m: usize) -> Option<Vec<f64>> {
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d -= a[j * m + k] * a[j * m + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j * m + j] = d;
        for i in j + 1..m {
            let mut v = a[i * m + j];
            for k in 0..j {
                v -= a[i * m + k] * a[j * m + k];
            }
            a[i * m + j] = v / d;
        }
    }
    for i in 0..m {
        let mut v = b[i];
        for k in 0..i {
            v -= a[i * m + k] * b[k];
        }
        b[i] = v / a[i * m + i];
    }
    for i in (0..m).rev() {
        let mut v = b[i];
        for k in i + 1..m {
            v -= a[k * m + i] * b[k];
        }
        b[i] = v / a[i * m + i];
    }
    Some(b.to_vec())
}
