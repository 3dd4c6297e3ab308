//! Anderson mixing for the fixed-point map on the trusted coefficients.

use nalgebra::{DMatrix, DVector};

#[derive(Debug)]
pub struct Anderson {
    memory: usize,
    xs: Vec<Vec<f64>>,
    fs: Vec<Vec<f64>>,
}

impl Anderson {
    pub fn new(memory: usize) -> Self {
        Anderson {
            memory,
            xs: Vec::new(),
            fs: Vec::new(),
        }
    }

    pub fn reset(&mut self) {
        self.xs.clear();
        self.fs.clear();
    }

    /// Next iterate from the current point `x` and its residual
    /// `f = G(x) − x`, mixing with damping `theta`.
    pub fn next(&mut self, x: &[f64], f: &[f64], theta: f64) -> Vec<f64> {
        self.xs.push(x.to_vec());
        self.fs.push(f.to_vec());
        if self.xs.len() > self.memory + 1 {
            self.xs.remove(0);
            self.fs.remove(0);
        }
        let n = x.len();
        let plain: Vec<f64> = x.iter().zip(f).map(|(a, b)| a + theta * b).collect();
        let cols = self.xs.len() - 1;
        if cols == 0 || self.memory == 0 {
            return plain;
        }
        let df = DMatrix::from_fn(n, cols, |r, c| self.fs[c + 1][r] - self.fs[c][r]);
        let dx = DMatrix::from_fn(n, cols, |r, c| self.xs[c + 1][r] - self.xs[c][r]);
        let rhs = DVector::from_column_slice(f);
        let Ok(gamma) = df.clone().svd(true, true).solve(&rhs, 1e-13) else {
            self.reset();
            return plain;
        };
        let corr = (dx + df * theta) * gamma;
        plain.iter().zip(corr.iter()).map(|(p, c)| p - c).collect()
    }
}
