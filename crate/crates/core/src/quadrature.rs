//! Tensor-product Gauss–Legendre quadrature over boxes.
//!
//! Only used as an independent oracle for closed-form Gaussian integrals.

use gauss_quad::legendre::GaussLegendre;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct TensorGauss {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl TensorGauss {
    pub fn new(points_per_axis: usize) -> Result<Self> {
        let rule = GaussLegendre::new(points_per_axis)
            .map_err(|_| Error::Parse(format!("need at least 2 quadrature points, got {points_per_axis}")))?;
        let (nodes, weights) = rule.as_node_weight_pairs().iter().cloned().unzip();
        Ok(Self { nodes, weights })
    }

    pub fn points_per_axis(&self) -> usize {
        self.nodes.len()
    }

    /// Integrates `f` over `Π [center_i − h, center_i + h]`.
    ///
    /// The multi-index runs in a fixed lexicographic order so the result is
    /// bit-for-bit reproducible.
    pub fn integrate_box<F>(&self, center: &[f64], half_width: f64, mut f: F) -> Complex64
    where
        F: FnMut(&[f64]) -> Complex64,
    {
        let dim = center.len();
        let m = self.nodes.len();
        if dim == 0 {
            return f(&[]);
        }
        let mut idx = vec![0usize; dim];
        let mut point = vec![0.0; dim];
        let mut total = Complex64::new(0.0, 0.0);
        loop {
            let mut w = 1.0;
            for k in 0..dim {
                point[k] = center[k] + half_width * self.nodes[idx[k]];
                w *= self.weights[idx[k]];
            }
            total += f(&point) * w;
            let mut k = dim;
            loop {
                if k == 0 {
                    return total * half_width.powi(dim as i32);
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < m {
                    break;
                }
                idx[k] = 0;
            }
        }
    }

    /// Composite rule on `[a, b]` with `panels` equal sub-intervals.
    pub fn integrate_1d<F>(&self, a: f64, b: f64, panels: usize, mut f: F) -> Complex64
    where
        F: FnMut(f64) -> Complex64,
    {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|p| {
                let mid = a + (p as f64 + 0.5) * h;
                self.integrate_box(&[mid], 0.5 * h, |x| f(x[0]))
            })
            .sum()
    }
}
