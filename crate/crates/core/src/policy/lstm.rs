//! A single LSTM cell with explicit forward caches and backward pass.
//!
//! Gate layout inside the `4H` pre-activation vector: input, forget, cell
//! candidate, output.

use super::linalg::{matvec_acc, matvec_t_acc, outer_acc, sigmoid};

pub(crate) struct Cell<'a> {
    pub wx: &'a [f64],
    pub wh: &'a [f64],
    pub b: &'a [f64],
    pub input: usize,
    pub hidden: usize,
}

pub(crate) struct CellGrads<'a> {
    pub wx: &'a mut [f64],
    pub wh: &'a mut [f64],
    pub b: &'a mut [f64],
}

#[derive(Debug, Clone)]
pub(crate) struct CellStep {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates, `4H`.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    pub c: Vec<f64>,
    pub h: Vec<f64>,
}

impl<'a> Cell<'a> {
    pub fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> CellStep {
        let hd = self.hidden;
        let mut z = self.b.to_vec();
        matvec_acc(self.wx, 4 * hd, self.input, x, &mut z);
        matvec_acc(self.wh, 4 * hd, hd, h_prev, &mut z);
        let mut gates = z;
        for (k, g) in gates.iter_mut().enumerate() {
            *g = if (2 * hd..3 * hd).contains(&k) {
                g.tanh()
            } else {
                sigmoid(*g)
            };
        }
        let mut c = vec![0.0; hd];
        let mut tanh_c = vec![0.0; hd];
        let mut h = vec![0.0; hd];
        for j in 0..hd {
            let (i, f, g, o) = (gates[j], gates[hd + j], gates[2 * hd + j], gates[3 * hd + j]);
            c[j] = f * c_prev[j] + i * g;
            tanh_c[j] = c[j].tanh();
            h[j] = o * tanh_c[j];
        }
        CellStep {
            x: x.to_vec(),
            h_prev: h_prev.to_vec(),
            c_prev: c_prev.to_vec(),
            gates,
            tanh_c,
            c,
            h,
        }
    }

    /// Accumulates parameter gradients for one step given the gradients
    /// flowing into its `h` and `c`; returns `(dh_prev, dc_prev, dx)`.
    pub fn backward(
        &self,
        step: &CellStep,
        dh: &[f64],
        dc_in: &[f64],
        grads: &mut CellGrads<'_>,
    ) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let hd = self.hidden;
        let g = &step.gates;
        let mut dz = vec![0.0; 4 * hd];
        let mut dc_prev = vec![0.0; hd];
        for j in 0..hd {
            let (i, f, cand, o) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
            let do_ = dh[j] * step.tanh_c[j];
            let dc = dh[j] * o * (1.0 - step.tanh_c[j] * step.tanh_c[j]) + dc_in[j];
            dz[j] = dc * cand * i * (1.0 - i);
            dz[hd + j] = dc * step.c_prev[j] * f * (1.0 - f);
            dz[2 * hd + j] = dc * i * (1.0 - cand * cand);
            dz[3 * hd + j] = do_ * o * (1.0 - o);
            dc_prev[j] = dc * f;
        }
        outer_acc(&dz, &step.x, grads.wx);
        outer_acc(&dz, &step.h_prev, grads.wh);
        for (gb, d) in grads.b.iter_mut().zip(&dz) {
            *gb += d;
        }
        let mut dh_prev = vec![0.0; hd];
        matvec_t_acc(self.wh, 4 * hd, hd, &dz, &mut dh_prev);
        let mut dx = vec![0.0; self.input];
        matvec_t_acc(self.wx, 4 * hd, self.input, &dz, &mut dx);
        (dh_prev, dc_prev, dx)
    }
}
