use super::store::{Init, ParamId, ParamStore};

/// Dense layer `y = W x + b`.
#[derive(Debug, Clone)]
pub struct Linear {
    pub w: ParamId,
    pub b: ParamId,
    pub in_dim: usize,
    pub out_dim: usize,
}

impl Linear {
    pub fn new(store: &mut ParamStore, name: &str, in_dim: usize, out_dim: usize) -> Self {
        let w = store.add(format!("{name}.w"), out_dim, in_dim, Init::UniformFanIn);
        let b = store.add(format!("{name}.b"), out_dim, 1, Init::Zero);
        Linear {
            w,
            b,
            in_dim,
            out_dim,
        }
    }

    pub fn forward(&self, store: &ParamStore, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.in_dim);
        let w = store.data(self.w);
        let b = store.data(self.b);
        let mut y = vec![0.0; self.out_dim];
        for r in 0..self.out_dim {
            let row = &w[r * self.in_dim..][..self.in_dim];
            let mut acc = b[r];
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            y[r] = acc;
        }
        y
    }

    /// Accumulates parameter gradients and, when `dx` is given, adds the
    /// input gradient `W^T dy` into it.
    pub fn backward(&self, store: &mut ParamStore, x: &[f64], dy: &[f64], dx: Option<&mut [f64]>) {
        debug_assert_eq!(dy.len(), self.out_dim);
        {
            let gw = store.grad_mut(self.w);
            for r in 0..self.out_dim {
                let grow = &mut gw[r * self.in_dim..][..self.in_dim];
                let d = dy[r];
                if d == 0.0 {
                    continue;
                }
                for (g, xi) in grow.iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
        }
        {
            let gb = store.grad_mut(self.b);
            for (g, d) in gb.iter_mut().zip(dy) {
                *g += d;
            }
        }
        if let Some(dx) = dx {
            let w = store.data(self.w);
            for r in 0..self.out_dim {
                let d = dy[r];
                if d == 0.0 {
                    continue;
                }
                let row = &w[r * self.in_dim..][..self.in_dim];
                for (dxi, wi) in dx.iter_mut().zip(row) {
                    *dxi += d * wi;
                }
            }
        }
    }
}

pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| v.max(0.0)).collect()
}

/// dL/dx from dL/dy using the pre-activation values.
pub fn relu_backward(pre: &[f64], dy: &[f64]) -> Vec<f64> {
    pre.iter()
        .zip(dy)
        .map(|(&p, &d)| if p > 0.0 { d } else { 0.0 })
        .collect()
}
