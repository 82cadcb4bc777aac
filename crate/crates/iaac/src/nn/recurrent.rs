use serde::{Deserialize, Serialize};

use super::store::{Init, ParamId, ParamStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellKind {
    Elman,
    Gru,
}

/// Per-step values a cell must remember to run its backward pass.
#[derive(Debug, Clone)]
pub enum CellCache {
    Elman {
        /// Post-tanh hidden state (the step output).
        h: Vec<f64>,
    },
    Gru {
        r: Vec<f64>,
        z: Vec<f64>,
        n: Vec<f64>,
        /// `W_hn h_prev`, the gated hidden contribution before `r` applies.
        hn: Vec<f64>,
    },
}

/// A recurrent cell mapping `(x_t, h_{t-1}) -> h_t`, hidden state all-zero
/// at the start of an episode.
///
/// Elman: `h_t = tanh(W_ih x + W_hh h + b)`.
/// GRU:   `r = sigma(W_ir x + W_hr h + b_r)`,
///        `z = sigma(W_iz x + W_hz h + b_z)`,
///        `n = tanh(W_in x + b_n + r * (W_hn h))`,
///        `h_t = (1 - z) * n + z * h`.
/// With all parameters zero a GRU keeps the hidden state at zero, which is
/// the behaviour the unit tests pin.
#[derive(Debug, Clone)]
pub struct Recurrent {
    pub kind: CellKind,
    pub input_dim: usize,
    pub width: usize,
    ids: Vec<ParamId>,
}

// Parameter order inside `ids`.
const ELMAN_W_IH: usize = 0;
const ELMAN_W_HH: usize = 1;
const ELMAN_B: usize = 2;
const GRU_W_IR: usize = 0;
const GRU_W_HR: usize = 1;
const GRU_B_R: usize = 2;
const GRU_W_IZ: usize = 3;
const GRU_W_HZ: usize = 4;
const GRU_B_Z: usize = 5;
const GRU_W_IN: usize = 6;
const GRU_W_HN: usize = 7;
const GRU_B_N: usize = 8;

impl Recurrent {
    pub fn new(
        store: &mut ParamStore,
        name: &str,
        kind: CellKind,
        input_dim: usize,
        width: usize,
    ) -> Self {
        let mut ids = Vec::new();
        let wi = |store: &mut ParamStore, suffix: &str| {
            store.add(format!("{name}.{suffix}"), width, input_dim, Init::UniformFanIn)
        };
        let wh = |store: &mut ParamStore, suffix: &str| {
            store.add(format!("{name}.{suffix}"), width, width, Init::UniformFanIn)
        };
        let b = |store: &mut ParamStore, suffix: &str| {
            store.add(format!("{name}.{suffix}"), width, 1, Init::Zero)
        };
        match kind {
            CellKind::Elman => {
                ids.push(wi(store, "w_ih"));
                ids.push(wh(store, "w_hh"));
                ids.push(b(store, "b"));
            }
            CellKind::Gru => {
                ids.push(wi(store, "w_ir"));
                ids.push(wh(store, "w_hr"));
                ids.push(b(store, "b_r"));
                ids.push(wi(store, "w_iz"));
                ids.push(wh(store, "w_hz"));
                ids.push(b(store, "b_z"));
                ids.push(wi(store, "w_in"));
                ids.push(wh(store, "w_hn"));
                ids.push(b(store, "b_n"));
            }
        }
        Recurrent {
            kind,
            input_dim,
            width,
            ids,
        }
    }

    fn affine(
        &self,
        store: &ParamStore,
        w: usize,
        x: &[f64],
        b: Option<usize>,
    ) -> Vec<f64> {
        let w = store.data(self.ids[w]);
        let cols = x.len();
        let mut y = match b {
            Some(b) => store.data(self.ids[b]).to_vec(),
            None => vec![0.0; self.width],
        };
        for r in 0..self.width {
            let row = &w[r * cols..][..cols];
            let mut acc = 0.0;
            for (wi, xi) in row.iter().zip(x) {
                acc += wi * xi;
            }
            y[r] += acc;
        }
        y
    }

    /// One step forward; returns the new hidden state and the backward cache.
    pub fn forward(
        &self,
        store: &ParamStore,
        x: &[f64],
        h_prev: &[f64],
    ) -> (Vec<f64>, CellCache) {
        debug_assert_eq!(x.len(), self.input_dim);
        debug_assert_eq!(h_prev.len(), self.width);
        match self.kind {
            CellKind::Elman => {
                let mut a = self.affine(store, ELMAN_W_IH, x, Some(ELMAN_B));
                let hh = self.affine(store, ELMAN_W_HH, h_prev, None);
                for (ai, hi) in a.iter_mut().zip(&hh) {
                    *ai = (*ai + hi).tanh();
                }
                (a.clone(), CellCache::Elman { h: a })
            }
            CellKind::Gru => {
                let mut r = self.affine(store, GRU_W_IR, x, Some(GRU_B_R));
                let rh = self.affine(store, GRU_W_HR, h_prev, None);
                for (v, hv) in r.iter_mut().zip(&rh) {
                    *v = sigmoid(*v + hv);
                }
                let mut z = self.affine(store, GRU_W_IZ, x, Some(GRU_B_Z));
                let zh = self.affine(store, GRU_W_HZ, h_prev, None);
                for (v, hv) in z.iter_mut().zip(&zh) {
                    *v = sigmoid(*v + hv);
                }
                let hn = self.affine(store, GRU_W_HN, h_prev, None);
                let mut n = self.affine(store, GRU_W_IN, x, Some(GRU_B_N));
                for ((v, ri), hni) in n.iter_mut().zip(&r).zip(&hn) {
                    *v = (*v + ri * hni).tanh();
                }
                let mut h = vec![0.0; self.width];
                for k in 0..self.width {
                    h[k] = (1.0 - z[k]) * n[k] + z[k] * h_prev[k];
                }
                (h, CellCache::Gru { r, z, n, hn })
            }
        }
    }

    /// One step of backpropagation. `dh` is dL/dh_t (head plus future step);
    /// accumulates parameter gradients and returns (dx, dh_prev).
    pub fn backward(
        &self,
        store: &mut ParamStore,
        x: &[f64],
        h_prev: &[f64],
        cache: &CellCache,
        dh: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let mut dx = vec![0.0; self.input_dim];
        let mut dhp = vec![0.0; self.width];
        match (self.kind, cache) {
            (CellKind::Elman, CellCache::Elman { h }) => {
                // da = dh * (1 - h^2)
                let da: Vec<f64> = dh
                    .iter()
                    .zip(h)
                    .map(|(&d, &hv)| d * (1.0 - hv * hv))
                    .collect();
                self.acc_affine(store, ELMAN_W_IH, x, &da, Some(&mut dx));
                self.acc_affine(store, ELMAN_W_HH, h_prev, &da, Some(&mut dhp));
                self.acc_bias(store, ELMAN_B, &da);
            }
            (CellKind::Gru, CellCache::Gru { r, z, n, hn }) => {
                let w = self.width;
                let mut dn = vec![0.0; w];
                let mut dz = vec![0.0; w];
                for k in 0..w {
                    dn[k] = dh[k] * (1.0 - z[k]);
                    dz[k] = dh[k] * (h_prev[k] - n[k]);
                    dhp[k] += dh[k] * z[k];
                }
                // n = tanh(a_n), a_n = W_in x + b_n + r * hn
                let mut da_n = vec![0.0; w];
                let mut dr = vec![0.0; w];
                let mut dhn = vec![0.0; w];
                for k in 0..w {
                    da_n[k] = dn[k] * (1.0 - n[k] * n[k]);
                    dr[k] = da_n[k] * hn[k];
                    dhn[k] = da_n[k] * r[k];
                }
                self.acc_affine(store, GRU_W_IN, x, &da_n, Some(&mut dx));
                self.acc_bias(store, GRU_B_N, &da_n);
                self.acc_affine(store, GRU_W_HN, h_prev, &dhn, Some(&mut dhp));
                // r and z are sigmoids of affine maps.
                let da_r: Vec<f64> = dr
                    .iter()
                    .zip(r)
                    .map(|(&d, &v)| d * v * (1.0 - v))
                    .collect();
                let da_z: Vec<f64> = dz
                    .iter()
                    .zip(z)
                    .map(|(&d, &v)| d * v * (1.0 - v))
                    .collect();
                self.acc_affine(store, GRU_W_IR, x, &da_r, Some(&mut dx));
                self.acc_affine(store, GRU_W_HR, h_prev, &da_r, Some(&mut dhp));
                self.acc_bias(store, GRU_B_R, &da_r);
                self.acc_affine(store, GRU_W_IZ, x, &da_z, Some(&mut dx));
                self.acc_affine(store, GRU_W_HZ, h_prev, &da_z, Some(&mut dhp));
                self.acc_bias(store, GRU_B_Z, &da_z);
            }
            _ => unreachable!("cache kind matches cell kind"),
        }
        (dx, dhp)
    }

    /// Accumulates `dW += da (x)^T` and optionally `dx += W^T da`.
    fn acc_affine(
        &self,
        store: &mut ParamStore,
        w: usize,
        x: &[f64],
        da: &[f64],
        dx: Option<&mut [f64]>,
    ) {
        let cols = x.len();
        {
            let gw = store.grad_mut(self.ids[w]);
            for r in 0..self.width {
                let d = da[r];
                if d == 0.0 {
                    continue;
                }
                let grow = &mut gw[r * cols..][..cols];
                for (g, xi) in grow.iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
        }
        if let Some(dx) = dx {
            let wd = store.data(self.ids[w]);
            for r in 0..self.width {
                let d = da[r];
                if d == 0.0 {
                    continue;
                }
                let row = &wd[r * cols..][..cols];
                for (dxi, wi) in dx.iter_mut().zip(row) {
                    *dxi += d * wi;
                }
            }
        }
    }

    fn acc_bias(&self, store: &mut ParamStore, b: usize, da: &[f64]) {
        let gb = store.grad_mut(self.ids[b]);
        for (g, d) in gb.iter_mut().zip(da) {
            *g += d;
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn zero_gru_keeps_zero_hidden_state() {
        let mut store = ParamStore::new();
        let cell = Recurrent::new(&mut store, "g", CellKind::Gru, 3, 4);
        // All parameters stay at zero.
        let x = vec![1.0, -2.0, 0.5];
        let h0 = vec![0.0; 4];
        let (h1, _) = cell.forward(&store, &x, &h0);
        assert_eq!(h1, vec![0.0; 4]);
        let (h2, _) = cell.forward(&store, &x, &h1);
        assert_eq!(h2, vec![0.0; 4]);
    }

    #[test]
    fn elman_matches_scalar_hand_computation() {
        let mut store = ParamStore::new();
        let cell = Recurrent::new(&mut store, "e", CellKind::Elman, 1, 1);
        store.data_mut(cell.ids[ELMAN_W_IH])[0] = 0.5;
        store.data_mut(cell.ids[ELMAN_W_HH])[0] = -0.25;
        store.data_mut(cell.ids[ELMAN_B])[0] = 0.1;
        let (h1, _) = cell.forward(&store, &[2.0], &[0.0]);
        assert!((h1[0] - (0.5f64 * 2.0 + 0.1).tanh()).abs() < 1e-15);
        let (h2, _) = cell.forward(&store, &[-1.0], &h1);
        assert!((h2[0] - (-0.5f64 - 0.25 * h1[0] + 0.1).tanh()).abs() < 1e-15);
    }

    /// Unrolls a two-step sequence and checks every parameter gradient
    /// against central differences, for both cell kinds.
    #[test]
    fn bptt_through_two_steps_matches_finite_differences() {
        for kind in [CellKind::Elman, CellKind::Gru] {
            let mut store = ParamStore::new();
            let cell = Recurrent::new(&mut store, "c", kind, 2, 3);
            store.init(&mut stream(7, "init"));
            let xs = [vec![0.3, -0.8], vec![1.2, 0.4]];
            // Loss: fixed weighted sum of both steps' hidden states.
            let wt = [
                vec![0.7, -1.0, 0.2],
                vec![-0.3, 0.5, 1.1],
            ];
            let run = |store: &ParamStore| -> (f64, Vec<(Vec<f64>, CellCache)>) {
                let mut h = vec![0.0; 3];
                let mut loss = 0.0;
                let mut trace = Vec::new();
                for (x, w) in xs.iter().zip(&wt) {
                    let (hn, cache) = cell.forward(store, x, &h);
                    loss += hn.iter().zip(w).map(|(a, b)| a * b).sum::<f64>();
                    trace.push((h.clone(), cache));
                    h = hn;
                }
                (loss, trace)
            };

            store.zero_grad();
            let (_, trace) = run(&store);
            let mut dh_next = vec![0.0; 3];
            for t in (0..2).rev() {
                let mut dh: Vec<f64> = wt[t].clone();
                for (a, b) in dh.iter_mut().zip(&dh_next) {
                    *a += b;
                }
                let (h_prev, cache) = &trace[t];
                let (_dx, dhp) = cell.backward(&mut store, &xs[t], h_prev, cache, &dh);
                dh_next = dhp;
            }
            let analytic = store.read_grad_flat();

            let flat = store.read_flat();
            let eps = 1e-6;
            for k in 0..flat.len() {
                let mut up = flat.clone();
                up[k] += eps;
                store.write_flat(&up);
                let (lu, _) = run(&store);
                let mut dn = flat.clone();
                dn[k] -= eps;
                store.write_flat(&dn);
                let (ld, _) = run(&store);
                store.write_flat(&flat);
                let fd = (lu - ld) / (2.0 * eps);
                let rel = (analytic[k] - fd).abs() / f64::max(1e-6, analytic[k].abs() + fd.abs());
                assert!(rel < 1e-6, "{kind:?} param {k}: {} vs {fd}", analytic[k]);
            }
        }
    }
}
