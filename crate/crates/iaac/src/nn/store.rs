use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// How a parameter array is filled by [`ParamStore::init`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Init {
    /// U(-1/sqrt(fan_in), +1/sqrt(fan_in)); fan_in is the column count.
    UniformFanIn,
    Zero,
}

#[derive(Debug, Clone)]
struct Entry {
    name: String,
    rows: usize,
    cols: usize,
    init: Init,
    data: Vec<f64>,
    grad: Vec<f64>,
}

/// Handle to one named parameter array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(usize);

/// Owns every parameter array of a network plus a matching gradient buffer.
///
/// Arrays are registered once at construction in a fixed order; all flat
/// views (optimiser steps, checkpoints, finite differencing) run over that
/// order, so two stores built by the same code have identical layouts.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    entries: Vec<Entry>,
    /// First and second Adam moments, flat over all arrays in registration
    /// order. Empty until the first [`ParamStore::adam_step`].
    adam_m: Vec<f64>,
    adam_v: Vec<f64>,
    adam_t: u64,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Adam moment state lifted out of a store, for checkpointing.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamSnapshot {
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn add(&mut self, name: impl Into<String>, rows: usize, cols: usize, init: Init) -> ParamId {
        let name = name.into();
        assert!(rows > 0 && cols > 0, "empty parameter {name}");
        assert!(
            self.entries.iter().all(|e| e.name != name),
            "duplicate parameter name {name}"
        );
        let n = rows * cols;
        self.entries.push(Entry {
            name,
            rows,
            cols,
            init,
            data: vec![0.0; n],
            grad: vec![0.0; n],
        });
        ParamId(self.entries.len() - 1)
    }

    /// Fills every array according to its init kind.
    pub fn init(&mut self, rng: &mut ChaCha8Rng) {
        for e in &mut self.entries {
            match e.init {
                Init::Zero => e.data.iter_mut().for_each(|x| *x = 0.0),
                Init::UniformFanIn => {
                    let bound = 1.0 / (e.cols as f64).sqrt();
                    for x in &mut e.data {
                        *x = rng.gen_range(-bound..bound);
                    }
                }
            }
        }
    }

    pub fn data(&self, id: ParamId) -> &[f64] {
        &self.entries[id.0].data
    }

    pub fn data_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.entries[id.0].data
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.entries[id.0].grad
    }

    pub fn grad_mut(&mut self, id: ParamId) -> &mut [f64] {
        &mut self.entries[id.0].grad
    }

    /// Simultaneous data/grad borrow of one entry (data immutable).
    pub fn data_and_grad_mut(&mut self, id: ParamId) -> (&[f64], &mut [f64]) {
        let e = &mut self.entries[id.0];
        (&e.data, &mut e.grad)
    }

    pub fn shape(&self, id: ParamId) -> (usize, usize) {
        let e = &self.entries[id.0];
        (e.rows, e.cols)
    }

    pub fn zero_grad(&mut self) {
        for e in &mut self.entries {
            e.grad.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    /// Plain gradient descent: `p -= lr * g`.
    pub fn sgd_step(&mut self, lr: f64) {
        for e in &mut self.entries {
            for (p, g) in e.data.iter_mut().zip(&e.grad) {
                *p -= lr * g;
            }
        }
    }

    /// One Adam step (betas 0.9/0.999, eps 1e-8) with bias correction.
    /// Moment buffers appear on first use and persist on the store so
    /// checkpoints can carry them.
    pub fn adam_step(&mut self, lr: f64) {
        let n = self.param_count();
        if self.adam_m.is_empty() {
            self.adam_m = vec![0.0; n];
            self.adam_v = vec![0.0; n];
        }
        assert_eq!(self.adam_m.len(), n, "moment buffers out of step");
        self.adam_t += 1;
        let bc1 = 1.0 - ADAM_BETA1.powi(self.adam_t.min(i32::MAX as u64) as i32);
        let bc2 = 1.0 - ADAM_BETA2.powi(self.adam_t.min(i32::MAX as u64) as i32);
        let mut at = 0;
        for e in &mut self.entries {
            for (p, g) in e.data.iter_mut().zip(&e.grad) {
                let m = &mut self.adam_m[at];
                let v = &mut self.adam_v[at];
                *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
                *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
                *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + ADAM_EPS);
                at += 1;
            }
        }
    }

    /// Moment state for checkpoints; `None` when Adam has never stepped.
    pub fn adam_snapshot(&self) -> Option<AdamSnapshot> {
        if self.adam_t == 0 {
            return None;
        }
        Some(AdamSnapshot {
            t: self.adam_t,
            m: self.adam_m.clone(),
            v: self.adam_v.clone(),
        })
    }

    /// Restores checkpointed moment state.
    pub fn restore_adam(&mut self, snap: &AdamSnapshot) -> Result<(), String> {
        let n = self.param_count();
        if snap.m.len() != n || snap.v.len() != n {
            return Err(format!(
                "moment buffers have length {}/{}, expected {n}",
                snap.m.len(),
                snap.v.len()
            ));
        }
        self.adam_m = snap.m.clone();
        self.adam_v = snap.v.clone();
        self.adam_t = snap.t;
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        self.entries.iter().map(|e| e.data.len()).sum()
    }

    pub fn read_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for e in &self.entries {
            out.extend_from_slice(&e.data);
        }
        out
    }

    pub fn write_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count());
        let mut at = 0;
        for e in &mut self.entries {
            let n = e.data.len();
            e.data.copy_from_slice(&flat[at..at + n]);
            at += n;
        }
    }

    pub fn read_grad_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for e in &self.entries {
            out.extend_from_slice(&e.grad);
        }
        out
    }

    /// Copies parameter values from a store with the identical layout.
    pub fn copy_data_from(&mut self, other: &ParamStore) {
        assert_eq!(self.entries.len(), other.entries.len(), "layout mismatch");
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            assert_eq!(a.name, b.name, "layout mismatch at {}", a.name);
            a.data.copy_from_slice(&b.data);
        }
    }

    /// (name, rows, cols, data) for each array, in registration order.
    pub fn export(&self) -> Vec<(String, usize, usize, Vec<f64>)> {
        self.entries
            .iter()
            .map(|e| (e.name.clone(), e.rows, e.cols, e.data.clone()))
            .collect()
    }

    /// Restores values exported from an identically shaped store.
    pub fn import(&mut self, arrays: &[(String, usize, usize, Vec<f64>)]) -> Result<(), String> {
        if arrays.len() != self.entries.len() {
            return Err(format!(
                "expected {} arrays, got {}",
                self.entries.len(),
                arrays.len()
            ));
        }
        for (e, (name, rows, cols, data)) in self.entries.iter_mut().zip(arrays) {
            if &e.name != name || e.rows != *rows || e.cols != *cols {
                return Err(format!(
                    "array {name} ({rows}x{cols}) does not match expected {} ({}x{})",
                    e.name, e.rows, e.cols
                ));
            }
            if data.len() != e.data.len() {
                return Err(format!("array {name} has wrong length"));
            }
            e.data.copy_from_slice(data);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn init_respects_kinds_and_bounds() {
        let mut s = ParamStore::new();
        let w = s.add("w", 4, 9, Init::UniformFanIn);
        let b = s.add("b", 4, 1, Init::Zero);
        s.init(&mut stream(1, "init"));
        assert!(s.data(w).iter().all(|&x| x.abs() < 1.0 / 3.0));
        assert!(s.data(w).iter().any(|&x| x != 0.0));
        assert!(s.data(b).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn flat_roundtrip_and_sgd() {
        let mut s = ParamStore::new();
        let w = s.add("w", 2, 2, Init::UniformFanIn);
        s.init(&mut stream(2, "init"));
        let before = s.read_flat();
        s.grad_mut(w).copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        s.sgd_step(0.5);
        let after = s.read_flat();
        for (i, (b, a)) in before.iter().zip(&after).enumerate() {
            assert!((a - (b - 0.5 * (i as f64 + 1.0))).abs() < 1e-15);
        }
        s.write_flat(&before);
        assert_eq!(s.read_flat(), before);
    }

    #[test]
    fn import_rejects_shape_mismatch() {
        let mut s = ParamStore::new();
        s.add("w", 2, 3, Init::UniformFanIn);
        let bad = vec![("w".to_string(), 3usize, 2usize, vec![0.0; 6])];
        assert!(s.import(&bad).is_err());
    }
}
