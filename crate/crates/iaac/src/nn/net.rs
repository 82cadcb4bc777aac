use serde::{Deserialize, Serialize};

use super::layers::{relu, relu_backward, Linear};
use super::recurrent::{CellCache, CellKind, Recurrent};
use super::store::ParamStore;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderSpec {
    pub kind: CellKind,
    pub width: usize,
}

/// Architecture of a [`SequenceNet`], independent of input/output sizes.
///
/// `obs_embed` / `action_embed` put a learned linear map in front of the
/// encoder (useful for one-hot inputs); `extra_embed` does the same for the
/// side input that bypasses the encoder. `head` lists hidden widths of the
/// output head; ReLU sits between them and the final layer is linear.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetSpec {
    pub encoder: Option<EncoderSpec>,
    pub obs_embed: Option<usize>,
    pub action_embed: Option<usize>,
    pub extra_embed: Option<usize>,
    pub head: Vec<usize>,
}

/// Input/output sizes a net is wired for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IoDims {
    pub obs: usize,
    pub num_actions: usize,
    /// Width of the side input (privileged information or ground state);
    /// `None` when the net has no side input.
    pub extra: Option<usize>,
    pub out: usize,
}

/// One episode's worth of inputs, time-major.
///
/// `prev_actions[t]` is the action taken at `t-1` (`None` at the first
/// step). `extra` must be present iff the net was wired with a side input.
/// For nets without an encoder, `obs` and `prev_actions` are ignored and may
/// be empty.
#[derive(Debug, Clone)]
pub struct EpisodeInput {
    pub obs: Vec<Vec<f64>>,
    pub prev_actions: Vec<Option<usize>>,
    pub extra: Option<Vec<Vec<f64>>>,
}

impl EpisodeInput {
    pub fn len(&self) -> usize {
        if self.obs.is_empty() {
            self.extra.as_ref().map_or(0, Vec::len)
        } else {
            self.obs.len()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone)]
pub struct StepCache {
    obs_emb: Option<Vec<f64>>,
    act_onehot: Vec<f64>,
    act_emb: Option<Vec<f64>>,
    enc_x: Vec<f64>,
    h_prev: Vec<f64>,
    cell: Option<CellCache>,
    latent: Vec<f64>,
    extra_emb: Option<Vec<f64>>,
    head_x: Vec<f64>,
    head_pre: Vec<Vec<f64>>,
}

/// Forward results plus everything backward needs.
#[derive(Debug, Clone)]
pub struct EpisodeTrace {
    pub outputs: Vec<Vec<f64>>,
    steps: Vec<StepCache>,
}

/// Recurrent hidden state carried across [`SequenceNet::step`] calls.
#[derive(Debug, Clone)]
pub struct StepState {
    h: Vec<f64>,
}

/// A sequence network: optional learned input embeddings, an optional
/// recurrent encoder over (observation, previous action) steps, and a ReLU
/// head that may take a side input alongside the encoder's latent.
///
/// The same structure serves as actor (outputs logits over actions) and as
/// critic in all its variants: history only (encoder, no side input),
/// side input only (no encoder), or both.
#[derive(Debug, Clone)]
pub struct SequenceNet {
    pub store: ParamStore,
    spec: NetSpec,
    dims: IoDims,
    obs_embed: Option<Linear>,
    act_embed: Option<Linear>,
    extra_embed: Option<Linear>,
    encoder: Option<Recurrent>,
    head_hidden: Vec<Linear>,
    head_out: Linear,
}

impl SequenceNet {
    pub fn new(spec: &NetSpec, dims: IoDims, rng: &mut ChaCha8Rng) -> Self {
        let mut store = ParamStore::new();
        let mut obs_embed = None;
        let mut act_embed = None;
        let mut encoder = None;

        let enc_width = match &spec.encoder {
            Some(enc) => {
                let obs_part = match spec.obs_embed {
                    Some(e) => {
                        obs_embed = Some(Linear::new(&mut store, "obs_embed", dims.obs, e));
                        e
                    }
                    None => dims.obs,
                };
                let act_part = match spec.action_embed {
                    Some(e) => {
                        act_embed =
                            Some(Linear::new(&mut store, "act_embed", dims.num_actions, e));
                        e
                    }
                    None => dims.num_actions,
                };
                encoder = Some(Recurrent::new(
                    &mut store,
                    "enc",
                    enc.kind,
                    obs_part + act_part,
                    enc.width,
                ));
                enc.width
            }
            None => {
                assert!(
                    spec.obs_embed.is_none() && spec.action_embed.is_none(),
                    "input embeddings need an encoder"
                );
                assert!(
                    dims.extra.is_some(),
                    "a net without an encoder needs a side input"
                );
                0
            }
        };

        let mut extra_embed = None;
        let extra_part = match (dims.extra, spec.extra_embed) {
            (Some(x), Some(e)) => {
                extra_embed = Some(Linear::new(&mut store, "extra_embed", x, e));
                e
            }
            (Some(x), None) => x,
            (None, Some(_)) => panic!("extra_embed given but the net has no side input"),
            (None, None) => 0,
        };

        let mut in_dim = enc_width + extra_part;
        assert!(in_dim > 0);
        let mut head_hidden = Vec::new();
        for (k, &width) in spec.head.iter().enumerate() {
            head_hidden.push(Linear::new(&mut store, &format!("head{k}"), in_dim, width));
            in_dim = width;
        }
        let head_out = Linear::new(&mut store, "out", in_dim, dims.out);

        store.init(rng);
        SequenceNet {
            store,
            spec: spec.clone(),
            dims,
            obs_embed,
            act_embed,
            extra_embed,
            encoder,
            head_hidden,
            head_out,
        }
    }

    pub fn spec(&self) -> &NetSpec {
        &self.spec
    }

    pub fn dims(&self) -> IoDims {
        self.dims
    }

    pub fn has_encoder(&self) -> bool {
        self.encoder.is_some()
    }

    pub fn initial_state(&self) -> StepState {
        StepState {
            h: vec![0.0; self.encoder.as_ref().map_or(0, |e| e.width)],
        }
    }

    fn one_hot_action(&self, a: Option<usize>) -> Vec<f64> {
        let mut v = vec![0.0; self.dims.num_actions];
        if let Some(a) = a {
            v[a] = 1.0;
        }
        v
    }

    fn step_core(
        &self,
        h_prev: &[f64],
        obs: &[f64],
        prev_action: Option<usize>,
        extra: Option<&[f64]>,
    ) -> (Vec<f64>, StepCache) {
        let mut cache = StepCache {
            obs_emb: None,
            act_onehot: Vec::new(),
            act_emb: None,
            enc_x: Vec::new(),
            h_prev: h_prev.to_vec(),
            cell: None,
            latent: Vec::new(),
            extra_emb: None,
            head_x: Vec::new(),
            head_pre: Vec::new(),
        };

        let mut head_x = Vec::new();
        if let Some(enc) = &self.encoder {
            debug_assert_eq!(obs.len(), self.dims.obs);
            let obs_part = match &self.obs_embed {
                Some(l) => {
                    let e = l.forward(&self.store, obs);
                    cache.obs_emb = Some(e.clone());
                    e
                }
                None => obs.to_vec(),
            };
            cache.act_onehot = self.one_hot_action(prev_action);
            let act_part = match &self.act_embed {
                Some(l) => {
                    let e = l.forward(&self.store, &cache.act_onehot);
                    cache.act_emb = Some(e.clone());
                    e
                }
                None => cache.act_onehot.clone(),
            };
            let mut x = obs_part;
            x.extend_from_slice(&act_part);
            let (h, cell_cache) = enc.forward(&self.store, &x, h_prev);
            cache.enc_x = x;
            cache.cell = Some(cell_cache);
            cache.latent = h.clone();
            head_x.extend_from_slice(&h);
        }

        if let Some(extra) = extra {
            debug_assert_eq!(Some(extra.len()), self.dims.extra);
            match &self.extra_embed {
                Some(l) => {
                    let e = l.forward(&self.store, extra);
                    cache.extra_emb = Some(e.clone());
                    head_x.extend_from_slice(&e);
                }
                None => head_x.extend_from_slice(extra),
            }
        }

        let mut cur = head_x.clone();
        cache.head_x = head_x;
        for l in &self.head_hidden {
            let pre = l.forward(&self.store, &cur);
            cur = relu(&pre);
            cache.head_pre.push(pre);
        }
        let out = self.head_out.forward(&self.store, &cur);
        (out, cache)
    }

    /// Runs the whole episode, returning outputs and the backward trace.
    pub fn forward(&self, input: &EpisodeInput) -> EpisodeTrace {
        let len = input.len();
        self.check_input(input, len);
        let mut h = self.initial_state().h;
        let mut outputs = Vec::with_capacity(len);
        let mut steps = Vec::with_capacity(len);
        let empty: Vec<f64> = Vec::new();
        for t in 0..len {
            let obs: &[f64] = if self.encoder.is_some() {
                &input.obs[t]
            } else {
                &empty
            };
            let prev = if self.encoder.is_some() {
                input.prev_actions[t]
            } else {
                None
            };
            let extra = input.extra.as_ref().map(|x| x[t].as_slice());
            let (out, cache) = self.step_core(&h, obs, prev, extra);
            if self.encoder.is_some() {
                h = cache.latent.clone();
            }
            outputs.push(out);
            steps.push(cache);
        }
        EpisodeTrace { outputs, steps }
    }

    /// One incremental step for rollouts; arithmetic is identical to
    /// [`SequenceNet::forward`] because both run the same core.
    pub fn step(
        &self,
        state: &mut StepState,
        obs: &[f64],
        prev_action: Option<usize>,
        extra: Option<&[f64]>,
    ) -> Vec<f64> {
        let (out, cache) = self.step_core(&state.h, obs, prev_action, extra);
        if self.encoder.is_some() {
            state.h = cache.latent;
        }
        out
    }

    /// Backpropagation through time. `doutputs[t]` is dL/d(output_t);
    /// parameter gradients accumulate into `self.store`.
    pub fn backward(&mut self, input: &EpisodeInput, trace: &EpisodeTrace, doutputs: &[Vec<f64>]) {
        let len = trace.steps.len();
        assert_eq!(doutputs.len(), len);
        let enc_width = self.encoder.as_ref().map_or(0, |e| e.width);
        let mut dh_future = vec![0.0; enc_width];
        let empty: Vec<f64> = Vec::new();

        // Split borrows: layers are cloned handles (cheap), store is &mut.
        let obs_embed = self.obs_embed.clone();
        let act_embed = self.act_embed.clone();
        let extra_embed = self.extra_embed.clone();
        let encoder = self.encoder.clone();
        let head_hidden = self.head_hidden.clone();
        let head_out = self.head_out.clone();
        let store = &mut self.store;

        for t in (0..len).rev() {
            let cache = &trace.steps[t];
            debug_assert_eq!(doutputs[t].len(), self.dims.out);

            // Head: rebuild the post-activation chain from cached
            // pre-activations, then walk backwards.
            let mut posts: Vec<Vec<f64>> = Vec::with_capacity(cache.head_pre.len());
            for pre in &cache.head_pre {
                posts.push(relu(pre));
            }
            let last_in: &[f64] = posts.last().map_or(&cache.head_x, |v| v);
            let mut dcur = vec![0.0; last_in.len()];
            head_out.backward(store, last_in, &doutputs[t], Some(&mut dcur));
            for k in (0..head_hidden.len()).rev() {
                let dpre = relu_backward(&cache.head_pre[k], &dcur);
                let x: &[f64] = if k == 0 { &cache.head_x } else { &posts[k - 1] };
                let mut dx = vec![0.0; x.len()];
                head_hidden[k].backward(store, x, &dpre, Some(&mut dx));
                dcur = dx;
            }
            let dhead_x = dcur;

            // Split the head-input gradient into latent and side parts.
            let (dlatent_head, dextra_part) = dhead_x.split_at(enc_width);

            if let Some(xs) = &input.extra {
                if !dextra_part.is_empty() {
                    match &extra_embed {
                        Some(l) => l.backward(store, &xs[t], dextra_part, None),
                        None => {}
                    }
                }
            }

            if let Some(enc) = &encoder {
                let mut dh: Vec<f64> = dlatent_head.to_vec();
                for (a, b) in dh.iter_mut().zip(&dh_future) {
                    *a += b;
                }
                let cell_cache = cache.cell.as_ref().expect("encoder step has a cell cache");
                let (dx, dhp) =
                    enc.backward(store, &cache.enc_x, &cache.h_prev, cell_cache, &dh);
                dh_future = dhp;

                let obs_part_len = cache
                    .obs_emb
                    .as_ref()
                    .map_or(self.dims.obs, Vec::len);
                let (dobs_part, dact_part) = dx.split_at(obs_part_len);
                let obs_t: &[f64] = if input.obs.is_empty() { &empty } else { &input.obs[t] };
                if let Some(l) = &obs_embed {
                    l.backward(store, obs_t, dobs_part, None);
                }
                if let Some(l) = &act_embed {
                    l.backward(store, &cache.act_onehot, dact_part, None);
                }
            }
        }
    }

    fn check_input(&self, input: &EpisodeInput, len: usize) {
        if self.encoder.is_some() {
            assert_eq!(input.obs.len(), len);
            assert_eq!(input.prev_actions.len(), len);
        }
        match (self.dims.extra, &input.extra) {
            (Some(_), Some(xs)) => assert_eq!(xs.len(), len),
            (Some(_), None) => panic!("net is wired with a side input but none was given"),
            (None, Some(_)) => panic!("net has no side input but one was given"),
            (None, None) => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::gradcheck::max_rel_gradient_error;
    use crate::rng::stream;
    use rand::Rng;

    fn random_input(
        rng: &mut ChaCha8Rng,
        steps: usize,
        dims: IoDims,
        with_extra: bool,
    ) -> EpisodeInput {
        let obs = (0..steps)
            .map(|_| (0..dims.obs).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let prev_actions = (0..steps)
            .map(|t| {
                if t == 0 {
                    None
                } else {
                    Some(rng.gen_range(0..dims.num_actions))
                }
            })
            .collect();
        let extra = with_extra.then(|| {
            (0..steps)
                .map(|_| {
                    (0..dims.extra.unwrap())
                        .map(|_| rng.gen_range(-1.0..1.0))
                        .collect()
                })
                .collect()
        });
        EpisodeInput {
            obs,
            prev_actions,
            extra,
        }
    }

    /// Squared outputs summed with fixed weights: nonlinear in the outputs,
    /// so gradient errors anywhere upstream show up.
    fn quadratic_loss(outputs: &[Vec<f64>]) -> (f64, Vec<Vec<f64>>) {
        let mut loss = 0.0;
        let mut grads = Vec::with_capacity(outputs.len());
        for (t, out) in outputs.iter().enumerate() {
            let mut g = Vec::with_capacity(out.len());
            for (k, &y) in out.iter().enumerate() {
                let w = 0.3 + 0.1 * (t as f64) - 0.2 * (k as f64);
                loss += w * y + 0.5 * y * y;
                g.push(w + y);
            }
            grads.push(g);
        }
        (loss, grads)
    }

    #[test]
    fn gru_net_with_embeddings_passes_gradient_check() {
        let spec = NetSpec {
            encoder: Some(EncoderSpec {
                kind: CellKind::Gru,
                width: 5,
            }),
            obs_embed: Some(4),
            action_embed: Some(3),
            extra_embed: None,
            head: vec![6],
        };
        let dims = IoDims {
            obs: 3,
            num_actions: 2,
            extra: None,
            out: 2,
        };
        let mut net = SequenceNet::new(&spec, dims, &mut stream(1, "net"));
        let input = random_input(&mut stream(2, "in"), 4, dims, false);
        let err = max_rel_gradient_error(&mut net, &input, &quadratic_loss, 1e-5);
        assert!(err < 1e-6, "max rel err {err}");
    }

    #[test]
    fn elman_net_with_side_input_passes_gradient_check() {
        let spec = NetSpec {
            encoder: Some(EncoderSpec {
                kind: CellKind::Elman,
                width: 4,
            }),
            obs_embed: None,
            action_embed: None,
            extra_embed: Some(3),
            head: vec![5, 4],
        };
        let dims = IoDims {
            obs: 2,
            num_actions: 3,
            extra: Some(2),
            out: 1,
        };
        let mut net = SequenceNet::new(&spec, dims, &mut stream(3, "net"));
        let input = random_input(&mut stream(4, "in"), 5, dims, true);
        let err = max_rel_gradient_error(&mut net, &input, &quadratic_loss, 1e-5);
        assert!(err < 1e-6, "max rel err {err}");
    }

    #[test]
    fn feedforward_side_only_net_passes_gradient_check() {
        let spec = NetSpec {
            encoder: None,
            obs_embed: None,
            action_embed: None,
            extra_embed: None,
            head: vec![8],
        };
        let dims = IoDims {
            obs: 0,
            num_actions: 2,
            extra: Some(3),
            out: 1,
        };
        let mut net = SequenceNet::new(&spec, dims, &mut stream(5, "net"));
        let mut input = random_input(&mut stream(6, "in"), 4, dims, true);
        input.obs = Vec::new();
        input.prev_actions = Vec::new();
        let err = max_rel_gradient_error(&mut net, &input, &quadratic_loss, 1e-5);
        assert!(err < 1e-6, "max rel err {err}");
    }

    #[test]
    fn incremental_steps_match_episode_forward_exactly() {
        let spec = NetSpec {
            encoder: Some(EncoderSpec {
                kind: CellKind::Gru,
                width: 6,
            }),
            obs_embed: Some(5),
            action_embed: None,
            extra_embed: None,
            head: vec![4],
        };
        let dims = IoDims {
            obs: 4,
            num_actions: 3,
            extra: None,
            out: 3,
        };
        let net = SequenceNet::new(&spec, dims, &mut stream(7, "net"));
        let input = random_input(&mut stream(8, "in"), 6, dims, false);
        let trace = net.forward(&input);
        let mut state = net.initial_state();
        for t in 0..input.len() {
            let out = net.step(&mut state, &input.obs[t], input.prev_actions[t], None);
            for (a, b) in out.iter().zip(&trace.outputs[t]) {
                assert_eq!(a.to_bits(), b.to_bits(), "t={t}");
            }
        }
    }

    #[test]
    fn first_step_uses_a_blank_action_slot() {
        let spec = NetSpec {
            encoder: Some(EncoderSpec {
                kind: CellKind::Elman,
                width: 3,
            }),
            obs_embed: None,
            action_embed: None,
            extra_embed: None,
            head: vec![],
        };
        let dims = IoDims {
            obs: 2,
            num_actions: 2,
            extra: None,
            out: 1,
        };
        let net = SequenceNet::new(&spec, dims, &mut stream(9, "net"));
        let mut s1 = net.initial_state();
        let y_none = net.step(&mut s1, &[0.5, -0.5], None, None);
        let mut s2 = net.initial_state();
        let y_some = net.step(&mut s2, &[0.5, -0.5], Some(0), None);
        assert_ne!(y_none, y_some);
    }
}
