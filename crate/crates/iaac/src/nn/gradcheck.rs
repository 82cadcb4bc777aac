use super::net::{EpisodeInput, SequenceNet};

/// Checks analytic gradients against central differences, parameter by
/// parameter, and returns the worst relative error
/// `|a - fd| / max(1e-6, |a| + |fd|)`.
///
/// `loss` maps episode outputs to a scalar and its gradient w.r.t. every
/// output entry; the same closure drives both the analytic backward pass
/// and the finite-difference probes.
pub fn max_rel_gradient_error(
    net: &mut SequenceNet,
    input: &EpisodeInput,
    loss: &dyn Fn(&[Vec<f64>]) -> (f64, Vec<Vec<f64>>),
    eps: f64,
) -> f64 {
    net.store.zero_grad();
    let trace = net.forward(input);
    let (_, dout) = loss(&trace.outputs);
    net.backward(input, &trace, &dout);
    let analytic = net.store.read_grad_flat();

    let theta = net.store.read_flat();
    let mut max_rel = 0.0f64;
    let mut probe = theta.clone();
    for k in 0..theta.len() {
        probe[k] = theta[k] + eps;
        net.store.write_flat(&probe);
        let up = loss(&net.forward(input).outputs).0;
        probe[k] = theta[k] - eps;
        net.store.write_flat(&probe);
        let down = loss(&net.forward(input).outputs).0;
        probe[k] = theta[k];

        let fd = (up - down) / (2.0 * eps);
        let a = analytic[k];
        let rel = (a - fd).abs() / 1e-6f64.max(a.abs() + fd.abs());
        max_rel = max_rel.max(rel);
    }
    net.store.write_flat(&theta);
    max_rel
}
