//! Double-Q targets, the squared TD loss over a sequence, and a finite
//! difference check of its gradient.

use super::net::{LstmState, NetInput, Network, N_ACTIONS};

/// Index of the largest Q-value; ties go to the lowest index.
pub fn greedy(q: &[f64; N_ACTIONS]) -> usize {
    let mut best = 0;
    for a in 1..N_ACTIONS {
        if q[a] > q[best] {
            best = a;
        }
    }
    best
}

/// `y = r` on terminal transitions, otherwise
/// `y = r + gamma * Q_target(s', argmax_a Q_online(s', a))`.
pub fn td_targets_double_q(
    rewards: &[f64],
    terminals: &[bool],
    q_online_next: &[[f64; N_ACTIONS]],
    q_target_next: &[[f64; N_ACTIONS]],
    gamma: f64,
) -> Vec<f64> {
    rewards
        .iter()
        .enumerate()
        .map(|(t, &r)| {
            if terminals[t] {
                r
            } else {
                r + gamma * q_target_next[t][greedy(&q_online_next[t])]
            }
        })
        .collect()
}

/// `sum_t 0.5 * (Q(s_t, a_t) - y_t)^2` from a zero start state. Adds the
/// gradient into `grad` and returns the loss.
pub fn sequence_loss_grad(
    net: &Network,
    inputs: &[NetInput],
    actions: &[usize],
    targets: &[f64],
    grad: &mut [f64],
) -> f64 {
    let caches = net.forward_sequence(&inputs[..actions.len()], &net.initial_state()).expect("validated inputs");
    let mut loss = 0.0;
    let dq: Vec<[f64; N_ACTIONS]> = caches
        .iter()
        .enumerate()
        .map(|(t, c)| {
            let e = c.q[actions[t]] - targets[t];
            loss += 0.5 * e * e;
            let mut d = [0.0; N_ACTIONS];
            d[actions[t]] = e;
            d
        })
        .collect();
    net.backward_sequence(inputs, &caches, &dq, grad);
    loss
}

pub fn sequence_loss(net: &Network, inputs: &[NetInput], actions: &[usize], targets: &[f64]) -> f64 {
    let caches = net.forward_sequence(&inputs[..actions.len()], &LstmState::zeros(net.shape.hidden)).expect("validated inputs");
    caches
        .iter()
        .enumerate()
        .map(|(t, c)| 0.5 * (c.q[actions[t]] - targets[t]).powi(2))
        .sum()
}

/// Largest relative error between the analytic gradient and central
/// differences with step `h`, over every parameter. Entries where both are
/// below `1e-7` in magnitude are skipped; at that size round-off in the
/// difference quotient swamps the comparison.
pub fn gradient_check(net: &Network, inputs: &[NetInput], actions: &[usize], targets: &[f64], h: f64) -> f64 {
    let mut grad = vec![0.0; net.param_count()];
    sequence_loss_grad(net, inputs, actions, targets, &mut grad);
    let mut probe = net.clone();
    let mut worst: f64 = 0.0;
    for i in 0..net.param_count() {
        let w = net.params[i];
        probe.params[i] = w + h;
        let up = sequence_loss(&probe, inputs, actions, targets);
        probe.params[i] = w - h;
        let down = sequence_loss(&probe, inputs, actions, targets);
        probe.params[i] = w;
        let numeric = (up - down) / (2.0 * h);
        let scale = numeric.abs().max(grad[i].abs());
        if scale < 1e-7 {
            continue;
        }
        worst = worst.max((numeric - grad[i]).abs() / scale);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::net::{ConvSpec, NetworkShape};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn double_q_examples() {
        let online = [[0.1, 0.5, 0.0, 0.0, 0.0, 0.0]];
        let target = [[0.9, 0.4, 0.0, 0.0, 0.0, 0.0]];
        let y = td_targets_double_q(&[0.2], &[false], &online, &target, 0.99);
        assert!((y[0] - 0.596).abs() < 1e-12);
        assert_eq!(td_targets_double_q(&[1.0], &[true], &online, &target, 0.99), vec![1.0]);
    }

    #[test]
    fn greedy_breaks_ties_low() {
        assert_eq!(greedy(&[0.0, 0.0, 0.9, 0.0, 0.0, 0.0]), 2);
        assert_eq!(greedy(&[0.0, 0.7, 0.0, 0.7, 0.0, 0.0]), 1);
    }

    fn small_net(seed: u64) -> (Network, Vec<NetInput>, Vec<usize>, ChaCha8Rng) {
        let shape = NetworkShape {
            image_size: 8,
            in_channels: 5,
            conv: vec![ConvSpec { out_channels: 2, kernel: 3, stride: 2 }, ConvSpec { out_channels: 3, kernel: 2, stride: 1 }],
            fc: 5,
            pos_fc: 2,
            fusion: vec![6, 4],
            hidden: 16,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::new(shape, &mut rng).unwrap();
        let inputs: Vec<NetInput> = (0..4)
            .map(|_| NetInput { planes: (0..320).map(|_| rng.gen::<f64>()).collect(), position: [rng.gen(), rng.gen()] })
            .collect();
        let actions = (0..3).map(|_| rng.gen_range(0..N_ACTIONS)).collect();
        (net, inputs, actions, rng)
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (net, inputs, actions, mut rng) = small_net(4);
        let targets: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let err = gradient_check(&net, &inputs, &actions, &targets, 1e-4);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn zero_loss_gives_zero_gradient() {
        let (net, inputs, actions, _) = small_net(5);
        let caches = net.forward_sequence(&inputs[..3], &net.initial_state()).unwrap();
        let targets: Vec<f64> = (0..3).map(|t| caches[t].q[actions[t]]).collect();
        let mut grad = vec![0.0; net.param_count()];
        let loss = sequence_loss_grad(&net, &inputs, &actions, &targets, &mut grad);
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|g| *g == 0.0));
    }
}
