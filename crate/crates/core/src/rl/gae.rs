/// Generalized advantage estimation over one trajectory without terminals.
///
/// `delta_t = r_t + gamma V_{t+1} - V_t`, `A_t = sum_l (gamma lambda)^l delta_{t+l}`,
/// returns are `A + V`.
pub fn gae(rewards: &[f64], values: &[f64], value_last: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let dones = vec![false; rewards.len()];
    gae_with_dones(rewards, values, &dones, value_last, gamma, lambda)
}

/// GAE where `dones[t]` cuts both the bootstrap and the accumulation after step `t`.
pub fn gae_with_dones(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    value_last: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(rewards.len(), values.len());
    assert_eq!(rewards.len(), dones.len());
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let not_done = if dones[t] { 0.0 } else { 1.0 };
        let next_v = if t + 1 < n { values[t + 1] } else { value_last };
        let delta = rewards[t] + gamma * next_v * not_done - values[t];
        running = delta + gamma * lambda * not_done * running;
        adv[t] = running;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// Shift to mean 0 and scale to (population) std 1.
pub fn normalize(xs: &mut [f64]) {
    if xs.is_empty() {
        return;
    }
    let m = crate::stats::mean(xs);
    let s = crate::stats::std_dev(xs);
    for x in xs.iter_mut() {
        *x = (*x - m) / (s + 1e-12);
    }
}
