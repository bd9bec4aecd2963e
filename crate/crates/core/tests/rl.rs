use esa_core::approx::Mlp;
use esa_core::envs::EnvKind;
use esa_core::esa::{Decay, EsaConfig};
use esa_core::rl::{gae, gae_with_dones, train, Agent, RlConfig, RolloutBuffer, Transition};
use esa_core::rng_stream;
use rand::Rng;

fn brute_force_gae(r: &[f64], v: &[f64], v_last: f64, gamma: f64, lambda: f64) -> Vec<f64> {
    let n = r.len();
    let next = |t: usize| if t + 1 < n { v[t + 1] } else { v_last };
    (0..n)
        .map(|t| {
            (t..n)
                .map(|k| (gamma * lambda).powi((k - t) as i32) * (r[k] + gamma * next(k) - v[k]))
                .sum()
        })
        .collect()
}

#[test]
fn gae_matches_double_sum() {
    let mut rng = rng_stream(5, 0);
    let r: Vec<f64> = (0..50).map(|_| rng.random_range(-2.0..1.0)).collect();
    let v: Vec<f64> = (0..50).map(|_| rng.random_range(-5.0..5.0)).collect();
    let (adv, ret) = gae(&r, &v, 0.7, 0.99, 0.95);
    let oracle = brute_force_gae(&r, &v, 0.7, 0.99, 0.95);
    for t in 0..50 {
        assert!((adv[t] - oracle[t]).abs() < 1e-10);
        assert!((ret[t] - (oracle[t] + v[t])).abs() < 1e-10);
    }
}

#[test]
fn gae_with_terminals_restarts_per_episode() {
    let mut rng = rng_stream(6, 0);
    let r: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..30).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut dones = vec![false; 30];
    dones[11] = true;
    let (adv, _) = gae_with_dones(&r, &v, &dones, 0.3, 0.9, 0.8);
    let first = brute_force_gae(&r[..12], &v[..12], 0.0, 0.9, 0.8);
    let second = brute_force_gae(&r[12..], &v[12..], 0.3, 0.9, 0.8);
    for (a, b) in adv.iter().zip(first.iter().chain(&second)) {
        assert!((a - b).abs() < 1e-10);
    }
}

fn synthetic_buffer(agent: &Agent, n: usize, seed: u64) -> RolloutBuffer {
    let mut rng = rng_stream(seed, 0);
    let mut buf = RolloutBuffer::new();
    let mut ws = agent.value.workspace();
    for i in 0..n {
        let obs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let a = agent.policy.sample(&obs, &mut rng).unwrap();
        let logp = agent.policy.log_prob(&obs, &a).unwrap();
        buf.push(Transition {
            obs: obs.clone(),
            action: a.clone(),
            policy_action: a,
            logp,
            reward: rng.random_range(-1.0..0.0),
            next_obs: obs.clone(),
            done: i % 50 == 49,
            value: agent.value_of(&obs, &mut ws).unwrap(),
        });
    }
    buf
}

#[test]
fn advantages_are_normalized_per_batch() {
    let cfg = RlConfig::default();
    let agent = Agent::new(3, 1, &cfg, 0).unwrap();
    let mut buf = synthetic_buffer(&agent, 500, 1);
    buf.close(0.99, 0.95, 0.0).unwrap();
    let m = esa_core::stats::mean(&buf.advantages);
    let s = esa_core::stats::std_dev(&buf.advantages);
    assert!(m.abs() < 1e-8);
    assert!((s - 1.0).abs() < 1e-6);
}

#[test]
fn zero_advantages_leave_policy_unchanged() {
    let cfg = RlConfig { epochs: 3, ..Default::default() };
    let mut agent = Agent::new(3, 1, &cfg, 0).unwrap();
    let mut buf = synthetic_buffer(&agent, 256, 2);
    let returns: Vec<f64> = buf.transitions.iter().map(|t| t.reward).collect();
    buf.close_with(vec![0.0; 256], returns).unwrap();
    let before = agent.policy.params_flat();
    agent.update(&buf, &cfg, false, &mut rng_stream(0, 5), &mut rng_stream(0, 6)).unwrap();
    let after = agent.policy.params_flat();
    let max = before.iter().zip(&after).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(max < 1e-12, "policy moved by {max}");
}

#[test]
fn clip_fraction_after_one_update_is_below_half() {
    let cfg = RlConfig::default();
    let mut agent = Agent::new(3, 1, &cfg, 0).unwrap();
    let mut buf = synthetic_buffer(&agent, 2048, 3);
    buf.close(0.99, 0.95, 0.0).unwrap();
    let stats = agent.update(&buf, &cfg, false, &mut rng_stream(0, 5), &mut rng_stream(0, 6)).unwrap();
    assert!(stats.clip_fraction < 0.5, "clip fraction {}", stats.clip_fraction);
    assert!(stats.approx_kl.is_finite());
}

#[test]
fn q_network_fits_known_quadratic_target() {
    let cfg = RlConfig { q_epochs: 800, q_lr: 3e-3, minibatch: 64, ..Default::default() };
    let mut agent = Agent::new(2, 1, &cfg, 7).unwrap();
    let mut rng = rng_stream(7, 0);
    let mut buf = RolloutBuffer::new();
    let mut targets = Vec::new();
    for _ in 0..512 {
        let obs = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let a = vec![rng.random_range(-1.0..1.0)];
        targets.push(-a[0] * a[0]);
        buf.push(Transition {
            obs: obs.clone(),
            action: a.clone(),
            policy_action: a,
            logp: 0.0,
            reward: 0.0,
            next_obs: obs,
            done: false,
            value: 0.0,
        });
    }
    buf.close_with(vec![0.0; 512], targets).unwrap();
    let half_mse = agent.fit_q(&buf, &cfg, &mut rng_stream(7, 6)).unwrap();
    assert!(2.0 * half_mse < 1e-3, "mse {}", 2.0 * half_mse);
}

fn short_cfg() -> RlConfig {
    RlConfig { total_steps: 1024, rollout_steps: 512, epochs: 2, ..Default::default() }
}

#[test]
fn collection_ratio_is_one_without_esa() {
    let out = train(EnvKind::Pendulum, &short_cfg(), None, 3).unwrap();
    assert!(out.max_collection_ratio_error < 1e-12, "{}", out.max_collection_ratio_error);
}

#[test]
fn zero_rate_esa_is_bit_identical_to_baseline() {
    let cfg = short_cfg();
    let esa = EsaConfig::uniform(&[4.0], 0.2, 10.0 * std::f64::consts::PI, 0.0, 0.05, Decay::None);
    let base = train(EnvKind::Pendulum, &cfg, None, 11).unwrap();
    let with = train(EnvKind::Pendulum, &cfg, Some(&esa), 11).unwrap();
    assert_eq!(base.episode_returns, with.episode_returns);
    assert_eq!(base.agent.policy, with.agent.policy);
    assert_eq!(base.agent.value, with.agent.value);
    assert_eq!(with.q_queries, with.env_steps);
}

#[test]
fn esa_issues_one_query_per_env_step() {
    let cfg = short_cfg();
    let esa = EsaConfig::uniform(&[2.0, 2.0], 0.2, 10.0 * std::f64::consts::PI, 1.0, 0.05, Decay::None);
    let out = train(EnvKind::PointMassCircle, &cfg, Some(&esa), 0).unwrap();
    assert_eq!(out.q_queries, out.env_steps);
    assert_eq!(out.env_steps, 1024);
}

#[test]
fn q_network_shape_is_state_plus_action() {
    let agent = Agent::new(6, 2, &RlConfig::default(), 0).unwrap();
    let q: &Mlp = &agent.q;
    assert_eq!(q.input_dim(), 8);
    assert_eq!(q.output_dim(), 1);
}
