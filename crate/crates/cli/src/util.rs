//! Small deterministic helpers shared by the commands.

/// FNV-1a over bytes; used to fingerprint configurations in artifacts.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// SplitMix64 finalizer; decorrelates derived seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for training episode `i` of a run.
pub fn episode_seed(run_seed: u64, i: u64) -> u64 {
    mix64(run_seed ^ mix64(i))
}

/// Noise seed for visiting episode `ep_seed` at step `t`.
pub fn noise_seed(ep_seed: u64, t: u64) -> u64 {
    mix64(ep_seed.wrapping_add(mix64(t ^ 0x5bd1_e995)))
}

/// Linear-interpolated quantile of an unsorted sample, q in [0, 1].
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty() && (0.0..=1.0).contains(&q));
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    if lo == hi {
        v[lo]
    } else {
        v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
    }
}

/// Trailing moving average over a window; output index i averages the last
/// `window` values ending at i (fewer near the start).
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    assert!(window > 0);
    let mut out = Vec::with_capacity(xs.len());
    let mut sum = 0.0;
    for i in 0..xs.len() {
        sum += xs[i];
        if i >= window {
            sum -= xs[i - window];
        }
        out.push(sum / window.min(i + 1) as f64);
    }
    out
}
