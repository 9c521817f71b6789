//! Relation-network encoder: maps a variable-size set of per-vBS feature
//! vectors to a fixed-width state embedding.
//!
//! The embedding is the sum of a shared pair network g applied to every
//! ordered pair of distinct contexts (a single vBS contributes one self
//! pair). Summation makes the output independent of input order in exact
//! arithmetic; to make it independent bitwise as well, contexts are first
//! sorted into a canonical order, so permuted inputs produce identical
//! floating-point operations in an identical sequence.

use crate::nn::{ForwardCache, MlpNet, NetGrad};
use crate::scalar::Real;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::ops::Range;

/// Per-vBS feature width.
pub const FEATURE_DIM: usize = 4;
/// A pair row concatenates two feature vectors.
pub const PAIR_DIM: usize = 2 * FEATURE_DIM;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationNet<F> {
    pub net: MlpNet<F>,
}

/// Forward state retained between [`RelationNet::encode_batch`] and
/// [`RelationNet::encode_batch_backward`].
pub struct EncodeCache<F> {
    fwd: ForwardCache<F>,
    segments: Vec<Range<usize>>,
    n_pairs: usize,
}

impl<F: Real> RelationNet<F> {
    /// Pair network `PAIR_DIM -> embed -> embed`, normalized ReLU hidden
    /// layer and linear output.
    pub fn new(embed_dim: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            net: MlpNet::new(&[PAIR_DIM, embed_dim, embed_dim], true, rng),
        }
    }

    pub fn embed_dim(&self) -> usize {
        self.net.output_dim()
    }

    /// Builds the pair-row matrix for one context set: contexts are sorted
    /// canonically, then every ordered pair of distinct indices becomes a
    /// row (`n*(n-1)` rows, or one self-pair row when `n == 1`).
    pub fn pair_rows(contexts: &[[F; 4]]) -> Array2<F> {
        assert!(!contexts.is_empty(), "cannot encode an empty context set");
        let mut order: Vec<usize> = (0..contexts.len()).collect();
        order.sort_by(|&a, &b| cmp_features(&contexts[a], &contexts[b]));
        let n = contexts.len();
        let rows = pair_count(n);
        let mut m = Array2::zeros((rows, PAIR_DIM));
        let mut r = 0;
        if n == 1 {
            let x = &contexts[order[0]];
            for k in 0..FEATURE_DIM {
                m[[0, k]] = x[k];
                m[[0, FEATURE_DIM + k]] = x[k];
            }
            return m;
        }
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (xi, xj) = (&contexts[order[i]], &contexts[order[j]]);
                for k in 0..FEATURE_DIM {
                    m[[r, k]] = xi[k];
                    m[[r, FEATURE_DIM + k]] = xj[k];
                }
                r += 1;
            }
        }
        debug_assert_eq!(r, rows);
        m
    }

    /// Encodes one context set into a state embedding.
    pub fn encode(&self, contexts: &[[F; 4]]) -> Array1<F> {
        let rows = Self::pair_rows(contexts);
        self.net.forward(rows.view()).sum_axis(Axis(0))
    }

    /// Encodes a batch of context sets in one pair-network forward pass.
    /// Returns one state row per set plus the cache backward needs.
    pub fn encode_batch(&self, batch: &[Vec<[F; 4]>]) -> (Array2<F>, EncodeCache<F>) {
        assert!(!batch.is_empty(), "empty batch");
        let mut segments = Vec::with_capacity(batch.len());
        let mut total = 0usize;
        for set in batch {
            let c = pair_count(set.len());
            segments.push(total..total + c);
            total += c;
        }
        let mut rows = Array2::zeros((total, PAIR_DIM));
        for (set, seg) in batch.iter().zip(segments.iter()) {
            rows.slice_mut(ndarray::s![seg.clone(), ..])
                .assign(&Self::pair_rows(set));
        }
        let (out, fwd) = self.net.forward_cached(rows.view());
        let mut states = Array2::zeros((batch.len(), self.embed_dim()));
        for (b, seg) in segments.iter().enumerate() {
            let part = out.slice(ndarray::s![seg.clone(), ..]).sum_axis(Axis(0));
            states.row_mut(b).assign(&part);
        }
        (
            states,
            EncodeCache {
                fwd,
                segments,
                n_pairs: total,
            },
        )
    }

    /// Backpropagates per-state gradients through the summed pair network.
    /// Every pair row of a set receives that set's state gradient.
    pub fn encode_batch_backward(
        &self,
        cache: &EncodeCache<F>,
        d_states: ArrayView2<F>,
    ) -> NetGrad<F> {
        assert_eq!(d_states.nrows(), cache.segments.len(), "batch mismatch");
        let mut d_out = Array2::zeros((cache.n_pairs, self.embed_dim()));
        for (b, seg) in cache.segments.iter().enumerate() {
            for r in seg.clone() {
                d_out.row_mut(r).assign(&d_states.row(b));
            }
        }
        self.net.backward(&cache.fwd, d_out).0
    }
}

fn pair_count(n: usize) -> usize {
    if n <= 1 {
        1
    } else {
        n * (n - 1)
    }
}

fn cmp_features<F: Real>(a: &[F; 4], b: &[F; 4]) -> Ordering {
    for k in 0..FEATURE_DIM {
        match a[k].partial_cmp(&b[k]) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_contexts<F: Real>(n: usize, rng: &mut ChaCha8Rng) -> Vec<[F; 4]> {
        (0..n)
            .map(|_| {
                let mut f = [F::zero(); 4];
                for v in f.iter_mut() {
                    *v = F::of_f64(rng.gen_range(0.0..1.0));
                }
                f
            })
            .collect()
    }

    #[test]
    fn encoding_is_bitwise_permutation_invariant() {
        let rn = RelationNet::<f32>::new(16, &mut rng(1));
        let mut r = rng(2);
        for n in 1..=4 {
            let ctx = random_contexts::<f32>(n, &mut r);
            let base = rn.encode(&ctx);
            // Walk a handful of distinct permutations.
            let mut perm = ctx.clone();
            for _ in 0..6 {
                let i = r.gen_range(0..n);
                let j = r.gen_range(0..n);
                perm.swap(i, j);
                let enc = rn.encode(&perm);
                assert_eq!(base, enc, "n={n}: permuted encoding differs");
            }
        }
    }

    #[test]
    fn single_context_uses_one_self_pair() {
        let rn = RelationNet::<f64>::new(8, &mut rng(3));
        let ctx = random_contexts::<f64>(1, &mut rng(4));
        let mut row = [0.0; PAIR_DIM];
        row[..4].copy_from_slice(&ctx[0]);
        row[4..].copy_from_slice(&ctx[0]);
        let direct = rn.net.forward(
            Array2::from_shape_vec((1, PAIR_DIM), row.to_vec())
                .unwrap()
                .view(),
        );
        let enc = rn.encode(&ctx);
        for (a, b) in enc.iter().zip(direct.row(0).iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn two_identical_contexts_double_the_self_pair() {
        let rn = RelationNet::<f64>::new(8, &mut rng(5));
        let ctx = random_contexts::<f64>(1, &mut rng(6));
        let pair = vec![ctx[0], ctx[0]];
        let single = rn.encode(&ctx);
        let double = rn.encode(&pair);
        for (d, s) in double.iter().zip(single.iter()) {
            assert!((d - 2.0 * s).abs() < 1e-12, "{d} vs 2*{s}");
        }
    }

    #[test]
    fn encoding_matches_explicit_pair_sum() {
        let rn = RelationNet::<f64>::new(12, &mut rng(7));
        let mut r = rng(8);
        for n in 2..=4 {
            let ctx = random_contexts::<f64>(n, &mut r);
            let mut sorted = ctx.clone();
            sorted.sort_by(cmp_features);
            let mut expect = Array1::<f64>::zeros(12);
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let mut row = Vec::with_capacity(PAIR_DIM);
                    row.extend_from_slice(&sorted[i]);
                    row.extend_from_slice(&sorted[j]);
                    let m = Array2::from_shape_vec((1, PAIR_DIM), row).unwrap();
                    expect += &rn.net.forward(m.view()).row(0);
                }
            }
            let enc = rn.encode(&ctx);
            for (a, b) in enc.iter().zip(expect.iter()) {
                assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn batched_encoding_matches_per_set_encoding() {
        let rn = RelationNet::<f64>::new(10, &mut rng(9));
        let mut r = rng(10);
        let batch: Vec<Vec<[f64; 4]>> =
            (0..5).map(|i| random_contexts(1 + i % 4, &mut r)).collect();
        let (states, _) = rn.encode_batch(&batch);
        for (b, set) in batch.iter().enumerate() {
            let single = rn.encode(set);
            for (a, e) in states.row(b).iter().zip(single.iter()) {
                assert!((a - e).abs() < 1e-12, "set {b}: {a} vs {e}");
            }
        }
    }

    #[test]
    fn zero_state_gradient_produces_zero_parameter_gradient() {
        let rn = RelationNet::<f64>::new(6, &mut rng(11));
        let batch = vec![random_contexts(3, &mut rng(12))];
        let (states, cache) = rn.encode_batch(&batch);
        let d = Array2::zeros(states.dim());
        let grad = rn.encode_batch_backward(&cache, d.view());
        for t in grad.tensors() {
            assert!(t.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn batch_backward_matches_finite_differences() {
        let mut rn = RelationNet::<f64>::new(6, &mut rng(13));
        let mut r = rng(14);
        let batch: Vec<Vec<[f64; 4]>> =
            vec![random_contexts(3, &mut r), random_contexts(2, &mut r)];
        // Loss: fixed random weighting of every state coordinate.
        let c = Array2::from_shape_fn((2, 6), |(i, j)| ((i * 6 + j) as f64 * 0.7).sin());
        let loss = |rn: &RelationNet<f64>| {
            let mut acc = 0.0;
            for (b, set) in batch.iter().enumerate() {
                let s = rn.encode(set);
                for (k, v) in s.iter().enumerate() {
                    acc += c[[b, k]] * v;
                }
            }
            acc
        };
        let (_, cache) = rn.encode_batch(&batch);
        let grad = rn.encode_batch_backward(&cache, c.view());
        let h = 1e-5;
        for idx in 0..rn.net.param_count() {
            rn.net.add_flat(idx, h);
            let up = loss(&rn);
            rn.net.add_flat(idx, -2.0 * h);
            let down = loss(&rn);
            rn.net.add_flat(idx, h);
            let num = (up - down) / (2.0 * h);
            let ana = grad.get_flat(idx);
            let denom = (num.abs() + ana.abs()).max(1e-8);
            assert!(
                (num - ana).abs() / denom < 1e-6,
                "param {idx}: numeric {num} vs analytic {ana}"
            );
        }
    }
}
