//! Minimal training kernel: tensors with paired gradients, an embedding
//! table, a gated recurrent cell, fully connected layers, dropout,
//! regression/reconstruction losses, Adam, and a finite-difference
//! gradient checker. No general computation graph — each layer wires its
//! own backward pass.

mod adam;
mod check;
mod dropout;
mod embedding;
mod linear;
mod loss;
mod lstm;
mod tensor;

pub use adam::{clip_global_norm, optimize_step, AdamState};
pub use check::{backward_check, DEFAULT_FD_STEP};
pub use dropout::DropoutMask;
pub use embedding::Embedding;
pub use linear::{linear_forward, Linear};
pub use loss::{mse_loss, softmax_ce_loss};
pub use lstm::{recurrent_step, sigmoid, LstmCell, LstmStep};
pub use tensor::{Parameterized, Tensor2};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    // ---- linear_forward ----

    #[test]
    fn linear_identity_case() {
        let input = Tensor2::from_rows(vec![vec![1.0, 2.0]]).unwrap();
        let w = Tensor2::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let out = linear_forward(&input, &w, &[0.0, 0.0]).unwrap();
        assert_eq!(out.values(), &[1.0, 2.0]);
    }

    #[test]
    fn linear_hand_multiplied() {
        // [1,1] x [[2,3],[4,5]] + [1,1] = [7,9]
        let input = Tensor2::from_rows(vec![vec![1.0, 1.0]]).unwrap();
        let w = Tensor2::from_rows(vec![vec![2.0, 3.0], vec![4.0, 5.0]]).unwrap();
        let out = linear_forward(&input, &w, &[1.0, 1.0]).unwrap();
        assert_eq!(out.values(), &[7.0, 9.0]);
    }

    #[test]
    fn linear_zero_input_passes_bias() {
        let input = Tensor2::from_rows(vec![vec![0.0, 0.0]]).unwrap();
        let w = Tensor2::uniform(2, 2, 0.1, &mut rng(3));
        let out = linear_forward(&input, &w, &[0.25, -0.5]).unwrap();
        assert_eq!(out.values(), &[0.25, -0.5]);
    }

    #[test]
    fn linear_shape_mismatch_names_both_shapes() {
        let input = Tensor2::zeros(1, 3);
        let w = Tensor2::zeros(2, 2);
        let err = linear_forward(&input, &w, &[0.0, 0.0]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("1x3") && msg.contains("2x2"), "got: {msg}");
    }

    // ---- recurrent_step ----

    #[test]
    fn recurrent_step_zero_parameters() {
        let cell = LstmCell::new(3, 4, 0.0, &mut rng(0));
        let (h, c) = recurrent_step(&cell, &[1.0, -2.0, 0.5], &[0.0; 4], &[0.0; 4]).unwrap();
        // tanh(0) * sigmoid(0) = 0
        assert!(h.iter().all(|&v| v == 0.0));
        assert!(c.iter().all(|&v| v == 0.0));
    }

    /// Independent straight-line re-implementation of the gate equations.
    fn lstm_oracle(
        cell: &LstmCell,
        x: &[f64],
        h_prev: &[f64],
        c_prev: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let hs = cell.hidden_size();
        let sig = |v: f64| 1.0 / (1.0 + (-v).exp());
        let mut h = vec![0.0; hs];
        let mut c = vec![0.0; hs];
        for j in 0..hs {
            let pre = |col: usize| {
                let mut a = cell.b.at(0, col);
                for (k, &xv) in x.iter().enumerate() {
                    a += xv * cell.w_x.at(k, col);
                }
                for (k, &hv) in h_prev.iter().enumerate() {
                    a += hv * cell.w_h.at(k, col);
                }
                a
            };
            let i_g = sig(pre(j));
            let f_g = sig(pre(hs + j));
            let g_g = pre(2 * hs + j).tanh();
            let o_g = sig(pre(3 * hs + j));
            c[j] = f_g * c_prev[j] + i_g * g_g;
            h[j] = o_g * c[j].tanh();
        }
        (h, c)
    }

    #[test]
    fn recurrent_step_matches_independent_reimplementation() {
        let mut r = rng(42);
        let cell = LstmCell::new(5, 4, 0.5, &mut r);
        let x: Vec<f64> = (0..5).map(|i| (i as f64) * 0.3 - 0.7).collect();
        let h0 = vec![0.1, -0.2, 0.3, -0.4];
        let c0 = vec![0.5, 0.0, -0.5, 0.25];
        let (h, c) = recurrent_step(&cell, &x, &h0, &c0).unwrap();
        let (h_ref, c_ref) = lstm_oracle(&cell, &x, &h0, &c0);
        for (a, b) in h.iter().zip(&h_ref) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
        for (a, b) in c.iter().zip(&c_ref) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn recurrent_step_hidden_bounded_by_one() {
        let mut r = rng(7);
        for trial in 0..50 {
            let cell = LstmCell::new(4, 6, 2.0, &mut r);
            let x = Tensor2::uniform(1, 4, 3.0, &mut r);
            let h0 = Tensor2::uniform(1, 6, 0.9, &mut r);
            let c0 = Tensor2::uniform(1, 6, 3.0, &mut r);
            let (h, _) = recurrent_step(&cell, x.values(), h0.values(), c0.values()).unwrap();
            assert!(
                h.iter().all(|v| v.abs() < 1.0),
                "trial {trial}: |h| >= 1: {h:?}"
            );
        }
    }

    #[test]
    fn recurrent_step_dimension_error() {
        let cell = LstmCell::new(3, 4, 0.1, &mut rng(1));
        let err = recurrent_step(&cell, &[0.0; 2], &[0.0; 4], &[0.0; 4]).unwrap_err();
        assert!(matches!(err, Error::Dimension { .. }));
    }

    // ---- backward_check ----

    struct ScalarSquare {
        w: Tensor2,
    }

    impl Parameterized for ScalarSquare {
        fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor2)> {
            vec![("w".into(), &mut self.w)]
        }
    }

    #[test]
    fn backward_check_quadratic_is_nearly_exact() {
        let mut m = ScalarSquare {
            w: Tensor2::from_values(1, 1, vec![3.0]).unwrap(),
        };
        let rel = backward_check(
            &mut m,
            |m| {
                m.zero_grad();
                let w = m.w.at(0, 0);
                m.w.grad_mut()[0] += 2.0 * w;
                Ok(w * w)
            },
            DEFAULT_FD_STEP,
        )
        .unwrap();
        assert!(rel < 1e-8, "relative error {rel}");
    }

    #[test]
    fn backward_check_constant_function_zero_error() {
        let mut m = ScalarSquare {
            w: Tensor2::from_values(1, 1, vec![1.5]).unwrap(),
        };
        let rel = backward_check(
            &mut m,
            |m| {
                m.zero_grad();
                Ok(4.25)
            },
            DEFAULT_FD_STEP,
        )
        .unwrap();
        assert_eq!(rel, 0.0);
    }

    // ---- adam ----

    fn single_param(v: f64) -> Tensor2 {
        Tensor2::from_values(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn adam_zero_gradient_leaves_params_unchanged() {
        let mut p = single_param(0.7);
        let mut adam = AdamState::new(0.001);
        for _ in 0..10 {
            let mut params = vec![("p".to_string(), &mut p)];
            adam.update(&mut params).unwrap();
        }
        assert_eq!(p.at(0, 0), 0.7);
        assert_eq!(adam.step_count(), 10);
    }

    #[test]
    fn adam_first_step_matches_hand_evaluation() {
        // t=1, g=1: m_hat = 1, v_hat = 1, delta = lr / (1 + eps)
        let mut p = single_param(0.5);
        p.grad_mut()[0] = 1.0;
        let mut adam = AdamState::new(0.001);
        let mut params = vec![("p".to_string(), &mut p)];
        adam.update(&mut params).unwrap();
        let expected = 0.5 - 0.001 / (1.0 + 1e-8);
        assert!((p.at(0, 0) - expected).abs() < 1e-15);
    }

    #[test]
    fn adam_identical_gradients_give_identical_updates() {
        let mut a = single_param(0.3);
        let mut b = single_param(0.3);
        let mut adam = AdamState::new(0.01);
        let mut r = rng(9);
        for _ in 0..25 {
            let g = rand::Rng::gen_range(&mut r, -1.0..1.0);
            a.grad_mut()[0] = g;
            b.grad_mut()[0] = g;
            let mut params = vec![("a".to_string(), &mut a), ("b".to_string(), &mut b)];
            adam.update(&mut params).unwrap();
        }
        assert_eq!(a.at(0, 0), b.at(0, 0));
    }

    #[test]
    fn adam_rejects_non_finite_gradient_naming_parameter() {
        let mut p = single_param(0.1);
        p.grad_mut()[0] = f64::NAN;
        let mut adam = AdamState::new(0.001);
        let mut params = vec![("encoder.w_x".to_string(), &mut p)];
        let err = adam.update(&mut params).unwrap_err();
        assert!(err.to_string().contains("encoder.w_x"));
    }

    // ---- dropout ----

    #[test]
    fn dropout_keep_probability_one_is_identity() {
        let mut t = Tensor2::uniform(4, 5, 1.0, &mut rng(2));
        let before = t.values().to_vec();
        let mask = DropoutMask::sample(t.len(), 0.0, &mut rng(3));
        mask.apply(&mut t);
        assert_eq!(t.values(), &before[..]);
    }

    #[test]
    fn dropout_mean_over_masks_preserves_input() {
        let rate = 0.3;
        let mut r = rng(11);
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let mask = DropoutMask::sample(1, rate, &mut r);
            sum += mask.factors()[0];
        }
        let mean = sum / n as f64;
        assert!(
            (mean - 1.0).abs() < 0.01,
            "inverted dropout mean {mean} deviates more than 1%"
        );
    }

    #[test]
    fn dropout_forward_deterministic_given_seed() {
        let a = DropoutMask::sample(64, 0.5, &mut rng(123));
        let b = DropoutMask::sample(64, 0.5, &mut rng(123));
        assert_eq!(a.factors(), b.factors());
    }

    // ---- per-layer gradient checks (100 random seeded configurations) ----

    struct LinearHarness {
        layer: Linear,
        input: Tensor2,
    }

    impl Parameterized for LinearHarness {
        fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor2)> {
            vec![
                ("weight".into(), &mut self.layer.weight),
                ("bias".into(), &mut self.layer.bias),
                ("input".into(), &mut self.input),
            ]
        }
    }

    #[test]
    fn linear_backward_matches_finite_differences_everywhere() {
        for seed in 0..100 {
            let mut r = rng(seed);
            let (b, i, o) = (
                rand::Rng::gen_range(&mut r, 1..4usize),
                rand::Rng::gen_range(&mut r, 1..4usize),
                rand::Rng::gen_range(&mut r, 1..4usize),
            );
            let mut m = LinearHarness {
                layer: Linear::new(i, o, 0.8, &mut r),
                input: Tensor2::uniform(b, i, 1.0, &mut r),
            };
            let rel = backward_check(
                &mut m,
                |m| {
                    m.zero_grad();
                    let mut out = m.layer.forward(&m.input)?;
                    let loss: f64 = out.values().iter().map(|v| v * v).sum();
                    let dv: Vec<f64> = out.values().iter().map(|v| 2.0 * v).collect();
                    out.grad_mut().copy_from_slice(&dv);
                    m.layer.backward(&mut m.input, &out);
                    Ok(loss)
                },
                DEFAULT_FD_STEP,
            )
            .unwrap();
            assert!(rel < 1e-4, "seed {seed}: relative error {rel}");
        }
    }

    struct LstmHarness {
        cell: LstmCell,
        x: Tensor2,
        h0: Tensor2,
        c0: Tensor2,
    }

    impl Parameterized for LstmHarness {
        fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor2)> {
            vec![
                ("w_x".into(), &mut self.cell.w_x),
                ("w_h".into(), &mut self.cell.w_h),
                ("b".into(), &mut self.cell.b),
                ("x".into(), &mut self.x),
                ("h0".into(), &mut self.h0),
                ("c0".into(), &mut self.c0),
            ]
        }
    }

    #[test]
    fn lstm_backward_matches_finite_differences_over_two_steps() {
        for seed in 0..100 {
            let mut r = rng(1000 + seed);
            let (b, i, h) = (
                rand::Rng::gen_range(&mut r, 1..3usize),
                rand::Rng::gen_range(&mut r, 1..4usize),
                rand::Rng::gen_range(&mut r, 1..4usize),
            );
            let mut m = LstmHarness {
                cell: LstmCell::new(i, h, 0.6, &mut r),
                x: Tensor2::uniform(b, i, 1.0, &mut r),
                h0: Tensor2::uniform(b, h, 0.5, &mut r),
                c0: Tensor2::uniform(b, h, 0.5, &mut r),
            };
            let rel = backward_check(
                &mut m,
                |m| {
                    m.zero_grad();
                    // two chained steps reusing the same input
                    let mut s1 = m.cell.step(&m.x, &m.h0, &m.c0)?;
                    let mut s2 = m.cell.step(&m.x, &s1.h, &s1.c)?;
                    let loss: f64 = s2.h.values().iter().map(|v| v * v).sum::<f64>()
                        + s2.c.values().iter().map(|v| v * v).sum::<f64>();
                    let dh: Vec<f64> = s2.h.values().iter().map(|v| 2.0 * v).collect();
                    let dc: Vec<f64> = s2.c.values().iter().map(|v| 2.0 * v).collect();
                    s2.h.grad_mut().copy_from_slice(&dh);
                    s2.c.grad_mut().copy_from_slice(&dc);
                    m.cell.step_backward(&mut m.x, &mut s1.h, &mut s1.c, &s2);
                    m.cell.step_backward(&mut m.x, &mut m.h0, &mut m.c0, &s1);
                    Ok(loss)
                },
                DEFAULT_FD_STEP,
            )
            .unwrap();
            assert!(rel < 1e-4, "seed {seed}: relative error {rel}");
        }
    }

    struct EmbeddingHarness {
        emb: Embedding,
        ids: Vec<usize>,
    }

    impl Parameterized for EmbeddingHarness {
        fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor2)> {
            vec![("table".into(), &mut self.emb.table)]
        }
    }

    #[test]
    fn embedding_backward_matches_finite_differences() {
        for seed in 0..100 {
            let mut r = rng(2000 + seed);
            let vocab = rand::Rng::gen_range(&mut r, 2..6usize);
            let dim = rand::Rng::gen_range(&mut r, 1..4usize);
            let ids: Vec<usize> = (0..3)
                .map(|_| rand::Rng::gen_range(&mut r, 0..vocab))
                .collect();
            let mut m = EmbeddingHarness {
                emb: Embedding::new(vocab, dim, 0.7, &mut r),
                ids,
            };
            let rel = backward_check(
                &mut m,
                |m| {
                    m.zero_grad();
                    let mut out = m.emb.forward(&m.ids)?;
                    let loss: f64 = out.values().iter().map(|v| v * v).sum();
                    let dv: Vec<f64> = out.values().iter().map(|v| 2.0 * v).collect();
                    out.grad_mut().copy_from_slice(&dv);
                    m.emb.backward(&m.ids, &out);
                    Ok(loss)
                },
                DEFAULT_FD_STEP,
            )
            .unwrap();
            assert!(rel < 1e-4, "seed {seed}: relative error {rel}");
        }
    }

    struct LossHarness {
        pred: Tensor2,
    }

    impl Parameterized for LossHarness {
        fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor2)> {
            vec![("pred".into(), &mut self.pred)]
        }
    }

    #[test]
    fn loss_backwards_match_finite_differences() {
        for seed in 0..100 {
            let mut r = rng(3000 + seed);
            let b = rand::Rng::gen_range(&mut r, 1..5usize);
            // mse
            let targets: Vec<f64> = (0..b)
                .map(|_| rand::Rng::gen_range(&mut r, 0.0..1.0))
                .collect();
            let mut m = LossHarness {
                pred: Tensor2::uniform(b, 1, 1.0, &mut r),
            };
            let t = targets.clone();
            let rel = backward_check(
                &mut m,
                move |m| {
                    m.zero_grad();
                    Ok(mse_loss(&mut m.pred, &t))
                },
                DEFAULT_FD_STEP,
            )
            .unwrap();
            assert!(rel < 1e-4, "mse seed {seed}: {rel}");
            // cross-entropy
            let v = rand::Rng::gen_range(&mut r, 2..5usize);
            let classes: Vec<usize> = (0..b)
                .map(|_| rand::Rng::gen_range(&mut r, 0..v))
                .collect();
            let mut m = LossHarness {
                pred: Tensor2::uniform(b, v, 1.5, &mut r),
            };
            let rel = backward_check(
                &mut m,
                move |m| {
                    m.zero_grad();
                    let (loss, _) = softmax_ce_loss(&mut m.pred, &classes, b as f64);
                    Ok(loss)
                },
                DEFAULT_FD_STEP,
            )
            .unwrap();
            assert!(rel < 1e-4, "ce seed {seed}: {rel}");
        }
    }

    #[test]
    fn dropout_backward_matches_finite_differences_with_fixed_mask() {
        for seed in 0..100 {
            let mut r = rng(4000 + seed);
            let n = rand::Rng::gen_range(&mut r, 1..8usize);
            let mask = DropoutMask::sample(n, 0.4, &mut r);
            let mut m = LossHarness {
                pred: Tensor2::uniform(1, n, 1.0, &mut r),
            };
            let rel = backward_check(
                &mut m,
                move |m| {
                    m.zero_grad();
                    let mut dropped = m.pred.clone();
                    dropped.zero_grad();
                    mask.apply(&mut dropped);
                    let loss: f64 = dropped.values().iter().map(|v| v * v).sum();
                    let dv: Vec<f64> = dropped.values().iter().map(|v| 2.0 * v).collect();
                    dropped.grad_mut().copy_from_slice(&dv);
                    mask.backward(&mut dropped);
                    for (g, d) in m.pred.grad_mut().iter_mut().zip(dropped.grad()) {
                        *g += d;
                    }
                    Ok(loss)
                },
                DEFAULT_FD_STEP,
            )
            .unwrap();
            assert!(rel < 1e-4, "seed {seed}: {rel}");
        }
    }

    #[test]
    fn clip_global_norm_scales_to_bound() {
        let mut p = single_param(0.0);
        p.grad_mut()[0] = 30.0;
        let mut q = single_param(0.0);
        q.grad_mut()[0] = 40.0;
        let mut params = vec![("p".to_string(), &mut p), ("q".to_string(), &mut q)];
        let pre = clip_global_norm(&mut params, 5.0);
        assert!((pre - 50.0).abs() < 1e-12);
        assert!((p.grad()[0] - 3.0).abs() < 1e-12);
        assert!((q.grad()[0] - 4.0).abs() < 1e-12);
    }
}
