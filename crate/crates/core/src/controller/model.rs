//! Model parameters and the joint forward/backward pass.

use crate::controller::ControllerConfig;
use crate::error::{Error, Result};
use crate::grad::{
    clip_global_norm, mse_loss, sigmoid, softmax_ce_loss, AdamState, DropoutMask, Embedding,
    Linear, LstmCell, LstmStep, Parameterized, Tensor2,
};
use crate::space::{alphabet_size, SearchSpaceSpec, Token, TokenLayout, TokenSequence, PosKind};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Parameters start uniform in [-INIT_SCALE, INIT_SCALE].
pub const INIT_SCALE: f64 = 0.1;
/// Global gradient-norm clip applied before every optimizer step.
pub const GRAD_CLIP: f64 = 5.0;

const CHECKPOINT_VERSION: u32 = 1;

/// Encoder + predictor + decoder with shared token embeddings.
///
/// The decoder is conditioned on the sequence embedding twice: as its
/// initial hidden state and concatenated to every input token embedding.
#[derive(Debug, Clone)]
pub struct ControllerModel {
    config: ControllerConfig,
    space: SearchSpaceSpec,
    layout: TokenLayout,
    embedding: Embedding,
    encoder: LstmCell,
    decoder: LstmCell,
    output_proj: Linear,
    predictor: Vec<Linear>,
    adam: AdamState,
    trained: bool,
}

pub(crate) struct BatchStats {
    pub mse: f64,
    pub ce: f64,
    pub token_hits: usize,
    pub token_total: usize,
}

impl ControllerModel {
    pub fn new(
        config: ControllerConfig,
        space: SearchSpaceSpec,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        config.validate()?;
        let h = config.hidden_size;
        let a = alphabet_size(&space);
        let layout = TokenLayout::for_spec(&space);
        let embedding = Embedding::new(a, h, INIT_SCALE, rng);
        let encoder = LstmCell::new(h, h, INIT_SCALE, rng);
        let decoder = LstmCell::new(2 * h, h, INIT_SCALE, rng);
        let output_proj = Linear::new(h, a, INIT_SCALE, rng);
        let mut predictor = Vec::with_capacity(config.predictor_widths.len());
        let mut input = h;
        for &w in &config.predictor_widths {
            predictor.push(Linear::new(input, w, INIT_SCALE, rng));
            input = w;
        }
        let adam = AdamState::new(config.learning_rate);
        Ok(ControllerModel {
            config,
            space,
            layout,
            embedding,
            encoder,
            decoder,
            output_proj,
            predictor,
            adam,
            trained: false,
        })
    }

    /// Fresh parameters and optimizer state, same configuration.
    pub fn reinit(&mut self, rng: &mut ChaCha8Rng) {
        *self = ControllerModel::new(self.config.clone(), self.space.clone(), rng)
            .expect("config was already validated");
    }

    pub fn config(&self) -> &ControllerConfig {
        &self.config
    }

    pub fn space(&self) -> &SearchSpaceSpec {
        &self.space
    }

    pub fn layout(&self) -> &TokenLayout {
        &self.layout
    }

    pub fn hidden_size(&self) -> usize {
        self.config.hidden_size
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub(crate) fn mark_trained(&mut self) {
        self.trained = true;
    }

    // ---- joint training pass ------------------------------------------

    /// Forward + backward over one minibatch: accumulates parameter
    /// gradients for the mixture lambda * regression + (1-lambda) *
    /// reconstruction. `dropout_rng` of None (or rate 0) disables noise.
    pub(crate) fn joint_backward(
        &mut self,
        seqs: &[&[usize]],
        accuracies: &[f64],
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<BatchStats> {
        let b = seqs.len();
        if b == 0 || accuracies.len() != b {
            return Err(Error::Usage("empty or mismatched training batch".into()));
        }
        let l = self.layout.len;
        let h = self.config.hidden_size;
        let lambda = self.config.loss_weight_lambda;
        let rate = self.config.dropout_rate;
        let pad = Token::Pad.id();

        let ids_pm: Vec<Vec<usize>> = (0..l)
            .map(|t| seqs.iter().map(|s| s[t]).collect())
            .collect();

        // encoder forward
        let zero_state = Tensor2::zeros(b, h);
        let mut enc_x: Vec<Tensor2> = Vec::with_capacity(l);
        let mut enc_steps: Vec<LstmStep> = Vec::with_capacity(l);
        for t in 0..l {
            let x = self.embedding.forward(&ids_pm[t])?;
            let step = {
                let (hp, cp) = if t == 0 {
                    (&zero_state, &zero_state)
                } else {
                    (&enc_steps[t - 1].h, &enc_steps[t - 1].c)
                };
                self.encoder.step(&x, hp, cp)?
            };
            enc_x.push(x);
            enc_steps.push(step);
        }

        // mean pool over non-PAD positions
        let mut counts = vec![0.0f64; b];
        let mut e = Tensor2::zeros(b, h);
        for t in 0..l {
            for bi in 0..b {
                if seqs[bi][t] != pad {
                    counts[bi] += 1.0;
                    let src = enc_steps[t].h.row(bi);
                    for (d, s) in e.row_mut(bi).iter_mut().zip(src) {
                        *d += s;
                    }
                }
            }
        }
        for bi in 0..b {
            let c = counts[bi];
            for v in e.row_mut(bi) {
                *v /= c;
            }
        }

        let mut sample_mask = |len: usize| match dropout_rng.as_deref_mut() {
            Some(r) if rate > 0.0 => DropoutMask::sample(len, rate, r),
            _ => DropoutMask::identity(len),
        };

        let e_mask = sample_mask(b * h);
        let mut e_drop = e.clone();
        e_mask.apply(&mut e_drop);

        // predictor forward
        let depth = self.predictor.len();
        let mut zs: Vec<Tensor2> = Vec::with_capacity(depth);
        let mut tanhs: Vec<Tensor2> = Vec::with_capacity(depth - 1);
        let mut acts: Vec<Tensor2> = Vec::with_capacity(depth - 1);
        let mut masks: Vec<DropoutMask> = Vec::with_capacity(depth - 1);
        for i in 0..depth {
            let input = if i == 0 { &e_drop } else { &acts[i - 1] };
            let z = self.predictor[i].forward(input)?;
            zs.push(z);
            if i < depth - 1 {
                let mut t = zs[i].clone();
                for v in t.values_mut() {
                    *v = v.tanh();
                }
                let mask = sample_mask(t.len());
                let mut a = t.clone();
                mask.apply(&mut a);
                tanhs.push(t);
                acts.push(a);
                masks.push(mask);
            }
        }
        let logit = zs.last_mut().expect("predictor has at least one layer");
        let mut preds = logit.clone();
        for v in preds.values_mut() {
            *v = sigmoid(*v);
        }
        let mse = mse_loss(&mut preds, accuracies);
        for bi in 0..b {
            let p = preds.at(bi, 0);
            logit.grad_mut()[bi] += preds.grad()[bi] * lambda * p * (1.0 - p);
        }

        // decoder forward, teacher forced
        let norm = (b * (l - 1)) as f64;
        let recon_w = 1.0 - lambda;
        let mut dec_emb: Vec<Tensor2> = Vec::with_capacity(l - 1);
        let mut dec_x: Vec<Tensor2> = Vec::with_capacity(l - 1);
        let mut dec_steps: Vec<LstmStep> = Vec::with_capacity(l - 1);
        let mut dec_logits: Vec<Tensor2> = Vec::with_capacity(l - 1);
        let mut ce = 0.0;
        let mut hits = 0usize;
        for t in 0..l - 1 {
            let emb = self.embedding.forward(&ids_pm[t])?;
            let x = concat_cols(&emb, &e_drop);
            let step = {
                let (hp, cp) = if t == 0 {
                    (&e_drop, &zero_state)
                } else {
                    (&dec_steps[t - 1].h, &dec_steps[t - 1].c)
                };
                self.decoder.step(&x, hp, cp)?
            };
            let mut lg = self.output_proj.forward(&step.h)?;
            let (lt, correct) = softmax_ce_loss(&mut lg, &ids_pm[t + 1], norm);
            for g in lg.grad_mut() {
                *g *= recon_w;
            }
            ce += lt;
            hits += correct;
            dec_emb.push(emb);
            dec_x.push(x);
            dec_steps.push(step);
            dec_logits.push(lg);
        }

        // ---- backward ----

        // output projection into decoder hidden grads
        for t in 0..l - 1 {
            self.output_proj.backward(&mut dec_steps[t].h, &dec_logits[t]);
        }
        // decoder BPTT; the conditioning embedding collects gradient from
        // the initial hidden state and from every concat input
        let mut dec_c0 = zero_state.clone();
        for t in (0..l - 1).rev() {
            let (before, after) = dec_steps.split_at_mut(t);
            let step = &after[0];
            if t == 0 {
                self.decoder
                    .step_backward(&mut dec_x[t], &mut e_drop, &mut dec_c0, step);
            } else {
                let prev = &mut before[t - 1];
                self.decoder
                    .step_backward(&mut dec_x[t], &mut prev.h, &mut prev.c, step);
            }
            let xg = dec_x[t].grad();
            for bi in 0..b {
                for j in 0..h {
                    dec_emb[t].grad_mut()[bi * h + j] += xg[bi * 2 * h + j];
                }
            }
            let xg = dec_x[t].grad().to_vec();
            for bi in 0..b {
                for j in 0..h {
                    e_drop.grad_mut()[bi * h + j] += xg[bi * 2 * h + h + j];
                }
            }
            self.embedding.backward(&ids_pm[t], &dec_emb[t]);
        }

        // predictor backward
        for i in (0..depth).rev() {
            if i < depth - 1 {
                masks[i].backward(&mut acts[i]);
                let n = zs[i].len();
                for k in 0..n {
                    let tv = tanhs[i].at(k / tanhs[i].cols(), k % tanhs[i].cols());
                    zs[i].grad_mut()[k] += acts[i].grad()[k] * (1.0 - tv * tv);
                }
            }
            if i == 0 {
                self.predictor[0].backward(&mut e_drop, &zs[0]);
            } else {
                let (lo, hi) = acts.split_at_mut(i);
                let _ = hi;
                self.predictor[i].backward(&mut lo[i - 1], &zs[i]);
            }
        }

        // embedding dropout backward, then mean-pool backward
        e_mask.backward(&mut e_drop);
        for t in 0..l {
            for bi in 0..b {
                if seqs[bi][t] != pad {
                    let c = counts[bi];
                    for j in 0..h {
                        let g = e_drop.grad()[bi * h + j] / c;
                        enc_steps[t].h.grad_mut()[bi * h + j] += g;
                    }
                }
            }
        }

        // encoder BPTT
        let mut enc_h0 = Tensor2::zeros(b, h);
        let mut enc_c0 = Tensor2::zeros(b, h);
        for t in (0..l).rev() {
            let (before, after) = enc_steps.split_at_mut(t);
            let step = &after[0];
            if t == 0 {
                self.encoder
                    .step_backward(&mut enc_x[t], &mut enc_h0, &mut enc_c0, step);
            } else {
                let prev = &mut before[t - 1];
                self.encoder
                    .step_backward(&mut enc_x[t], &mut prev.h, &mut prev.c, step);
            }
            self.embedding.backward(&ids_pm[t], &enc_x[t]);
        }

        Ok(BatchStats {
            mse,
            ce,
            token_hits: hits,
            token_total: b * (l - 1),
        })
    }

    /// One optimizer step over a minibatch: zero grads, joint backward,
    /// clip, Adam. Returns (regression mse, reconstruction ce).
    pub(crate) fn train_step(
        &mut self,
        seqs: &[&[usize]],
        accuracies: &[f64],
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, f64)> {
        self.zero_grad();
        let stats = self.joint_backward(seqs, accuracies, dropout_rng)?;
        if !stats.mse.is_finite() || !stats.ce.is_finite() {
            return Err(Error::NonFinite("training loss".into()));
        }
        let mut adam = std::mem::replace(&mut self.adam, AdamState::new(0.0));
        let mut params = self.named_params_mut();
        clip_global_norm(&mut params, GRAD_CLIP);
        let result = adam.update(&mut params);
        self.adam = adam;
        result?;
        Ok((stats.mse, stats.ce))
    }

    /// Joint mixture loss with gradients populated; used by the
    /// finite-difference checks (dropout off so the function is smooth).
    pub fn joint_loss_for_check(&mut self, seqs: &[&[usize]], accuracies: &[f64]) -> Result<f64> {
        self.zero_grad();
        let stats = self.joint_backward(seqs, accuracies, None)?;
        let lambda = self.config.loss_weight_lambda;
        Ok(lambda * stats.mse + (1.0 - lambda) * stats.ce)
    }

    // ---- inference paths ------------------------------------------------

    /// Encoder pool without dropout: one embedding row per sequence.
    fn encoder_pool(&self, seqs: &[&[usize]]) -> Result<Tensor2> {
        let b = seqs.len();
        let l = self.layout.len;
        let h = self.config.hidden_size;
        let pad = Token::Pad.id();
        let zero_state = Tensor2::zeros(b, h);
        let mut prev: Option<LstmStep> = None;
        let mut e = Tensor2::zeros(b, h);
        let mut counts = vec![0.0f64; b];
        for t in 0..l {
            let ids: Vec<usize> = seqs.iter().map(|s| s[t]).collect();
            let x = self.embedding.forward(&ids)?;
            let step = {
                let (hp, cp) = match &prev {
                    None => (&zero_state, &zero_state),
                    Some(p) => (&p.h, &p.c),
                };
                self.encoder.step(&x, hp, cp)?
            };
            for bi in 0..b {
                if seqs[bi][t] != pad {
                    counts[bi] += 1.0;
                    for (d, s) in e.row_mut(bi).iter_mut().zip(step.h.row(bi)) {
                        *d += s;
                    }
                }
            }
            prev = Some(step);
        }
        for bi in 0..b {
            let c = counts[bi];
            for v in e.row_mut(bi) {
                *v /= c;
            }
        }
        Ok(e)
    }

    /// Deterministic sequence embedding (dropout off): the mean of the
    /// encoder hidden states over non-PAD positions.
    pub fn encode(&self, t: &TokenSequence) -> Result<Vec<f64>> {
        if t.len() != self.layout.len {
            return Err(Error::Usage(format!(
                "sequence length {} does not match layout length {}",
                t.len(),
                self.layout.len
            )));
        }
        let ids = t.ids();
        for &id in &ids {
            if id >= self.embedding.vocab_size() {
                return Err(Error::UnknownToken {
                    id,
                    alphabet: self.embedding.vocab_size(),
                });
            }
        }
        let e = self.encoder_pool(&[&ids])?;
        Ok(e.row(0).to_vec())
    }

    /// Batched [`Self::encode`].
    pub fn encode_batch(&self, seqs: &[Vec<usize>]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(seqs.len());
        for chunk in seqs.chunks(256) {
            let refs: Vec<&[usize]> = chunk.iter().map(|s| s.as_slice()).collect();
            let e = self.encoder_pool(&refs)?;
            for bi in 0..chunk.len() {
                out.push(e.row(bi).to_vec());
            }
        }
        Ok(out)
    }

    /// Predicted accuracy in (0,1) for an embedding.
    pub fn predict_from_embedding(&self, e: &[f64]) -> Result<f64> {
        Ok(self.predictor_forward(e)?.0)
    }

    fn predictor_forward(&self, e: &[f64]) -> Result<(f64, Vec<Vec<f64>>)> {
        if e.len() != self.config.hidden_size {
            return Err(Error::Dimension {
                op: "predict",
                left: format!("embedding len {}", e.len()),
                right: format!("hidden size {}", self.config.hidden_size),
            });
        }
        let depth = self.predictor.len();
        let mut zs: Vec<Vec<f64>> = Vec::with_capacity(depth);
        let mut cur = e.to_vec();
        for (i, layer) in self.predictor.iter().enumerate() {
            let input = Tensor2::from_values(1, cur.len(), cur)?;
            let z = layer.forward(&input)?;
            let zv = z.values().to_vec();
            zs.push(zv.clone());
            cur = if i < depth - 1 {
                zv.iter().map(|v| v.tanh()).collect()
            } else {
                zv
            };
        }
        let logit = cur[0];
        Ok((sigmoid(logit), zs))
    }

    /// Predicted accuracy and its gradient with respect to the embedding.
    /// Touches no parameter gradients.
    pub fn embedding_gradient(&self, e: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (p, zs) = self.predictor_forward(e)?;
        let depth = self.predictor.len();
        // d p / d logit
        let mut dz = vec![p * (1.0 - p)];
        for i in (0..depth).rev() {
            let layer = &self.predictor[i];
            let w = &layer.weight;
            let mut dinput = vec![0.0; w.rows()];
            for (k, d) in dinput.iter_mut().enumerate() {
                let wrow = w.row(k);
                *d = dz.iter().zip(wrow).map(|(g, wv)| g * wv).sum();
            }
            if i > 0 {
                let z_prev = &zs[i - 1];
                dz = dinput
                    .iter()
                    .zip(z_prev)
                    .map(|(d, z)| d * (1.0 - z.tanh() * z.tanh()))
                    .collect();
            } else {
                dz = dinput;
            }
        }
        if dz.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("embedding gradient".into()));
        }
        Ok((p, dz))
    }

    /// Greedy argmax decoding with layout masking: every position only
    /// admits tokens legal for its kind, the edge budget caps ones, and
    /// op slots are PAD exactly when no emitted edge touches them. The
    /// output always parses via `decode_tokens`.
    pub fn decode_greedy(&self, e: &[f64]) -> Result<TokenSequence> {
        if e.len() != self.config.hidden_size {
            return Err(Error::Dimension {
                op: "decode",
                left: format!("embedding len {}", e.len()),
                right: format!("hidden size {}", self.config.hidden_size),
            });
        }
        let l = self.layout.len;
        let h = self.config.hidden_size;
        let s = self.space.max_nodes;
        let n_ops = self.space.ops.len();
        let e_t = Tensor2::from_values(1, h, e.to_vec())?;
        let mut h_state = e_t.clone();
        let mut c_state = Tensor2::zeros(1, h);
        let mut incident = vec![false; s];
        let mut edges_used = 0usize;
        let mut out = vec![Token::Sos];
        let mut prev_id = Token::Sos.id();
        for pos in 1..l {
            let emb = self.embedding.forward(&[prev_id])?;
            let x = concat_cols(&emb, &e_t);
            let step = self.decoder.step(&x, &h_state, &c_state)?;
            let logits = self.output_proj.forward(&step.h)?;
            h_state = step.h;
            c_state = step.c;
            let allowed: Vec<Token> = match self.layout.pos_kind(pos) {
                PosKind::Bit(_) if edges_used >= self.space.max_edges => {
                    vec![Token::Bit(false)]
                }
                PosKind::Bit(_) => vec![Token::Bit(false), Token::Bit(true)],
                PosKind::OpSlot(slot) => {
                    if incident[slot] {
                        (0..n_ops as u8).map(Token::Op).collect()
                    } else {
                        vec![Token::Pad]
                    }
                }
                PosKind::Eos => vec![Token::Eos],
                PosKind::Sos => unreachable!("position 0 is handled before the loop"),
            };
            let mut best = allowed[0];
            let mut best_score = f64::NEG_INFINITY;
            for &tok in &allowed {
                let score = logits.at(0, tok.id());
                if score > best_score {
                    best_score = score;
                    best = tok;
                }
            }
            if let (PosKind::Bit(bidx), Token::Bit(true)) = (self.layout.pos_kind(pos), best) {
                let (a, bsl) = self.layout.bit_pair(bidx);
                incident[a] = true;
                incident[bsl] = true;
                edges_used += 1;
            }
            out.push(best);
            prev_id = best.id();
        }
        Ok(TokenSequence(out))
    }

    /// Teacher-forced next-token accuracy over a corpus (dropout off).
    pub fn teacher_forced_accuracy(&self, seqs: &[Vec<usize>]) -> Result<f64> {
        if seqs.is_empty() {
            return Err(Error::Usage("empty evaluation corpus".into()));
        }
        let l = self.layout.len;
        let h = self.config.hidden_size;
        let mut hits = 0usize;
        let mut total = 0usize;
        for chunk in seqs.chunks(256) {
            let refs: Vec<&[usize]> = chunk.iter().map(|s| s.as_slice()).collect();
            let e = self.encoder_pool(&refs)?;
            let b = chunk.len();
            let mut h_state = e.clone();
            let mut c_state = Tensor2::zeros(b, h);
            for t in 0..l - 1 {
                let ids: Vec<usize> = refs.iter().map(|s| s[t]).collect();
                let emb = self.embedding.forward(&ids)?;
                let x = concat_cols(&emb, &e);
                let step = self.decoder.step(&x, &h_state, &c_state)?;
                let logits = self.output_proj.forward(&step.h)?;
                for bi in 0..b {
                    let row = logits.row(bi);
                    let mut argmax = 0;
                    let mut best = f64::NEG_INFINITY;
                    for (j, &v) in row.iter().enumerate() {
                        if v > best {
                            best = v;
                            argmax = j;
                        }
                    }
                    if argmax == refs[bi][t + 1] {
                        hits += 1;
                    }
                    total += 1;
                }
                h_state = step.h;
                c_state = step.c;
            }
        }
        Ok(hits as f64 / total as f64)
    }

    // ---- checkpointing ---------------------------------------------------

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = Checkpoint {
            version: CHECKPOINT_VERSION,
            config: self.config.clone(),
            space: self.space.clone(),
            embedding: self.embedding.clone(),
            encoder: self.encoder.clone(),
            decoder: self.decoder.clone(),
            output_proj: self.output_proj.clone(),
            predictor: self.predictor.clone(),
            adam: self.adam.clone(),
            trained: self.trained,
        };
        std::fs::write(path, serde_json::to_string(&file)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<ControllerModel> {
        let text = std::fs::read_to_string(path)?;
        let file: Checkpoint = serde_json::from_str(&text)?;
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Usage(format!(
                "unsupported checkpoint version {}",
                file.version
            )));
        }
        let layout = TokenLayout::for_spec(&file.space);
        let mut model = ControllerModel {
            config: file.config,
            space: file.space,
            layout,
            embedding: file.embedding,
            encoder: file.encoder,
            decoder: file.decoder,
            output_proj: file.output_proj,
            predictor: file.predictor,
            adam: file.adam,
            trained: file.trained,
        };
        for (_, t) in model.named_params_mut() {
            t.ensure_grad();
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    config: ControllerConfig,
    space: SearchSpaceSpec,
    embedding: Embedding,
    encoder: LstmCell,
    decoder: LstmCell,
    output_proj: Linear,
    predictor: Vec<Linear>,
    adam: AdamState,
    trained: bool,
}

impl Parameterized for ControllerModel {
    fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor2)> {
        let mut params: Vec<(String, &mut Tensor2)> = vec![
            ("embedding.table".into(), &mut self.embedding.table),
            ("encoder.w_x".into(), &mut self.encoder.w_x),
            ("encoder.w_h".into(), &mut self.encoder.w_h),
            ("encoder.b".into(), &mut self.encoder.b),
            ("decoder.w_x".into(), &mut self.decoder.w_x),
            ("decoder.w_h".into(), &mut self.decoder.w_h),
            ("decoder.b".into(), &mut self.decoder.b),
            ("output_proj.weight".into(), &mut self.output_proj.weight),
            ("output_proj.bias".into(), &mut self.output_proj.bias),
        ];
        for (i, layer) in self.predictor.iter_mut().enumerate() {
            params.push((format!("predictor.{i}.weight"), &mut layer.weight));
            params.push((format!("predictor.{i}.bias"), &mut layer.bias));
        }
        params
    }
}

fn concat_cols(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    debug_assert_eq!(a.rows(), b.rows());
    let rows = a.rows();
    let (ca, cb) = (a.cols(), b.cols());
    let mut out = Tensor2::zeros(rows, ca + cb);
    for i in 0..rows {
        out.row_mut(i)[..ca].copy_from_slice(a.row(i));
        out.row_mut(i)[ca..].copy_from_slice(b.row(i));
    }
    out
}
