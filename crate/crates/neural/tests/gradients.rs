use cnml_neural::train::gradients;
use cnml_neural::{CnmlModel, EncoderConfig, EncoderKind, Mat, ModelConfig, Vocab};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn tiny_model(seed: u64, kind: EncoderKind) -> CnmlModel {
    let words: Vec<String> = (0..5).map(|k| format!("w{k}x")).collect();
    let vocab = Vocab::build(words.iter().map(String::as_str), None);
    assert_eq!(vocab.len(), 20);
    let encoder = EncoderConfig { kind, d_model: 8, layers: 1, heads: 2, d_ff: 12, max_len: 6, d_proj: 8 };
    let config = ModelConfig { encoder, siamese: false, vocab_max: None };
    CnmlModel::init(&config, vocab, 0.07, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
}

fn batch(n: usize, seed: u64) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let seq = |rng: &mut ChaCha8Rng| (0..rng.gen_range(2..=6)).map(|_| rng.gen_range(2..20)).collect();
    (0..n).map(|_| (seq(&mut rng), seq(&mut rng))).collect()
}

fn refs(b: &[(Vec<usize>, Vec<usize>)]) -> Vec<(&[usize], &[usize])> {
    b.iter().map(|(s, c)| (s.as_slice(), c.as_slice())).collect()
}

fn anchors(model: &CnmlModel, b: &[(&[usize], &[usize])]) -> [Mat; 2] {
    cnml_neural::train::anchor_cosines(model, b)
}

/// Central differences on every scalar parameter, compared per tensor by
/// relative norm of the difference.
fn fd_check(kind: EncoderKind, learnable_tau: bool) {
    let model = tiny_model(1, kind);
    let anchor_model = tiny_model(2, kind);
    let data = batch(4, 3);
    let b = refs(&data);
    let a = anchors(&anchor_model, &b);
    let lambda = 0.25;
    let g = gradients(&model, &b, Some(&a), lambda, learnable_tau);
    let h = 1e-5;
    let eval = |m: &CnmlModel| gradients(m, &b, Some(&a), lambda, learnable_tau).loss;
    for (e, enc) in model.encoders.iter().enumerate() {
        for (k, t) in enc.tensors.iter().enumerate() {
            let mut fd = Mat::zeros(t.rows, t.cols);
            for j in 0..t.len() {
                let mut plus = model.clone();
                plus.encoders[e].tensors[k].data[j] += h;
                let mut minus = model.clone();
                minus.encoders[e].tensors[k].data[j] -= h;
                fd.data[j] = (eval(&plus) - eval(&minus)) / (2.0 * h);
            }
            let an = &g.params[e][k];
            let diff: f64 = an.data.iter().zip(&fd.data).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
            let scale = an.norm().max(fd.norm());
            let rel = if scale == 0.0 { 0.0 } else { diff / scale };
            assert!(rel <= 1e-5, "encoder {e} tensor {}: relative error {rel:e}", enc.names[k]);
        }
    }
    if learnable_tau {
        let mut plus = model.clone();
        plus.log_tau += h;
        let mut minus = model.clone();
        minus.log_tau -= h;
        let fd = (eval(&plus) - eval(&minus)) / (2.0 * h);
        assert!((fd - g.log_tau).abs() <= 1e-5 * fd.abs().max(g.log_tau.abs()), "{fd} vs {}", g.log_tau);
    }
}

#[test]
fn transformer_gradients_match_finite_differences() {
    fd_check(EncoderKind::Transformer, false);
}

#[test]
fn bag_and_temperature_gradients_match_finite_differences() {
    fd_check(EncoderKind::Bag, true);
}

#[test]
fn unused_parameters_get_zero_gradient() {
    let model = tiny_model(1, EncoderKind::Transformer);
    let data = batch(4, 3);
    let b = refs(&data);
    let g = gradients(&model, &b, None, 0.0, false);
    let used: std::collections::HashSet<usize> = data.iter().flat_map(|(s, _)| s.iter().copied()).collect();
    let spec_embed = &g.params[0][0];
    for id in 0..20 {
        let row = spec_embed.row(id);
        if !used.contains(&id) {
            assert!(row.iter().all(|&x| x == 0.0), "row {id} should be zero");
        }
    }
    // Positions past the longest sequence never participate.
    let pos = &g.params[0][model.encoders[0].index_of("pos").unwrap()];
    let longest = data.iter().map(|(s, _)| s.len()).max().unwrap();
    for r in longest..pos.rows {
        assert!(pos.row(r).iter().all(|&x| x == 0.0));
    }
}

#[test]
fn gradients_are_invariant_to_batch_order() {
    let model = tiny_model(4, EncoderKind::Transformer);
    let anchor_model = tiny_model(5, EncoderKind::Transformer);
    let data = batch(4, 6);
    let b = refs(&data);
    let perm = [2, 0, 3, 1];
    let pb: Vec<_> = perm.iter().map(|&k| b[k]).collect();
    let g1 = gradients(&model, &b, Some(&anchors(&anchor_model, &b)), 0.25, false);
    let g2 = gradients(&model, &pb, Some(&anchors(&anchor_model, &pb)), 0.25, false);
    assert!((g1.loss - g2.loss).abs() < 1e-12);
    for (e1, e2) in g1.params.iter().zip(&g2.params) {
        for (t1, t2) in e1.iter().zip(e2) {
            for (x, y) in t1.data.iter().zip(&t2.data) {
                assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()), "{x} vs {y}");
            }
        }
    }
}

#[test]
fn lambda_zero_is_plain_contrastive() {
    let model = tiny_model(7, EncoderKind::Transformer);
    let data = batch(4, 8);
    let b = refs(&data);
    let a = anchors(&tiny_model(9, EncoderKind::Transformer), &b);
    let g = gradients(&model, &b, Some(&a), 0.0, false);
    assert_eq!(g.loss, g.l_ce);
    let u = model.encoders[1].encode_many(&b.iter().map(|x| x.1).collect::<Vec<_>>());
    let v = model.encoders[0].encode_many(&b.iter().map(|x| x.0).collect::<Vec<_>>());
    let s = cnml_neural::similarity_matrix(&u, &v, 0.07);
    assert!((cnml_neural::contrastive_loss(&s) - g.l_ce).abs() < 1e-10);
    // The anchor is the model itself: the regularizer vanishes.
    let own = anchors(&model, &b);
    let g = gradients(&model, &b, Some(&own), 0.25, false);
    assert!(g.l_rr.abs() < 1e-24);
}
