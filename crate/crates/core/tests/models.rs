mod common;

use common::{noise_tensor, random_tensor, separable_tensor};
use seqrisk::features::{aggregate_slices, flatten_for_tabular, SliceTensor};
use seqrisk::metrics::micro_auc;
use seqrisk::models::{
    fit_forest_sweep, fit_model, predict_network, BatchObjective, CnnClassifier, EmbMlp, EmbedConfig,
    LstmClassifier, Model, ModelConfig, ModelKind, Network, RandomForest, TabularNet, TrainConfig,
};
use seqrisk::numcore::{grad_check, softmax, Matrix, RngStream};

fn check<N: Network>(net: N, x: &SliceTensor, limit: f64) -> f64 {
    let rows: Vec<usize> = (0..x.n).collect();
    let params = net.param_count();
    assert!(params <= 200, "{params} parameters");
    let mut obj = BatchObjective { net, x, rows };
    let report = grad_check(&mut obj, 1e-5).unwrap();
    assert!(
        report.max_rel_error < limit,
        "{} [{}] rel err {:e}",
        report.worst_param,
        report.worst_index,
        report.max_rel_error
    );
    report.max_rel_error
}

#[test]
fn gradients_logistic_regression() {
    let x = random_tensor(6, 2, 3, 1);
    let net = TabularNet::logistic(x.tabular_width(), &mut RngStream::new(1, 1));
    check(net, &x, 1e-5);
}

#[test]
fn gradients_mlp() {
    let x = random_tensor(6, 2, 3, 2);
    let net = TabularNet::mlp(x.tabular_width(), &[4, 3], &[0.15, 0.10], &mut RngStream::new(2, 1));
    check(net, &x, 1e-4);
}

#[test]
fn gradients_lstm() {
    let x = random_tensor(5, 2, 3, 3);
    let cfg = EmbedConfig::new(2, 3, 2, 2).unwrap();
    let mut net = LstmClassifier::new(cfg, 0.2, &mut RngStream::new(3, 1));
    // larger embeddings so their gradients are well above the noise floor
    for v in net.input.emb.value.data_mut() {
        *v *= 10.0;
    }
    check(net, &x, 1e-5);
}

#[test]
fn gradients_embedding_mlp() {
    let x = random_tensor(5, 2, 3, 4);
    let cfg = EmbedConfig::new(2, 3, 2, 2).unwrap();
    let mut net = EmbMlp::new(cfg, 3, 0.2, &mut RngStream::new(4, 1));
    // keep every hidden unit away from the relu kink at zero
    for (_, b) in &mut net.stack.hidden {
        b.value.fill(0.5);
    }
    check(net, &x, 1e-4);
}

#[test]
fn gradients_cnn() {
    let x = random_tensor(4, 2, 4, 5);
    let net = CnnClassifier::new(4, 2, 2, &[2, 3], 2, &mut RngStream::new(5, 1)).unwrap();
    check(net, &x, 1e-4);
}

#[test]
fn zero_lstm_predicts_one_half() {
    let x = random_tensor(7, 2, 3, 6);
    let net = LstmClassifier::zeros(EmbedConfig::new(3, 3, 4, 2).unwrap());
    let h = net.hidden_states(&x, &[0, 1, 2]).unwrap();
    assert!(h.data().iter().all(|&v| v == 0.0));
    for p in predict_network(&net, &x).unwrap() {
        assert_eq!(p, [0.5, 0.5]);
    }
}

#[test]
fn predictions_do_not_depend_on_batching() {
    let x = random_tensor(21, 2, 3, 7);
    let net = LstmClassifier::new(EmbedConfig::new(3, 3, 4, 2).unwrap(), 0.2, &mut RngStream::new(7, 1));
    let rows: Vec<usize> = (0..21).collect();
    let whole = softmax(&net.logits(&x, &rows).unwrap());
    let parts: Vec<Matrix> = rows.chunks(3).map(|c| softmax(&net.logits(&x, c).unwrap())).collect();
    assert_eq!(whole, Matrix::vcat(&parts).unwrap());
    for r in 0..21 {
        assert!((whole.get(r, 0) + whole.get(r, 1) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn lstm_invariant_to_concept_permutation() {
    let (v, d) = (4, 3);
    let x = random_tensor(9, 2, v, 8);
    let net = LstmClassifier::new(EmbedConfig::new(d, v, 3, 2).unwrap(), 0.0, &mut RngStream::new(8, 1));
    let perm = [2, 0, 3, 1];
    let xp = x.select_concepts(&perm);
    let mut np = net.clone();
    for (new, &old) in perm.iter().enumerate() {
        np.input.emb.value.row_mut(new).copy_from_slice(net.input.emb.value.row(old));
        for k in 0..d {
            let (src, dst) = (12 + old * d + k, 12 + new * d + k);
            np.lstm.w.value.row_mut(dst).copy_from_slice(net.lstm.w.value.row(src));
        }
    }
    let rows: Vec<usize> = (0..9).collect();
    let a = net.logits(&x, &rows).unwrap();
    let b = np.logits(&xp, &rows).unwrap();
    assert!(a.max_abs_diff(&b) < 1e-12);
}

#[test]
fn single_slice_sliced_equals_aggregated() {
    let x = random_tensor(5, 1, 3, 9);
    let net = LstmClassifier::new(EmbedConfig::new(2, 3, 2, 1).unwrap(), 0.2, &mut RngStream::new(9, 1));
    let a = aggregate_slices(&x);
    assert_eq!(predict_network(&net, &x).unwrap(), predict_network(&net, &a).unwrap());
}

fn train_auc(kind: ModelKind, x: &SliceTensor, cfg: &ModelConfig, tc: &TrainConfig) -> f64 {
    let m = fit_model(kind, x, x, cfg, tc).unwrap();
    micro_auc(&m.predict_proba(x).unwrap(), &x.labels).unwrap()
}

#[test]
fn separable_toy_is_learned() {
    let x = separable_tensor(400, 2, 10, 10);
    let cfg = ModelConfig {
        emb_dim: 3,
        hidden: 8,
        ..ModelConfig::default()
    };
    let tc = TrainConfig {
        batch_size: 32,
        learning_rate: 1e-2,
        max_epochs: 100,
        seed: 1,
        patience: Some(10),
    };
    assert!(train_auc(ModelKind::Lr, &x, &cfg, &tc) >= 0.99);
    assert!(train_auc(ModelKind::Lstm, &x, &cfg, &tc) >= 0.99);
}

#[test]
fn random_labels_give_chance_auroc() {
    let train = noise_tensor(2000, 2, 10, 11);
    let val = noise_tensor(500, 2, 10, 12);
    let test = noise_tensor(2000, 2, 10, 13);
    let tc = TrainConfig {
        batch_size: 64,
        max_epochs: 10,
        ..TrainConfig::default()
    };
    let m = fit_model(ModelKind::Lr, &train, &val, &ModelConfig::default(), &tc).unwrap();
    let auc = micro_auc(&m.predict_proba(&test).unwrap(), &test.labels).unwrap();
    assert!((0.45..=0.55).contains(&auc), "{auc}");
}

#[test]
fn first_epoch_reduces_loss() {
    let x = separable_tensor(300, 2, 6, 14);
    let cfg = ModelConfig {
        emb_dim: 3,
        hidden: 6,
        ..ModelConfig::default()
    };
    let tc = TrainConfig {
        batch_size: 32,
        max_epochs: 1,
        ..TrainConfig::default()
    };
    for kind in [ModelKind::Lr, ModelKind::Lstm, ModelKind::EmbMlp] {
        let m = fit_model(kind, &x, &x, &cfg, &tc).unwrap();
        let trace = m.trace.unwrap();
        assert!(trace.epochs[0].train_loss < trace.initial_loss, "{kind}");
    }
}

#[test]
fn selection_returns_earliest_best_epoch() {
    let x = separable_tensor(200, 2, 5, 15);
    let val = noise_tensor(100, 2, 5, 16);
    let tc = TrainConfig {
        batch_size: 32,
        max_epochs: 8,
        ..TrainConfig::default()
    };
    let m = fit_model(ModelKind::Lr, &x, &val, &ModelConfig::default(), &tc).unwrap();
    let trace = m.trace.as_ref().unwrap();
    let scores: Vec<f64> = trace.epochs.iter().map(|e| e.val_micro_auroc.unwrap()).collect();
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let first = scores.iter().position(|&s| s == max).unwrap() + 1;
    assert_eq!(trace.best_epoch, first);
    let got = micro_auc(&m.predict_proba(&val).unwrap(), &val.labels).unwrap();
    assert_eq!(got, max);
}

#[test]
fn training_is_deterministic() {
    let x = separable_tensor(120, 2, 4, 17);
    let cfg = ModelConfig {
        emb_dim: 2,
        hidden: 3,
        ..ModelConfig::default()
    };
    let tc = TrainConfig {
        batch_size: 16,
        max_epochs: 3,
        ..TrainConfig::default()
    };
    let a = fit_model(ModelKind::Lstm, &x, &x, &cfg, &tc).unwrap();
    let b = fit_model(ModelKind::Lstm, &x, &x, &cfg, &tc).unwrap();
    assert_eq!(a.predict_proba(&x).unwrap(), b.predict_proba(&x).unwrap());
}

#[test]
fn mismatched_input_is_rejected() {
    let x = random_tensor(10, 2, 3, 18);
    let cfg = ModelConfig {
        emb_dim: 2,
        hidden: 2,
        ..ModelConfig::default()
    };
    let tc = TrainConfig {
        max_epochs: 1,
        ..TrainConfig::default()
    };
    let m = fit_model(ModelKind::Lstm, &x, &x, &cfg, &tc).unwrap();
    assert!(m.predict_proba(&random_tensor(4, 2, 4, 1)).is_err());
    assert!(m.predict_proba(&aggregate_slices(&x)).is_err());
}

#[test]
fn forest_xor_and_tree_removal() {
    let x = Matrix::from_rows(&[&[0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]]);
    let y = [0u8, 1, 1, 0];
    let f = RandomForest::fit(&x, &y, 20, 3).unwrap();
    let p = f.predict_proba(&x).unwrap();
    assert!(p.iter().all(|r| (r[0] + r[1] - 1.0).abs() < 1e-12));
    let fewer = f.truncated(19).predict_proba(&x).unwrap();
    for (a, b) in p.iter().zip(&fewer) {
        assert!((a[1] - b[1]).abs() <= 1.0 / 20.0 + 1e-15);
    }
}

#[test]
fn forest_sweep_picks_validation_argmax() {
    let train = separable_tensor(200, 1, 6, 19);
    let val = noise_tensor(80, 1, 6, 20);
    let (tx, vx) = (flatten_for_tabular(&train), flatten_for_tabular(&val));
    let grid = [3, 7, 15, 30];
    let (forest, sweep) = fit_forest_sweep(&tx, &train.labels, &vx, &val.labels, &grid, 5).unwrap();
    let best = sweep
        .iter()
        .fold(None::<&seqrisk::models::SweepPoint>, |b, p| match b {
            Some(q) if q.validation_micro_auroc >= p.validation_micro_auroc => Some(q),
            _ => Some(p),
        })
        .unwrap();
    assert_eq!(forest.len(), best.n_estimators);
    for p in &sweep {
        let full = RandomForest::fit(&tx, &train.labels, p.n_estimators, 5).unwrap();
        let auc = micro_auc(&full.predict_proba(&vx).unwrap(), &val.labels).unwrap();
        assert_eq!(auc, p.validation_micro_auroc);
    }
}

#[test]
fn model_kinds_fit_end_to_end() {
    let x = separable_tensor(60, 2, 6, 21);
    let cfg = ModelConfig {
        emb_dim: 2,
        hidden: 3,
        mlp_hidden: [8, 8],
        emb_mlp_hidden: 4,
        cnn_widths: vec![2, 4],
        cnn_channels: 2,
        rf_grid: vec![5, 10],
        ..ModelConfig::default()
    };
    let tc = TrainConfig {
        batch_size: 16,
        max_epochs: 2,
        ..TrainConfig::default()
    };
    for kind in ModelKind::ALL {
        let m = fit_model(kind, &x, &x, &cfg, &tc).unwrap();
        assert_eq!(m.kind(), kind);
        let p = m.predict_proba(&x).unwrap();
        assert_eq!(p.len(), 60);
        assert!(matches!(
            (&m.model, kind.is_neural()),
            (Model::Rf(_), false) | (_, true)
        ));
    }
}
