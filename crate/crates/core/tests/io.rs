mod common;

use common::{random_tensor, separable_tensor};
use proptest::prelude::*;
use seqrisk::features::{encode_demographics_raw, SliceTensor};
use seqrisk::io::{decode_checkpoint, decode_tensor, encode_checkpoint, encode_tensor, KvConfig, MAGIC};
use seqrisk::models::{fit_model, ModelConfig, ModelKind, TrainConfig};

fn tiny() -> (ModelConfig, TrainConfig) {
    let cfg = ModelConfig {
        emb_dim: 3,
        hidden: 4,
        mlp_hidden: [6, 5],
        emb_mlp_hidden: 4,
        cnn_widths: vec![2, 3],
        cnn_channels: 2,
        rf_grid: vec![3, 6],
        ..ModelConfig::default()
    };
    let tc = TrainConfig {
        batch_size: 16,
        max_epochs: 3,
        seed: 9,
        ..TrainConfig::default()
    };
    (cfg, tc)
}

#[test]
fn checkpoints_round_trip_bit_exact_for_every_kind() {
    let x = separable_tensor(50, 2, 5, 4);
    let (cfg, tc) = tiny();
    for kind in ModelKind::ALL {
        let fitted = fit_model(kind, &x, &x, &cfg, &tc).unwrap();
        let bytes = encode_checkpoint(&fitted).unwrap();
        assert_eq!(&bytes[..4], MAGIC);
        let back = decode_checkpoint(&bytes).unwrap();
        assert_eq!(back.kind(), kind);
        let (p, q) = (fitted.predict_proba(&x).unwrap(), back.predict_proba(&x).unwrap());
        for (a, b) in p.iter().zip(&q) {
            assert_eq!(a[1].to_bits(), b[1].to_bits(), "{kind}");
        }
        assert!(encode_checkpoint(&back).unwrap() == bytes, "{kind}: re-encoding differs");
    }
}

#[test]
fn checkpoint_rejects_corruption() {
    let x = separable_tensor(30, 2, 4, 5);
    let (cfg, tc) = tiny();
    let bytes = encode_checkpoint(&fit_model(ModelKind::Lr, &x, &x, &cfg, &tc).unwrap()).unwrap();
    let mut v2 = bytes.clone();
    v2[4] = 2;
    assert!(decode_checkpoint(&v2).unwrap_err().to_string().contains("version"));
    assert!(decode_checkpoint(&bytes[..bytes.len() - 3]).is_err());
    let mut extra = bytes.clone();
    extra.push(0);
    assert!(decode_checkpoint(&extra).is_err());
    assert!(decode_checkpoint(b"NOPE").is_err());
}

#[test]
fn tensor_round_trip_and_schema_checks() {
    let mut x = random_tensor(7, 3, 4, 2);
    x.demographics[0] = encode_demographics_raw(1, 63.0, 9).unwrap();
    let bytes = encode_tensor(&x).unwrap();
    let y = decode_tensor(&bytes).unwrap();
    assert_eq!(y.counts, x.counts);
    assert_eq!(y.encounters, x.encounters);
    assert_eq!(y.demographics, x.demographics);
    assert_eq!(y.vocabulary, x.vocabulary);
    assert_eq!(encode_tensor(&y).unwrap(), bytes);
    let empty = SliceTensor::from_parts(2, 3, vec![], vec![], vec![]).unwrap();
    assert_eq!(decode_tensor(&encode_tensor(&empty).unwrap()).unwrap().n, 0);
    assert!(decode_tensor(&bytes[..bytes.len() - 8]).is_err());
}

#[test]
fn kv_rejects_unknown_keys_after_mapping() {
    let kv = KvConfig::parse("model.hidden = 4\nmodel.hiden = 5\n").unwrap();
    let m = seqrisk::commands::model_config(&kv).unwrap();
    assert_eq!(m.hidden, 4);
    assert!(kv.finish().unwrap_err().to_string().contains("model.hiden"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn tensor_files_round_trip(n in 0usize..6, t in 1usize..5, v in 1usize..5, seed in 0u64..1000) {
        let x = random_tensor(n, t, v, seed);
        let y = decode_tensor(&encode_tensor(&x).unwrap()).unwrap();
        prop_assert_eq!(&y.counts, &x.counts);
        prop_assert_eq!(&y.labels, &x.labels);
        prop_assert_eq!(&y.patient_ids, &x.patient_ids);
        prop_assert_eq!((y.n, y.t, y.v), (x.n, x.t, x.v));
    }
}
