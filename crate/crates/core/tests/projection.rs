mod common;

use common::clusters;
use seqrisk::experiments::{ActivationTable, Confusion};
use seqrisk::features::ObservationWindow;
use seqrisk::numcore::{Matrix, RngStream};
use seqrisk::projection::*;

fn pairwise(y: &Matrix) -> Vec<f64> {
    let n = y.rows();
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            out.push(y.row(i).iter().zip(y.row(j)).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
        }
    }
    out
}

#[test]
fn three_cluster_optimization_and_purity() {
    let (x, labels) = clusters(3, 34, 5, 11);
    let x = Matrix::from_vec(100, 5, x.data()[..500].to_vec()).unwrap();
    let labels = &labels[..100];
    let res = tsne(&x, &TsneConfig::default()).unwrap();
    assert!(res.kl_trace.iter().all(|v| v.is_finite()));
    assert!(res.final_kl() < 0.5 * res.initial_kl(), "{} vs {}", res.final_kl(), res.initial_kl());
    assert!(res.entropy_error.iter().all(|&e| e < 1e-4));

    let d = pairwise(&res.coords);
    let mut pure = 0;
    for i in 0..100 {
        let mut nn: Vec<usize> = (0..100).filter(|&j| j != i).collect();
        nn.sort_by(|&a, &b| d[i * 100 + a].total_cmp(&d[i * 100 + b]));
        pure += nn[..5].iter().filter(|&&j| labels[j] == labels[i]).count();
    }
    assert!(pure as f64 / 500.0 >= 0.9, "purity {}", pure as f64 / 500.0);
}

#[test]
fn entropy_matches_perplexity_by_direct_recomputation() {
    let (x, _) = clusters(2, 15, 4, 2);
    for perp in [2.5, 5.0, 9.0] {
        let aff = calibrate(&squared_distances(&x), perp);
        for i in 0..x.rows() {
            let row = aff.conditional.row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let h: f64 = -row.iter().filter(|&&p| p > 0.0).map(|p| p * p.log2()).sum::<f64>();
            assert!((h - perp.log2()).abs() < 1e-4, "row {i} perplexity {perp}: {h}");
        }
    }
}

#[test]
fn four_points_keep_cluster_mates() {
    let x = Matrix::from_rows(&[&[0.0, 0.0], &[0.1, 0.0], &[50.0, 50.0], &[50.1, 50.0]]);
    // 12x exaggeration over-contracts at N = 4; 4x is the original method's value
    let cfg = TsneConfig {
        perplexity: 1.2,
        exaggeration: 4.0,
        ..Default::default()
    };
    let res = tsne(&x, &cfg).unwrap();
    let d = pairwise(&res.coords);
    let nearest = |i: usize| (0..4).filter(|&j| j != i).min_by(|&a, &b| d[i * 4 + a].total_cmp(&d[i * 4 + b])).unwrap();
    assert_eq!([nearest(0), nearest(1), nearest(2), nearest(3)], [1, 0, 3, 2]);
}

#[test]
fn permutation_with_matched_init_preserves_distances() {
    let (x, _) = clusters(3, 10, 3, 4);
    let cfg = TsneConfig {
        perplexity: 5.0,
        iterations: 400,
        ..Default::default()
    };
    let init = initial_layout(30, &cfg);
    let base = tsne_from(&x, init.clone(), &cfg).unwrap();

    let mut perm: Vec<usize> = (0..30).collect();
    RngStream::new(9, 9).shuffle(&mut perm);
    let permute = |m: &Matrix| {
        let mut out = Matrix::zeros(m.rows(), m.cols());
        for (k, &i) in perm.iter().enumerate() {
            out.row_mut(k).copy_from_slice(m.row(i));
        }
        out
    };
    let moved = tsne_from(&permute(&x), permute(&init), &cfg).unwrap();
    let (a, b) = (pairwise(&base.coords), pairwise(&moved.coords));
    for (k, &i) in perm.iter().enumerate() {
        for (l, &j) in perm.iter().enumerate() {
            assert!((a[i * 30 + j] - b[k * 30 + l]).abs() < 1e-9);
        }
    }

    // the seeded entry point draws its layout in canonical order
    let seeded = tsne(&x, &cfg).unwrap();
    let seeded_moved = tsne(&permute(&x), &cfg).unwrap();
    let (a, b) = (pairwise(&seeded.coords), pairwise(&seeded_moved.coords));
    for (k, &i) in perm.iter().enumerate() {
        for (l, &j) in perm.iter().enumerate() {
            assert!((a[i * 30 + j] - b[k * 30 + l]).abs() < 1e-9);
        }
    }
}

fn table(n: usize, width: usize, window: usize, seed: u64) -> ActivationTable {
    let mut rng = RngStream::new(seed, 3);
    let labels: Vec<u8> = (0..n).map(|i| (i % 2) as u8).collect();
    let predicted: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
    ActivationTable {
        window: ObservationWindow::new(window).unwrap(),
        patient_ids: (0..n).map(|i| format!("P{i:03}")).collect(),
        flags: labels.iter().zip(&predicted).map(|(&l, &p)| Confusion::of(l, p)).collect(),
        labels,
        predicted,
        activations: Matrix::from_vec(n, width, (0..n * width).map(|_| rng.normal()).collect()).unwrap(),
        comparison: None,
    }
}

#[test]
fn single_window_projection_has_no_arrow_columns() {
    let t = table(30, 4, 1, 1);
    let cfg = TsneConfig {
        perplexity: 5.0,
        iterations: 300,
        ..Default::default()
    };
    let p = project_patients(&t, None, &cfg).unwrap();
    assert_eq!(p.patients.len(), 30);
    let tsv = p.to_tsv();
    assert!(tsv.starts_with("#schema=seqrisk.projection/1"));
    assert!(!tsv.contains("x_end"));
    assert_eq!(tsv, project_patients(&t, None, &cfg).unwrap().to_tsv());
}

#[test]
fn paired_projection_marks_exactly_the_changed_predictions() {
    let a = table(20, 4, 1, 1);
    let mut b = table(20, 8, 2, 2);
    // reversed row order must still join by id
    let rev: Vec<usize> = (0..20).rev().collect();
    b.patient_ids = rev.iter().map(|&i| b.patient_ids[i].clone()).collect();
    b.labels = rev.iter().map(|&i| a.labels[i]).collect();
    b.flags = b.labels.iter().zip(&b.predicted).map(|(&l, &p)| Confusion::of(l, p)).collect();
    let cfg = TsneConfig {
        perplexity: 5.0,
        iterations: 300,
        ..Default::default()
    };
    let p = project_patients(&a, Some(&b), &cfg).unwrap();
    assert_eq!(p.patients.len(), 20);
    for (i, pt) in p.patients.iter().enumerate() {
        let j = 19 - i;
        assert_eq!(pt.paired.as_ref().unwrap().predicted, b.predicted[j]);
        assert_eq!(pt.transition().is_some(), a.predicted[i] != b.predicted[j]);
    }
    assert!(p.to_tsv().contains("\tx_end\ty_end\ttransition"));

    let mut c = b.clone();
    c.patient_ids[0] = "other".into();
    assert!(matches!(project_patients(&a, Some(&c), &cfg), Err(seqrisk::Error::Schema(_))));
}
