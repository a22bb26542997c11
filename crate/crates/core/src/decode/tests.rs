use super::*;
use crate::coding::{encode, exact_solve, preprocess, random_coding_matrix, rank, CodedBatch, CodingMatrix};
use crate::model::{laplacian_noise_pmf, AlphabetMap, CorrelationGraph, NoisePmf};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gf(q: usize) -> FieldSpec {
    FieldSpec::with_order(q).unwrap()
}

fn batch_from_rows(rows: &[Vec<u8>], y: Vec<u8>, q: usize) -> PreprocessedBatch {
    let n = rows[0].len();
    PreprocessedBatch {
        matrix: CodingMatrix::from_rows(rows, n, gf(q)).unwrap(),
        y,
        non_innovative: 0,
    }
}

fn random_pmf(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..len).map(|_| rng.random::<f64>() + 0.01).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

fn random_noise(rng: &mut ChaCha8Rng, q: usize) -> NoisePmf {
    NoisePmf::new(1 - q as i64, random_pmf(rng, 2 * q - 1)).unwrap()
}

/// Identity-mapped model over GF(q) with the given pairs correlated.
fn model(q: usize, priors: Vec<Vec<f64>>, pairs: &[(usize, usize, NoisePmf)]) -> SourcePrior {
    let mut graph = CorrelationGraph::new(priors.len());
    for (i, j, g) in pairs {
        graph.add_edge(*i, *j, g.clone()).unwrap();
    }
    SourcePrior::new(AlphabetMap::identity(gf(q)), priors, graph).unwrap()
}

fn uniform_model(n: usize, q: usize) -> SourcePrior {
    model(q, vec![vec![1.0 / q as f64; q]; n], &[])
}

fn all_vectors(q: usize, n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..q.pow(n as u32)).map(move |mut i| {
        let mut x = vec![0u8; n];
        for v in x.iter_mut().rev() {
            *v = (i % q) as u8;
            i /= q;
        }
        x
    })
}

#[test]
fn graph_adjacency() {
    let prior = uniform_model(4, 8);
    let id = PreprocessedBatch {
        matrix: CodingMatrix::identity(4, gf(8)),
        y: vec![1, 2, 3, 4],
        non_innovative: 0,
    };
    let g = FactorGraph::new(&id, &prior).unwrap();
    assert_eq!(g.num_checks(), 4);
    for l in 0..4 {
        assert_eq!(g.check_vars(l), &[l]);
        assert_eq!(g.var_checks(l), vec![l]);
    }

    let prior = uniform_model(3, 2);
    let b = batch_from_rows(&[vec![1, 1, 0], vec![0, 1, 1]], vec![0, 0], 2);
    let g = FactorGraph::new(&b, &prior).unwrap();
    assert_eq!(g.check_vars(0), &[0, 1]);
    assert_eq!(g.check_vars(1), &[1, 2]);
    assert_eq!(g.var_checks(1), vec![0, 1]);

    let wrong = uniform_model(4, 2);
    assert!(matches!(
        FactorGraph::new(&b, &wrong),
        Err(DecodeError::DimensionMismatch { .. })
    ));
    let other_field = uniform_model(3, 4);
    assert!(matches!(
        FactorGraph::new(&b, &other_field),
        Err(DecodeError::FieldMismatch { .. })
    ));
}

#[test]
fn preprocessing_thins_the_graph() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let prior = uniform_model(20, 8);
    for l in [5, 10, 15] {
        let a = random_coding_matrix(l, 20, &gf(8), &mut rng);
        let pre = preprocess(&CodedBatch::encode(a, &[0; 20]).unwrap()).unwrap();
        let g = FactorGraph::new(&pre, &prior).unwrap();
        assert!(g.mean_check_degree() < 20.0);
    }
}

#[test]
fn init_messages_follow_priors() {
    let prior = uniform_model(3, 4);
    let b = batch_from_rows(&[vec![1, 2, 3]], vec![0], 4);
    let g = FactorGraph::new(&b, &prior).unwrap();
    let ms = init_messages(&g);
    for e in 0..3 {
        assert_eq!(ms.to_check(e), &[0.25; 4]);
        assert_eq!(ms.to_var(e), &[1.0; 4]);
    }

    let point = model(4, vec![vec![0.0, 0.0, 1.0, 0.0], vec![0.25; 4]], &[]);
    let b = batch_from_rows(&[vec![1, 1]], vec![0], 4);
    let g = FactorGraph::new(&b, &point).unwrap();
    assert_eq!(init_messages(&g).to_check(0), &[0.0, 0.0, 1.0, 0.0]);

    // Four symbols lifted into GF(8).
    let map = AlphabetMap::offset(0, 4, gf(8)).unwrap();
    let lifted = crate::model::lift_marginal(&[0.1, 0.2, 0.3, 0.4], &map);
    let prior = SourcePrior::new(map, vec![lifted; 2], CorrelationGraph::new(2)).unwrap();
    let b = batch_from_rows(&[vec![1, 1]], vec![0], 8);
    let g = FactorGraph::new(&b, &prior).unwrap();
    let ms = init_messages(&g);
    assert!(ms.to_check(0)[4..].iter().all(|&m| m == 0.0));
    assert_eq!(ms.to_check(0).iter().filter(|&&m| m > 0.0).count(), 4);
}

#[test]
fn source_prior_validation() {
    let map = AlphabetMap::offset(0, 4, gf(8)).unwrap();
    let outside = vec![0.5, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0];
    assert!(SourcePrior::new(map.clone(), vec![outside], CorrelationGraph::new(1)).is_err());
    assert!(SourcePrior::new(map.clone(), vec![vec![0.5; 8]], CorrelationGraph::new(1)).is_err());
    assert!(SourcePrior::new(map.clone(), vec![vec![0.25; 4]], CorrelationGraph::new(1)).is_err());
    let mut wide = CorrelationGraph::new(2);
    wide.add_edge(0, 1, laplacian_noise_pmf(0.3, 5).unwrap()).unwrap();
    assert!(SourcePrior::uniform(map, wide).is_err());
}

#[test]
fn variable_update_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let q = 8;
    let priors: Vec<Vec<f64>> = (0..3).map(|_| random_pmf(&mut rng, q)).collect();
    let prior = model(q, priors.clone(), &[]);
    // Variable 0 sits in three checks, variable 1 in one, variable 2 in two.
    let b = batch_from_rows(&[vec![1, 0, 1], vec![1, 1, 0], vec![1, 0, 1]], vec![0, 0, 0], q);
    let g = FactorGraph::new(&b, &prior).unwrap();
    let mut ms = init_messages(&g);
    for x in ms.to_var.iter_mut() {
        *x = rng.random::<f64>();
    }
    var_update(&mut ms, &g, true);

    // Straight-line evaluation: prior times every other incoming message.
    for n in 0..3 {
        let edges = &g.var_edges[n];
        for &e in edges {
            let mut expected: Vec<f64> = priors[n].clone();
            for &other in edges.iter().filter(|&&o| o != e) {
                for (x, r) in expected.iter_mut().zip(ms.to_var(other)) {
                    *x *= r;
                }
            }
            let total: f64 = expected.iter().sum();
            for (got, want) in ms.to_check(e).iter().zip(&expected) {
                assert!((got - want / total).abs() < 1e-12);
            }
        }
    }
    // Degree-1 variable: its prior.
    let e = g.var_edges[1][0];
    for (got, want) in ms.to_check(e).iter().zip(&priors[1]) {
        assert!((got - want).abs() < 1e-12);
    }
    // Without the prior factor a degree-1 variable still sends its prior.
    var_update(&mut ms, &g, false);
    for (got, want) in ms.to_check(e).iter().zip(&priors[1]) {
        assert!((got - want).abs() < 1e-12);
    }

    // Two identical incoming messages under a uniform prior: each outgoing
    // message is proportional to the other one.
    let prior = uniform_model(2, 4);
    let b = batch_from_rows(&[vec![1, 1], vec![1, 2]], vec![0, 0], 4);
    let g = FactorGraph::new(&b, &prior).unwrap();
    let mut ms = init_messages(&g);
    let m = [0.1, 0.2, 0.3, 0.4];
    for &e in &g.var_edges[0] {
        ms.to_var[e * 4..(e + 1) * 4].copy_from_slice(&m);
    }
    var_update(&mut ms, &g, true);
    for &e in &g.var_edges[0] {
        for (got, want) in ms.to_check(e).iter().zip(&m) {
            assert!((got - want).abs() < 1e-12);
        }
    }
}

#[test]
fn variable_update_resets_dead_messages() {
    let prior = uniform_model(1, 2);
    let b = batch_from_rows(&[vec![1], vec![1], vec![1]], vec![0, 1, 0], 2);
    let g = FactorGraph::new(&b, &prior).unwrap();
    let mut ms = init_messages(&g);
    ms.to_var.copy_from_slice(&[1.0, 0.0, 0.0, 1.0, 1.0, 0.0]);
    // Edges 0 and 2 each see (1,0)*(0,1) = 0 and fall back to the prior;
    // edge 1 sees (1,0)*(1,0).
    let resets = var_update(&mut ms, &g, true);
    assert_eq!(resets, 2);
    assert_eq!(ms.to_check(0), &[0.5, 0.5]);
    assert_eq!(ms.to_check(2), &[0.5, 0.5]);
    assert_eq!(ms.to_check(1)[0], 1.0 - MESSAGE_FLOOR);
}

#[test]
fn floor_keeps_support_alive() {
    let prior = uniform_model(1, 2);
    let b = batch_from_rows(&[vec![1], vec![1]], vec![0, 0], 2);
    let g = FactorGraph::new(&b, &prior).unwrap();
    let mut ms = init_messages(&g);
    ms.to_var.copy_from_slice(&[1.0, 1e-300, 1.0, 1e-300]);
    var_update(&mut ms, &g, true);
    assert!(ms.to_check(0)[1] >= MESSAGE_FLOOR * 0.999);
    assert!((ms.to_check(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn binary_check_passes_the_other_message() {
    let prior = uniform_model(2, 2);
    let b = batch_from_rows(&[vec![1, 1]], vec![0], 2);
    let g = FactorGraph::new(&b, &prior).unwrap();
    let mut ms = init_messages(&g);
    ms.to_check.copy_from_slice(&[0.6, 0.4, 0.3, 0.7]);
    for kernel in [CheckKernel::Enumerate, CheckKernel::Dp, CheckKernel::Hadamard, CheckKernel::Auto] {
        let r = check_messages(&g, &ms, 0, kernel);
        assert!((r[0][0] - 0.3).abs() < 1e-15 && (r[0][1] - 0.7).abs() < 1e-15);
        assert!((r[1][0] - 0.6).abs() < 1e-15 && (r[1][1] - 0.4).abs() < 1e-15);
    }
}

#[test]
fn degree_one_check_forces_its_value() {
    let field = gf(16);
    let prior = uniform_model(1, 16);
    let c = 7u8;
    let y = 11u8;
    let b = batch_from_rows(&[vec![c]], vec![y], 16);
    let g = FactorGraph::new(&b, &prior).unwrap();
    let ms = init_messages(&g);
    let forced = field.div_raw(y, c).unwrap() as usize;
    for kernel in [CheckKernel::Enumerate, CheckKernel::Dp, CheckKernel::Hadamard] {
        let r = &check_messages(&g, &ms, 0, kernel)[0];
        for (a, &x) in r.iter().enumerate() {
            let want = if a == forced { 1.0 } else { 0.0 };
            assert!((x - want).abs() < 1e-12, "{kernel:?} a={a}");
        }
    }
}

#[test]
fn kernels_agree_on_random_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for trial in 0..60 {
        let q = [2, 4, 8, 16][trial % 4];
        let d = 1 + trial % 4;
        let n = d + 1;
        let priors: Vec<Vec<f64>> = (0..n).map(|_| random_pmf(&mut rng, q)).collect();
        // Correlate a random subset of pairs (all of them every third trial).
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if trial % 3 == 0 || rng.random_bool(0.5) {
                    pairs.push((i, j, random_noise(&mut rng, q)));
                }
            }
        }
        let prior = model(q, priors, &pairs);
        let mut row: Vec<u8> = (0..n).map(|_| rng.random_range(1..q) as u8).collect();
        row[rng.random_range(0..n)] = 0;
        let b = batch_from_rows(&[row], vec![rng.random_range(0..q) as u8], q);
        let g = FactorGraph::new(&b, &prior).unwrap();
        let mut ms = init_messages(&g);
        for e in 0..g.num_edges() {
            let m = random_pmf(&mut rng, q);
            ms.to_check[e * q..(e + 1) * q].copy_from_slice(&m);
        }
        let reference = check_messages(&g, &ms, 0, CheckKernel::Enumerate);
        for kernel in [CheckKernel::Dp, CheckKernel::Hadamard, CheckKernel::Auto] {
            let got = check_messages(&g, &ms, 0, kernel);
            for (r, w) in got.iter().flatten().zip(reference.iter().flatten()) {
                assert!((r - w).abs() < 1e-10, "trial {trial} {kernel:?}: {r} vs {w}");
            }
        }
    }
}

#[test]
fn correlated_degree_four_check_over_gf8() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let q = 8;
    let priors: Vec<Vec<f64>> = (0..4).map(|_| random_pmf(&mut rng, q)).collect();
    let mut pairs = Vec::new();
    for i in 0..4 {
        for j in i + 1..4 {
            pairs.push((i, j, random_noise(&mut rng, q)));
        }
    }
    let prior = model(q, priors, &pairs);
    let b = batch_from_rows(&[vec![3, 5, 1, 7]], vec![6], q);
    let g = FactorGraph::new(&b, &prior).unwrap();
    let mut ms = init_messages(&g);
    for e in 0..4 {
        ms.to_check[e * q..(e + 1) * q].copy_from_slice(&random_pmf(&mut rng, q));
    }
    let reference = check_messages(&g, &ms, 0, CheckKernel::Enumerate);
    let dp = check_messages(&g, &ms, 0, CheckKernel::Dp);
    for (r, w) in dp.iter().flatten().zip(reference.iter().flatten()) {
        assert!((r - w).abs() < 1e-10);
    }
}

#[test]
fn decision_examples() {
    // One degree-1 check forcing x0 = 5.
    let prior = uniform_model(1, 8);
    let b = batch_from_rows(&[vec![1]], vec![5], 8);
    let g = FactorGraph::new(&b, &prior).unwrap();
    let mut ms = init_messages(&g);
    check_update(&mut ms, &g, CheckKernel::Auto);
    assert_eq!(tentative_decision(&ms, &g, true), vec![5]);

    // Exact tie between 3 and 6.
    let mut ms = init_messages(&g);
    ms.to_var.copy_from_slice(&[0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0]);
    assert_eq!(tentative_decision(&ms, &g, true), vec![3]);

    // x1 + x2 = 0 over GF(2), f1(0) = 0.7, f2 uniform.
    let prior = model(2, vec![vec![0.7, 0.3], vec![0.5, 0.5]], &[]);
    let b = batch_from_rows(&[vec![1, 1]], vec![0], 2);
    let result = decode_bp(&b, &prior, 1).unwrap();
    assert_eq!(result.x_hat, vec![0, 0]);
    assert!(result.converged);
}

#[test]
fn identity_system_converges_immediately() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let q = 16;
    let x: Vec<u8> = (0..6).map(|_| rng.random_range(0..q) as u8).collect();
    let priors: Vec<Vec<f64>> = (0..6).map(|_| random_pmf(&mut rng, q)).collect();
    let pairs = vec![(0, 1, random_noise(&mut rng, q)), (2, 5, random_noise(&mut rng, q))];
    let prior = model(q, priors, &pairs);
    let b = PreprocessedBatch {
        matrix: CodingMatrix::identity(6, gf(q)),
        y: x.clone(),
        non_innovative: 0,
    };
    let result = decode_bp(&b, &prior, 100).unwrap();
    assert_eq!(result.x_hat, exact_solve(&b.matrix, &b.y).unwrap());
    assert!(result.converged && !result.fallback_used);
    assert_eq!(result.iterations, 1);
}

#[test]
fn empty_batch_falls_back_to_the_mean() {
    let map = AlphabetMap::offset(-2, 5, gf(8)).unwrap();
    // Symbol pmf over {-2..2}: mean 0.5 rounds up to 1.
    let marginal = crate::model::lift_marginal(&[0.0, 0.25, 0.25, 0.25, 0.25], &map);
    let prior = SourcePrior::new(map.clone(), vec![marginal; 3], CorrelationGraph::new(3)).unwrap();
    let b = PreprocessedBatch {
        matrix: CodingMatrix::new(0, 3, gf(8), Vec::new()).unwrap(),
        y: Vec::new(),
        non_innovative: 2,
    };
    let result = decode_bp(&b, &prior, 100).unwrap();
    assert!(result.fallback_used && !result.converged);
    assert_eq!(result.iterations, 0);
    let one = map.to_field(1).unwrap().value();
    assert_eq!(result.x_hat, vec![one; 3]);
}

#[test]
fn fallback_mean_snaps_to_the_alphabet() {
    // Alphabet {0, 10}: a mean of 4 snaps to 0, a mean of 7 to 10.
    let field = gf(4);
    let map = AlphabetMap::new(vec![0, 10], vec![0, 1], field).unwrap();
    let prior = SourcePrior::new(map.clone(), vec![vec![0.6, 0.4, 0.0, 0.0]], CorrelationGraph::new(1)).unwrap();
    assert_eq!(prior.expected_value_estimate(), vec![0]);
    let prior = SourcePrior::new(map, vec![vec![0.3, 0.7, 0.0, 0.0]], CorrelationGraph::new(1)).unwrap();
    assert_eq!(prior.expected_value_estimate(), vec![1]);
}

#[test]
fn matches_map_with_one_missing_equation() {
    let q = 2;
    let priors = vec![vec![0.7, 0.3]; 3];
    let g = NoisePmf::new(-1, vec![0.05, 0.9, 0.05]).unwrap();
    let pairs = vec![(0, 1, g.clone()), (0, 2, g.clone()), (1, 2, g.clone())];
    let prior = model(q, priors.clone(), &pairs);
    // Joint model the MAP decoder sees: priors times pairwise agreement.
    let mut joint: Vec<f64> = all_vectors(q, 3)
        .map(|x| {
            let mut p: f64 = x.iter().zip(&priors).map(|(&v, f)| f[v as usize]).product();
            for &(i, j) in &[(0, 1), (0, 2), (1, 2)] {
                p *= g.prob(x[i] as i64 - x[j] as i64);
            }
            p
        })
        .collect();
    let total: f64 = joint.iter().sum();
    joint.iter_mut().for_each(|p| *p /= total);
    let a = CodingMatrix::from_rows(&[vec![1, 1, 0], vec![0, 1, 1]], 3, gf(q)).unwrap();
    for x in all_vectors(q, 3) {
        let batch = CodedBatch::encode(a.clone(), &x).unwrap();
        let map_decision = decode_map_exact(&batch, &joint).unwrap();
        let pre = preprocess(&batch).unwrap();
        let bp = decode_bp(&pre, &prior, 100).unwrap();
        assert_eq!(bp.x_hat, map_decision, "x = {x:?}");
    }
}

#[test]
fn single_check_tree_gives_exact_posteriors() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for q in [2, 4, 8] {
        let n = 3;
        let priors: Vec<Vec<f64>> = (0..n).map(|_| random_pmf(&mut rng, q)).collect();
        let prior = model(q, priors.clone(), &[]);
        let row: Vec<u8> = (0..n).map(|_| rng.random_range(1..q) as u8).collect();
        let y = rng.random_range(0..q) as u8;
        let b = batch_from_rows(std::slice::from_ref(&row), vec![y], q);
        let g = FactorGraph::new(&b, &prior).unwrap();
        let mut ms = init_messages(&g);
        var_update(&mut ms, &g, true);
        check_update(&mut ms, &g, CheckKernel::Auto);
        let beliefs = beliefs(&ms, &g, true);

        let mut posterior = vec![vec![0.0; q]; n];
        let field = gf(q);
        for x in all_vectors(q, n) {
            let s = x.iter().zip(&row).fold(0u8, |acc, (&v, &c)| acc ^ field.mul_raw(c, v));
            if s != y {
                continue;
            }
            let p: f64 = x.iter().zip(&priors).map(|(&v, f)| f[v as usize]).product();
            for (i, &v) in x.iter().enumerate() {
                posterior[i][v as usize] += p;
            }
        }
        for i in 0..n {
            let exp_b: Vec<f64> = beliefs[i].iter().map(|b| b.exp()).collect();
            let zb: f64 = exp_b.iter().sum();
            let zp: f64 = posterior[i].iter().sum();
            for (got, want) in exp_b.iter().zip(&posterior[i]) {
                assert!((got / zb - want / zp).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn messages_stay_normalized_and_decoding_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let q = 8;
    let n = 8;
    let priors: Vec<Vec<f64>> = (0..n).map(|_| random_pmf(&mut rng, q)).collect();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            pairs.push((i, j, laplacian_noise_pmf(0.2, 7).unwrap()));
        }
    }
    let prior = model(q, priors, &pairs);
    let a = random_coding_matrix(5, n, &gf(q), &mut rng);
    let x: Vec<u8> = (0..n).map(|_| rng.random_range(0..q) as u8).collect();
    let pre = preprocess(&CodedBatch::encode(a, &x).unwrap()).unwrap();
    let g = FactorGraph::new(&pre, &prior).unwrap();
    let mut ms = init_messages(&g);
    for _ in 0..20 {
        var_update(&mut ms, &g, true);
        for e in 0..g.num_edges() {
            let m = ms.to_check(e);
            assert!(m.iter().all(|&v| v >= 0.0));
            assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        check_update(&mut ms, &g, CheckKernel::Auto);
        assert!(ms.to_var.iter().all(|&v| v >= 0.0));
    }
    let first = decode_bp(&pre, &prior, 50).unwrap();
    let second = decode_bp(&pre, &prior, 50).unwrap();
    assert_eq!(first, second);
    if first.converged {
        assert!(pre.is_satisfied_by(&first.x_hat));
    }
}

#[test]
fn full_rank_decoding_equals_exact_solution() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for q in [8, 16] {
        let n = 6;
        let priors: Vec<Vec<f64>> = (0..n).map(|_| random_pmf(&mut rng, q)).collect();
        let pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1, random_noise(&mut rng, q))).collect();
        let prior = model(q, priors, &pairs);
        let mut done = 0;
        while done < 50 {
            let a = random_coding_matrix(n + 1, n, &gf(q), &mut rng);
            if rank(&a) < n {
                continue;
            }
            done += 1;
            let x: Vec<u8> = (0..n).map(|_| rng.random_range(0..q) as u8).collect();
            let y = encode(&a, &x).unwrap();
            let pre = preprocess(&CodedBatch::new(a.clone(), y.clone()).unwrap()).unwrap();
            let result = decode_bp(&pre, &prior, 100).unwrap();
            assert_eq!(result.x_hat, exact_solve(&a, &y).unwrap());
            assert!(result.converged);
        }
    }
}

#[test]
fn map_examples() {
    let a = CodingMatrix::from_rows(&[vec![1, 1]], 2, gf(2)).unwrap();
    let batch = CodedBatch::new(a, vec![1]).unwrap();
    let joint = [0.5, 0.2, 0.1, 0.2];
    assert_eq!(decode_map_exact(&batch, &joint).unwrap(), vec![0, 1]);

    let a = CodingMatrix::identity(2, gf(4));
    let batch = CodedBatch::new(a, vec![3, 1]).unwrap();
    let mut joint = vec![0.0; 16];
    joint[0] = 0.9;
    joint[13] = 0.1;
    assert_eq!(decode_map_exact(&batch, &joint).unwrap(), vec![3, 1]);

    let empty = CodedBatch::new(CodingMatrix::new(0, 2, gf(4), Vec::new()).unwrap(), Vec::new()).unwrap();
    assert_eq!(decode_map_exact(&empty, &joint).unwrap(), vec![0, 0]);
    // Ties resolve lexicographically.
    let flat = vec![1.0 / 16.0; 16];
    assert_eq!(decode_map_exact(&empty, &flat).unwrap(), vec![0, 0]);

    let impossible = CodedBatch::new(CodingMatrix::identity(2, gf(4)), vec![1, 1]).unwrap();
    assert!(matches!(
        decode_map_exact(&impossible, &joint),
        Err(DecodeError::NoFeasibleConfiguration)
    ));
}
