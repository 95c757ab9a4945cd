mod common;

use common::gradcheck::{pipeline_error, primitive_error, primitives, Pipeline, PIPELINES};

#[test]
fn every_primitive_matches_finite_differences() {
    for case in primitives() {
        for seed in 0..100 {
            let err = primitive_error(&case, seed);
            assert!(err < 1e-4, "{} seed {seed}: relative error {err:e}", case.name);
        }
    }
}

#[test]
fn loss_pipelines_match_finite_differences() {
    for p in PIPELINES {
        for seed in 0..100 {
            let err = pipeline_error(p, seed);
            assert!(err < 1e-4, "{p:?} seed {seed}: relative error {err:e}");
        }
    }
}

#[test]
fn depth_attack_loss_matches_finite_differences() {
    for seed in 0..100 {
        let err = pipeline_error(Pipeline::DepthFlip, seed);
        assert!(err < 1e-4, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn backward_is_bitwise_deterministic() {
    for p in PIPELINES {
        assert_eq!(pipeline_error(p, 7).to_bits(), pipeline_error(p, 7).to_bits());
    }
}

#[test]
fn gradient_is_linear_in_the_loss() {
    use pose_attack::autodiff::Tape;
    let tape = Tape::new();
    let x = tape.leaf(vec![0.3, -1.1, 0.7], &[3]).unwrap();
    let f = x.sin().unwrap().sum().unwrap();
    let g = x.exp().unwrap().mean().unwrap();
    let combo = f.scale(2.5).unwrap().add(g.scale(-0.75).unwrap()).unwrap();
    let gf = tape.backward(f).unwrap().wrt(x);
    let gg = tape.backward(g).unwrap().wrt(x);
    let gc = tape.backward(combo).unwrap().wrt(x);
    for i in 0..3 {
        assert!((gc[i] - (2.5 * gf[i] - 0.75 * gg[i])).abs() < 1e-12);
    }
}

