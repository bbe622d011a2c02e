// SPDX-License-Identifier: MIT OR Apache-2.0

// Central finite differences against tape gradients.
//
// Step `1e-3`, relative error `|a - n| / max(|a|, |n|) < 1e-2`. The tape runs
// in f32, so a central difference of a loss near 2 cannot resolve derivatives
// much below `1e-2`: there the check falls back to an absolute error of `2e-4`.

use kcircuits::autodiff::{Tape, Tensor, Var};
use kcircuits::model::{LogitRows, Model, ModelConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const STEP: f32 = 1e-3;
pub const TOL: f32 = 1e-2;
const NOISE_FLOOR: f32 = 1e-2;
const ABS_TOL: f32 = 2e-4;

fn rand_tensor(rng: &mut impl Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn close(a: f32, n: f32) -> bool {
    let scale = a.abs().max(n.abs());
    if scale < NOISE_FLOOR {
        (a - n).abs() < ABS_TOL
    } else {
        (a - n).abs() / scale < TOL
    }
}

/// Check d f / d inputs for a scalar function built on a fresh tape.
fn check(inputs: Vec<Tensor>, f: impl Fn(&mut Tape, &[Var]) -> Var) {
    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|t| tape.leaf(t.clone(), true)).collect();
    let out = f(&mut tape, &vars);
    tape.backward(out).unwrap();
    let grads: Vec<Tensor> = vars.iter().map(|v| tape.grad(*v).unwrap().clone()).collect();

    let eval = |inputs: &[Tensor]| -> f32 {
        let mut t = Tape::new();
        let vs: Vec<Var> = inputs.iter().map(|x| t.leaf(x.clone(), false)).collect();
        let o = f(&mut t, &vs);
        t.value(o).item().unwrap()
    };
    for (i, g) in grads.iter().enumerate() {
        for j in 0..inputs[i].numel() {
            let mut plus = inputs.clone();
            plus[i].data_mut()[j] += STEP;
            let mut minus = inputs.clone();
            minus[i].data_mut()[j] -= STEP;
            let num = (eval(&plus) - eval(&minus)) / (2.0 * STEP);
            let ana = g.data()[j];
            assert!(
                close(ana, num),
                "input {i} element {j}: analytic {ana}, numeric {num}"
            );
        }
    }
}

/// Reduce to a scalar through a fixed random projection so every output element matters.
fn project(tape: &mut Tape, x: Var, seed: u64) -> Var {
    let shape = tape.shape(x).to_vec();
    let w = rand_tensor(&mut ChaCha8Rng::seed_from_u64(seed), &shape);
    let w = tape.constant(w);
    let y = tape.mul(x, w).unwrap();
    tape.sum(y)
}

pub fn elementwise_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = rand_tensor(&mut rng, &[3, 4]);
    let b = rand_tensor(&mut rng, &[3, 4]);
    let bias = rand_tensor(&mut rng, &[4]);
    check(vec![a.clone(), b.clone(), bias], |t, v| {
        let x = t.add(v[0], v[1]).unwrap();
        let x = t.sub(x, v[2]).unwrap();
        let y = t.mul(x, v[0]).unwrap();
        let y = t.scale(y, 0.7);
        project(t, y, 11)
    });
}

pub fn matmul_and_batch_matmul() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    check(
        vec![rand_tensor(&mut rng, &[2, 3, 4]), rand_tensor(&mut rng, &[4, 5])],
        |t, v| {
            let y = t.matmul(v[0], v[1]).unwrap();
            project(t, y, 12)
        },
    );
    for trans in [false, true] {
        let bshape = if trans { [2, 5, 4] } else { [2, 4, 5] };
        check(
            vec![rand_tensor(&mut rng, &[2, 3, 4]), rand_tensor(&mut rng, &bshape)],
            |t, v| {
                let y = t.batch_matmul(v[0], v[1], trans).unwrap();
                project(t, y, 13)
            },
        );
    }
}

pub fn softmax_layer_norm_gelu() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    check(vec![rand_tensor(&mut rng, &[3, 5])], |t, v| {
        let y = t.softmax(v[0]);
        project(t, y, 14)
    });
    check(
        vec![
            rand_tensor(&mut rng, &[3, 6]),
            rand_tensor(&mut rng, &[6]),
            rand_tensor(&mut rng, &[6]),
        ],
        |t, v| {
            let y = t.layer_norm(v[0], v[1], v[2], 1e-5).unwrap();
            project(t, y, 15)
        },
    );
    check(vec![rand_tensor(&mut rng, &[4, 4])], |t, v| {
        let y = t.gelu(v[0]);
        project(t, y, 16)
    });
}

pub fn indexing_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    check(vec![rand_tensor(&mut rng, &[5, 3])], |t, v| {
        let y = t.embedding(v[0], &[4, 0, 4, 2]).unwrap();
        project(t, y, 17)
    });
    check(
        vec![rand_tensor(&mut rng, &[2, 3]), rand_tensor(&mut rng, &[2, 2])],
        |t, v| {
            let c = t.concat(&[v[0], v[1]], 1).unwrap();
            let s = t.slice(c, 1, 1, 3).unwrap();
            let p = t.permute(s, &[1, 0]).unwrap();
            let r = t.select_rows(p, &[2, 0]).unwrap();
            let r = t.reshape(r, &[4]).unwrap();
            project(t, r, 18)
        },
    );
    check(vec![rand_tensor(&mut rng, &[3, 4])], |t, v| {
        let m = t.mean(v[0]);
        let s = t.sum(v[0]);
        let y = t.mul(m, s).unwrap();
        t.scale(y, 1.5)
    });
}

pub fn cross_entropy_with_ignored_rows() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    check(vec![rand_tensor(&mut rng, &[4, 6])], |t, v| {
        t.cross_entropy(v[0], &[Some(1), None, Some(5), Some(0)]).unwrap()
    });
}

pub fn transformer_loss_gradients() {
    let cfg = ModelConfig::new(2, 2, 8, 9, 6);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let model = Model::init(cfg, &mut rng).unwrap();
    let tokens = vec![1, 4, 2, 8, 3];
    let targets: Vec<Option<usize>> = vec![Some(4), Some(2), None, Some(3), Some(7)];
    let params = model.params.tensors().to_vec();
    let loss = |t: &mut Tape, v: &[Var]| {
        let logits = model.forward_tokens(t, v, &tokens, 1, tokens.len()).unwrap();
        t.cross_entropy(logits, &targets).unwrap()
    };
    // Full check over every parameter is slow-ish; sample elements per tensor.
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.leaf(p.clone(), true)).collect();
    let out = loss(&mut tape, &vars);
    tape.backward(out).unwrap();
    let eval = |ps: &[Tensor]| {
        let mut t = Tape::new();
        let vs: Vec<Var> = ps.iter().map(|p| t.leaf(p.clone(), false)).collect();
        let o = loss(&mut t, &vs);
        t.value(o).item().unwrap()
    };
    let mut checked = 0;
    for (i, v) in vars.iter().enumerate() {
        let g = tape.grad(*v).unwrap();
        for _ in 0..4 {
            let j = rng.gen_range(0..params[i].numel());
            let mut plus = params.clone();
            plus[i].data_mut()[j] += STEP;
            let mut minus = params.clone();
            minus[i].data_mut()[j] -= STEP;
            let num = (eval(&plus) - eval(&minus)) / (2.0 * STEP);
            let ana = g.data()[j];
            assert!(
                close(ana, num),
                "{} element {j}: analytic {ana}, numeric {num}",
                model.params.names()[i]
            );
            checked += 1;
        }
    }
    assert!(checked > 50);
}

pub fn hooked_read_point_gradients_match_finite_differences() {
    // Gradient of the last-position logit difference with respect to the input embedding.
    let cfg = ModelConfig::new(2, 2, 8, 9, 6);
    let model = Model::init(cfg, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
    let tokens = vec![3, 1, 5, 2];
    let emb = model.embed(&tokens).unwrap();
    let metric = |t: &mut Tape, e: Var, vars: &[Var]| {
        let run = model
            .run_hooked(t, vars, &tokens, Some(e), None, LogitRows::Last)
            .unwrap();
        let l = t.value(run.logits).data().to_vec();
        (run, l[4] - l[6])
    };
    let mut tape = Tape::new();
    let vars = model.params.bind(&mut tape, false);
    let e = tape.leaf(emb.clone(), true);
    let run = model
        .run_hooked(&mut tape, &vars, &tokens, Some(e), None, LogitRows::Last)
        .unwrap();
    let sel = {
        let mut w = Tensor::zeros(&[1, 9]);
        w.data_mut()[4] = 1.0;
        w.data_mut()[6] = -1.0;
        tape.constant(w)
    };
    let y = tape.mul(run.logits, sel).unwrap();
    let y = tape.sum(y);
    tape.backward(y).unwrap();
    let g = tape.grad(e).unwrap().clone();
    for j in 0..emb.numel() {
        let mut plus = emb.clone();
        plus.data_mut()[j] += STEP;
        let mut minus = emb.clone();
        minus.data_mut()[j] -= STEP;
        let f = |x: Tensor| {
            let mut t = Tape::new();
            let vs = model.params.bind(&mut t, false);
            let ev = t.constant(x);
            metric(&mut t, ev, &vs).1
        };
        let num = (f(plus) - f(minus)) / (2.0 * STEP);
        assert!(close(g.data()[j], num), "{j}: {} vs {num}", g.data()[j]);
    }
}


/// Composite primitives on random shapes.
pub fn random_shapes(m: usize, k: usize, n: usize, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    check(vec![rand_tensor(&mut rng, &[m, k]), rand_tensor(&mut rng, &[k, n])], |t, v| {
        let y = t.matmul(v[0], v[1]).unwrap();
        let y = t.softmax(y);
        project(t, y, seed)
    });
    check(
        vec![rand_tensor(&mut rng, &[m, k + 1]), rand_tensor(&mut rng, &[k + 1]), rand_tensor(&mut rng, &[k + 1])],
        |t, v| {
            let y = t.layer_norm(v[0], v[1], v[2], 1e-5).unwrap();
            let y = t.gelu(y);
            project(t, y, seed + 1)
        },
    );
    let targets: Vec<Option<usize>> = (0..m).map(|i| if i % 2 == 0 { Some(i % n) } else { None }).collect();
    check(vec![rand_tensor(&mut rng, &[m, n])], |t, v| t.cross_entropy(v[0], &targets).unwrap());
}
