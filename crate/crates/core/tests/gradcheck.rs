// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use common::grad;

#[test]
fn elementwise_ops() {
    grad::elementwise_ops();
}

#[test]
fn matmul_and_batch_matmul() {
    grad::matmul_and_batch_matmul();
}

#[test]
fn softmax_layer_norm_gelu() {
    grad::softmax_layer_norm_gelu();
}

#[test]
fn indexing_ops() {
    grad::indexing_ops();
}

#[test]
fn cross_entropy_with_ignored_rows() {
    grad::cross_entropy_with_ignored_rows();
}

#[test]
fn transformer_loss_gradients() {
    grad::transformer_loss_gradients();
}

#[test]
fn hooked_read_point_gradients_match_finite_differences() {
    grad::hooked_read_point_gradients_match_finite_differences();
}

proptest::proptest! {
    #![proptest_config(proptest::test_runner::Config::with_cases(24))]

    #[test]
    fn random_shapes(m in 1usize..4, k in 1usize..5, n in 1usize..5, seed in 0u64..1000) {
        grad::random_shapes(m, k, n, seed);
    }
}
