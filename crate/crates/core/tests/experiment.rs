// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use kcircuits::experiment::{run_all, run_stage, ExperimentConfig, RunDir};
use kcircuits::Error;


#[test]
fn config_round_trips_through_toml() {
    for c in [ExperimentConfig::desk(), ExperimentConfig::paper_shape(), common::tiny_config()] {
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back.to_toml(), c.to_toml());
        assert_eq!(back.hash(), c.hash());
    }
    let mut a = common::tiny_config();
    a.set_seed(9);
    assert_ne!(a.hash(), common::tiny_config().hash());
    assert!(ExperimentConfig::preset("nope").is_err());
    assert!(ExperimentConfig::from_toml("scale = 3").is_err());
}

#[test]
fn pipeline_is_bit_reproducible_and_thread_count_independent() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_all(&RunDir::open(a.path(), common::tiny_config(), false).unwrap(), 1).unwrap();
    run_all(&RunDir::open(b.path(), common::tiny_config(), false).unwrap(), 2).unwrap();
    let fa = common::files(a.path());
    let fb = common::files(b.path());
    assert_eq!(fa.keys().collect::<Vec<_>>(), fb.keys().collect::<Vec<_>>());
    for (k, v) in &fa {
        assert!(v == &fb[k], "{k} differs");
    }
    for needed in [
        "config.toml",
        "synth/vocab.txt",
        "synth/corpus_base.txt",
        "train/continual/epoch_005.ckpt",
        "analyze/metrics.csv",
        "lens/lens.csv",
        "heads/heads.csv",
        "transfer/transfer.csv",
        "forget/forget.csv",
    ] {
        assert!(fa.contains_key(needed), "missing {needed}");
    }
    assert!(!fa.contains_key(".lock"));
    let metrics = String::from_utf8(fa["analyze/metrics.csv"].clone()).unwrap();
    assert!(metrics.starts_with(&format!("# config_hash: {}", common::tiny_config().hash())));
}

#[test]
fn stages_check_prerequisites_and_config_hashes() {
    let d = tempfile::tempdir().unwrap();
    {
        let run = RunDir::open(d.path(), common::tiny_config(), false).unwrap();
        assert!(matches!(run_stage(&run, "train", 1), Err(Error::MissingPrerequisite { .. })));
        assert!(run_stage(&run, "bogus", 1).is_err());
        run_stage(&run, "synth", 1).unwrap();
        // A second handle on the same directory is refused while the first is open.
        assert!(RunDir::open(d.path(), common::tiny_config(), false).is_err());
    }
    let mut other = common::tiny_config();
    other.set_seed(2);
    assert!(matches!(
        RunDir::open(d.path(), other.clone(), false),
        Err(Error::ConfigMismatch { .. })
    ));
    let run = RunDir::open(d.path(), other, true).unwrap();
    // Overridden: artifacts from the earlier config stay readable.
    run.read_text("synth", "synth/vocab.txt").unwrap();
}
