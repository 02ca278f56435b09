use proptest::prelude::*;
use seqbound::corpus::{ingest, ingest_str, IngestOptions, LengthPolicy};

const TOY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/toy_corpus.txt");
/// sigma_min of the toy corpus at N = 8 with truncation.
const TOY_SIGMA_MIN: f64 = 0.09758474537810774;

#[test]
fn toy_corpus_is_pinned() {
    let stats = ingest(TOY, 8, LengthPolicy::Truncate).unwrap();
    let lm = stats.lm_matrix();
    assert_eq!(stats.vocab().len(), 6);
    assert_eq!(stats.sequence_count(), 10_001);
    assert!(lm.is_full_rank());
    assert!((lm.sigma_min() - TOY_SIGMA_MIN).abs() < 1e-12, "{}", lm.sigma_min());
    for n in 0..8 {
        assert!((lm.matrix().row(n).sum() - 1.0).abs() < 1e-9);
    }
    let fractions: Vec<f64> = stats.sigma_min_by_prefix().iter().map(|p| p.0).collect();
    assert!(fractions.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn toy_corpus_is_deterministic() {
    for policy in [LengthPolicy::Truncate, LengthPolicy::Discard] {
        let a = ingest(TOY, 8, policy).unwrap();
        let b = ingest(TOY, 8, policy).unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a.report()).unwrap(), serde_json::to_string(&b.report()).unwrap());
    }
}

#[test]
fn toy_corpus_rank_is_bounded() {
    for n in 1..=12 {
        for policy in [LengthPolicy::Truncate, LengthPolicy::Discard] {
            // every line has 6 to 12 tokens
            let stats = match ingest(TOY, n, policy) {
                Ok(s) => s,
                Err(seqbound::Error::EmptyCorpus) if policy == LengthPolicy::Discard && n < 6 => continue,
                Err(e) => panic!("{e}"),
            };
            let lm = stats.lm_matrix();
            assert!(lm.rank() <= n.min(stats.vocab().len()));
            // fewer positions than labels cannot be full rank
            assert_eq!(lm.is_full_rank(), lm.rank() == stats.vocab().len());
            if n < stats.vocab().len() {
                assert!(!lm.is_full_rank());
                assert_eq!(lm.sigma_min(), 0.0);
            }
        }
    }
}

proptest! {
    #[test]
    fn random_corpora_respect_invariants(
        lines in prop::collection::vec(prop::collection::vec(0u8..5, 0..9), 1..60),
        n in 1usize..6,
        discard in any::<bool>(),
    ) {
        let text: String = lines
            .iter()
            .map(|l| l.iter().map(|t| format!("t{t}")).collect::<Vec<_>>().join(" ") + "\n")
            .collect();
        let policy = if discard { LengthPolicy::Discard } else { LengthPolicy::Truncate };
        match ingest_str(&text, IngestOptions::new(n, policy)) {
            Ok(stats) => {
                let lm = stats.lm_matrix();
                prop_assert!(lm.rank() <= n.min(stats.vocab().len()));
                for r in 0..n {
                    prop_assert!((lm.matrix().row(r).sum() - 1.0).abs() < 1e-9);
                }
                prop_assert_eq!(stats, ingest_str(&text, IngestOptions::new(n, policy)).unwrap());
            }
            Err(seqbound::Error::EmptyCorpus) => {
                let usable = lines.iter().filter(|l| if discard { l.len() == n } else { l.len() >= n }).count();
                prop_assert_eq!(usable, 0);
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}
