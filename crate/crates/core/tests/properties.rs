use lss_core::dataset::{clean, AnnotatedExample, Split};
use lss_core::generator::project_to_subsequence;
use lss_core::stats::{pearson, quadratic_weighted_kappa, spearman};
use lss_core::{
    bleu, is_subsequence, lcs, lcs_length, rouge_l, tokenize, word_prf, BleuConfig,
    NormalizationPolicy, TokenSequence,
};
use proptest::prelude::*;

fn seq(tokens: &[u8]) -> TokenSequence {
    TokenSequence::try_from(tokens.iter().map(|t| format!("t{t}")).collect::<Vec<_>>()).unwrap()
}

/// Longest common subsequence by enumerating every subsequence of `a`.
fn brute_lcs(a: &[u8], b: &[u8]) -> usize {
    let contains = |sub: &[u8]| {
        let mut it = b.iter();
        sub.iter().all(|x| it.any(|y| y == x))
    };
    (0u32..1 << a.len())
        .filter_map(|mask| {
            let sub: Vec<u8> = (0..a.len())
                .filter(|i| mask & (1 << i) != 0)
                .map(|i| a[i])
                .collect();
            contains(&sub).then_some(sub.len())
        })
        .max()
        .unwrap_or(0)
}

fn small() -> impl Strategy<Value = Vec<u8>> {
    prop::collection::vec(0u8..4, 0..=8)
}

fn text() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop_oneof![
            "[a-zA-Z]{1,6}",
            "[.,!?;:'\"()]{1,2}",
            "[a-z]{1,4}[.,]",
            Just("Ünïcode".to_string())
        ],
        0..12,
    )
    .prop_map(|w| w.join(" "))
}

proptest! {
    #[test]
    fn lcs_matches_brute_force(a in small(), b in small()) {
        let (sa, sb) = (seq(&a), seq(&b));
        let n = brute_lcs(&a, &b);
        prop_assert_eq!(lcs_length(&sa, &sb), n);
        let witness = lcs(&sa, &sb);
        prop_assert_eq!(witness.len(), n);
        prop_assert!(is_subsequence(&witness, &sa));
        prop_assert!(is_subsequence(&witness, &sb));
    }

    #[test]
    fn lcs_length_is_symmetric(a in prop::collection::vec(0u8..6, 0..40), b in prop::collection::vec(0u8..6, 0..40)) {
        prop_assert_eq!(lcs_length(&seq(&a), &seq(&b)), lcs_length(&seq(&b), &seq(&a)));
    }

    #[test]
    fn tokenize_is_idempotent(s in text()) {
        let p = NormalizationPolicy::default();
        let once = tokenize(&s, p);
        prop_assert_eq!(tokenize(&once.join(), p), once);
    }

    #[test]
    fn rouge_l_agrees_with_materialized_lcs(a in prop::collection::vec(0u8..5, 1..20), b in prop::collection::vec(0u8..5, 1..20)) {
        let (sa, sb) = (seq(&a), seq(&b));
        let l = lcs(&sa, &sb).len() as f64;
        let r = rouge_l(&sa, &sb);
        prop_assert!((r.precision.unwrap() - l / a.len() as f64).abs() < 1e-12);
        prop_assert!((r.recall.unwrap() - l / b.len() as f64).abs() < 1e-12);
    }

    #[test]
    fn word_f1_is_swap_symmetric(a in prop::collection::vec(0u8..5, 0..15), b in prop::collection::vec(0u8..5, 0..15)) {
        let (sa, sb) = (seq(&a), seq(&b));
        let (x, y) = (word_prf(&sa, &sb), word_prf(&sb, &sa));
        prop_assert!((x.value() - y.value()).abs() < 1e-12);
        prop_assert_eq!(x.precision, y.recall);
    }

    /// Truncating a perfect hypothesis only ever lowers BLEU via brevity.
    #[test]
    fn brevity_penalty_monotone(r in prop::collection::vec(0u8..50, 4..25), cut in 1usize..4) {
        let reference = seq(&r);
        let cfg = BleuConfig::default();
        let full = bleu(&reference, &reference, cfg).value();
        let shorter = bleu(&seq(&r[..r.len() - cut]), &reference, cfg).value();
        prop_assert_eq!(full, 1.0);
        prop_assert!(shorter <= full);
    }

    #[test]
    fn pearson_affine_invariance(
        x in prop::collection::vec(-100.0f64..100.0, 3..30),
        y in prop::collection::vec(-100.0f64..100.0, 3..30),
        a in prop_oneof![-10.0f64..-0.1, 0.1f64..10.0],
        b in -50.0f64..50.0,
    ) {
        let n = x.len().min(y.len());
        let (x, y) = (&x[..n], &y[..n]);
        if let Ok(r) = pearson(x, y) {
            let ax: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            let r2 = pearson(&ax, y).unwrap();
            prop_assert!((r2 - a.signum() * r).abs() < 1e-9);
        }
    }

    #[test]
    fn spearman_monotone_invariance(x in prop::collection::vec(-5.0f64..5.0, 3..30), seed in any::<u64>()) {
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| ((i as u64 ^ seed) % 7) as f64 + v * 0.1).collect();
        if let Ok(r) = spearman(&x, &y) {
            let tx: Vec<f64> = x.iter().map(|v| v.exp() * 3.0 + v * v * v).collect();
            prop_assert!((spearman(&tx, &y).unwrap() - r).abs() < 1e-12);
        }
    }

    #[test]
    fn qwk_symmetric(pairs in prop::collection::vec((1u32..=5, 1u32..=5), 2..50)) {
        let (a, b): (Vec<u32>, Vec<u32>) = pairs.into_iter().unzip();
        match (quadratic_weighted_kappa(&a, &b, 5), quadratic_weighted_kappa(&b, &a, 5)) {
            (Ok(x), Ok(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x.is_err(), y.is_err()),
        }
    }

    #[test]
    fn clean_is_idempotent(refs in prop::collection::vec("[A-Za-z \t\u{200b}\u{00ad}.\n]{0,30}", 1..6)) {
        let examples: Vec<AnnotatedExample> = refs
            .iter()
            .enumerate()
            .map(|(i, r)| AnnotatedExample {
                id: i.to_string(),
                reference: r.clone(),
                claim: format!("{r}\u{200b} claim"),
                lss: String::new(),
                lss_star: None,
                rating: None,
                split: Split::Train,
            })
            .collect();
        let (once, _) = clean(examples);
        let (twice, report) = clean(once.clone());
        prop_assert_eq!(&twice, &once);
        prop_assert_eq!(report.whitespace_normalized + report.special_chars_removed + report.dropped_mid_sentence, 0);
    }

    #[test]
    fn projection_is_a_longest_subsequence(raw in small(), claim in small()) {
        let p = NormalizationPolicy::RAW;
        let raw_text = seq(&raw).join();
        let claim = seq(&claim);
        let out = project_to_subsequence(&raw_text, &claim, p);
        prop_assert!(is_subsequence(&out, &claim));
        prop_assert_eq!(out.len(), brute_lcs(&raw, &claim.iter().map(|t| t[1..].parse().unwrap()).collect::<Vec<u8>>()));
    }
}
