mod common;

use std::collections::BTreeMap;

use common::{lcs_oracle, lev_oracle};

use num_rational::Ratio;
use proptest::prelude::*;
use tooleval_core::dataset::{allocate, build_train_split, rollout_expand, stratified_split, Fraction, Label, LabeledDialogue, SplitSpec};
use tooleval_core::injector::Injector;
use tooleval_core::metrics::{
    detection_metrics, fuzzy_score, lcs_len, levenshtein, match_tool_call, normalize, rouge_l, rouge_tokens, DEFAULT_FUZZY_THRESHOLD,
    NO_ERROR_INDEX,
};
use tooleval_core::synth::{default_pool, generate};
use tooleval_core::{ErrorCategory, ToolCall};

fn text() -> impl Strategy<Value = String> {
    proptest::string::string_regex("[abc ,.A-C]{0,14}").unwrap()
}

fn sentence() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop::sample::select(vec!["the", "bus", "Bus", "leaves", "at", "6:40", "am", "seattle.", "ok"]), 0..11)
        .prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn levenshtein_matches_recursion(a in text(), b in text()) {
        let (a, b): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
        prop_assert_eq!(levenshtein(&a, &b), lev_oracle(&a, &b));
        prop_assert_eq!(levenshtein(&a, &b), levenshtein(&b, &a));
    }

    #[test]
    fn fuzzy_score_matches_recursion(a in text(), b in text()) {
        let (na, nb): (Vec<char>, Vec<char>) = (normalize(&a).chars().collect(), normalize(&b).chars().collect());
        let longest = na.len().max(nb.len());
        let expected = if longest == 0 { 1.0 } else { 1.0 - lev_oracle(&na, &nb) as f64 / longest as f64 };
        prop_assert_eq!(fuzzy_score(&a, &b), expected);
        prop_assert!((0.0..=1.0).contains(&expected));
    }

    #[test]
    fn rouge_matches_enumeration(c in sentence(), r in sentence()) {
        let (ct, rt) = (rouge_tokens(&c), rouge_tokens(&r));
        let lcs = lcs_oracle(&ct, &rt);
        prop_assert_eq!(lcs_len(&ct, &rt), lcs);
        let s = rouge_l(&c, &r);
        let (p, rec) = match (ct.len(), rt.len()) {
            (0, 0) => (1.0, 1.0),
            (0, _) | (_, 0) => (0.0, 0.0),
            (n, m) => (lcs as f64 / n as f64, lcs as f64 / m as f64),
        };
        prop_assert_eq!(s.precision, p);
        prop_assert_eq!(s.recall, rec);
        let f1 = if p + rec > 0.0 { 2.0 * p * rec / (p + rec) } else { 0.0 };
        prop_assert_eq!(s.f1, f1);
    }
}

fn bus_call() -> impl Strategy<Value = ToolCall> {
    let city = prop::sample::select(vec!["Vancouver", "vancouver", "Vancuver", "Seattle", "Portland"]);
    let date = prop::sample::select(vec!["2019-03-12", "2019-03-13", "March 12"]);
    let travelers = proptest::option::of(prop::sample::select(vec!["1", "2", " 1 "]));
    (proptest::option::of(city.clone()), city, date, travelers).prop_map(|(from, to, date, n)| {
        let mut call = ToolCall::new("FindBus").arg("to_location", to).arg("leaving_date", date);
        if let Some(f) = from {
            call = call.arg("from_location", f);
        }
        if let Some(n) = n {
            call = call.arg("travelers", n);
        }
        call
    })
}

fn fraction() -> impl Strategy<Value = [Fraction; 3]> {
    (1u64..20, 0u64..20, 0u64..20).prop_map(|(a, b, c)| {
        let n = a + b + c;
        [Ratio::new(a, n), Ratio::new(b, n), Ratio::new(c, n)]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn matching_is_symmetric(p in bus_call(), g in bus_call()) {
        let pool = default_pool();
        let ab = match_tool_call(&p, &g, &pool, DEFAULT_FUZZY_THRESHOLD).unwrap();
        let ba = match_tool_call(&g, &p, &pool, DEFAULT_FUZZY_THRESHOLD).unwrap();
        prop_assert_eq!(ab.matched, ba.matched);
        prop_assert!(match_tool_call(&p, &p, &pool, DEFAULT_FUZZY_THRESHOLD).unwrap().matched || !p.args.contains_key("from_location"));
    }

    #[test]
    fn allocation_is_within_one(n in 0usize..2000, f in fraction()) {
        let parts = allocate(n, f);
        prop_assert_eq!(parts.iter().sum::<usize>(), n);
        for (count, frac) in parts.iter().zip(f) {
            let exact = frac * Ratio::from_integer(n as u64);
            let diff = Ratio::from_integer(*count as u64) - exact.floor();
            prop_assert!(diff == Ratio::from_integer(0) || diff == Ratio::from_integer(1));
        }
    }

    #[test]
    fn stratified_split_is_a_deterministic_partition(
        sizes in proptest::collection::vec(3usize..60, 1..6),
        seed in any::<u64>(),
    ) {
        let items: Vec<(usize, usize)> = sizes.iter().enumerate().flat_map(|(s, &n)| (0..n).map(move |i| (s, i))).collect();
        let spec = SplitSpec::standard(seed);
        let key = |x: &(usize, usize)| format!("s{}", x.0);
        let a = stratified_split(items.clone(), key, &spec).unwrap();
        let b = stratified_split(items.clone(), key, &spec).unwrap();
        prop_assert_eq!(&a, &b);
        let mut all: Vec<_> = a.train.iter().chain(&a.eval).chain(&a.test).copied().collect();
        all.sort();
        prop_assert_eq!(all, items);
        for (s, &n) in sizes.iter().enumerate() {
            let count = |v: &Vec<(usize, usize)>| v.iter().filter(|x| x.0 == s).count() as i64;
            let want = [spec.train, spec.eval, spec.test].map(|f| f * Ratio::from_integer(n as u64));
            for (got, w) in [count(&a.train), count(&a.eval), count(&a.test)].into_iter().zip(want) {
                let w = *w.numer() as f64 / *w.denom() as f64;
                prop_assert!((got as f64 - w).abs() < 1.0, "stratum {s}: {got} vs {w}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn balanced_train_split_and_rollouts(seed in any::<u64>(), corpus_seed in 0u64..1000) {
        let pool = default_pool();
        let corpus = generate(48, corpus_seed);
        let (sources, clean) = corpus.split_at(24);
        let injector = Injector::new(pool, &corpus);
        let injected = injector.inject_all(sources, 2, seed).unwrap();
        prop_assert_eq!(injected.len(), 16);
        let train = build_train_split(&injected, clean, seed).unwrap();
        let pos = train.iter().filter(|d| d.label.category().is_some()).count();
        prop_assert_eq!(pos, 16);
        prop_assert_eq!(train.len() - pos, 16);

        for item in injected.iter().map(LabeledDialogue::injected).chain(clean.iter().map(LabeledDialogue::clean)) {
            let k = item.dialogue.len();
            let points = rollout_expand(&item);
            prop_assert_eq!(points.len(), k);
            for (i, p) in points.iter().enumerate() {
                prop_assert_eq!(p.k, i + 1);
                prop_assert_eq!(p.prefix.len(), i + 1);
                if i + 1 < k {
                    prop_assert_eq!(&p.label, &Label::NoError);
                } else {
                    prop_assert_eq!(&p.label, &item.label);
                }
            }
        }
    }

    #[test]
    fn detection_rates_follow_the_confusion_matrix(
        pairs in proptest::collection::vec((0usize..9, 0usize..9), 0..200),
    ) {
        let cat = |i: usize| (i != NO_ERROR_INDEX).then(|| ErrorCategory::ALL[i]);
        let pred: Vec<_> = pairs.iter().map(|p| cat(p.0)).collect();
        let truth: Vec<_> = pairs.iter().map(|p| cat(p.1)).collect();
        let s = detection_metrics(&pred, &truth).unwrap();
        let mut tally: BTreeMap<(bool, bool), u64> = BTreeMap::new();
        for (p, t) in pred.iter().zip(&truth) {
            *tally.entry((p.is_some(), t.is_some())).or_default() += 1;
        }
        let get = |k| tally.get(&k).copied().unwrap_or(0);
        let (tp, fp, fn_) = (get((true, true)), get((true, false)), get((false, true)));
        let rate = |n: u64, d: u64| if d == 0 { Ratio::from_integer(1) } else { Ratio::new(n, d) };
        prop_assert_eq!(s.precision, rate(tp, tp + fp));
        prop_assert_eq!(s.recall, rate(tp, tp + fn_));
        prop_assert_eq!(s.total(), pairs.len() as u64);
    }
}
