use tooleval_core::critic::oracle_critic;
use tooleval_core::injector::{verify_provenance, Injector, Templates};
use tooleval_core::metrics::DEFAULT_FUZZY_THRESHOLD;
use tooleval_core::synth::{default_pool, generate};

#[test]
fn oracle_recovers_every_injected_category() {
    let pool = default_pool();
    let corpus = generate(600, 11);
    let injector = Injector::new(pool.clone(), &corpus);
    let injected = injector.inject_all(&corpus, 300, 5).expect("enough viable sources");
    assert_eq!(injected.len(), 2400);
    let templates = Templates::default();
    let mut misses = Vec::new();
    for inj in &injected {
        let source = corpus.iter().find(|d| d.id == inj.provenance.source_id).unwrap();
        assert!(verify_provenance(inj, source, &pool), "{}", inj.dialogue.id);
        let v = oracle_critic(&inj.dialogue, source, &pool, &templates, DEFAULT_FUZZY_THRESHOLD).unwrap();
        if v.category() != Some(inj.label.category) {
            misses.push((inj.dialogue.id.clone(), v.category()));
        }
    }
    assert!(misses.is_empty(), "{} misses, e.g. {:?}", misses.len(), &misses[..misses.len().min(5)]);
}

#[test]
fn oracle_is_silent_on_clean_prefixes() {
    let pool = default_pool();
    let corpus = generate(100, 3);
    let templates = Templates::default();
    for d in &corpus {
        for k in 1..=d.len() {
            let p = d.prefix(k).unwrap();
            let v = oracle_critic(&p, d, &pool, &templates, DEFAULT_FUZZY_THRESHOLD).unwrap();
            assert!(!v.is_detected());
        }
    }
}
