use amq_core::corpus::PreferredTerm;
use amq_core::corpus::*;
use amq_core::pipeline::*;
use amq_core::threshold::ThresholdSource;
use amq_core::{EmbeddingStore, EmbeddingVector};

fn fixture(vectors: &[(u64, &str, &[f64])]) -> (Dictionary, EmbeddingStore) {
    let dict = Dictionary::from_terms(
        vectors.iter().map(|&(c, n, _)| PreferredTerm {
            code: TermCode(c),
            name: n.to_string(),
            group: None,
        }),
        "t",
    )
    .unwrap();
    let dim = vectors[0].2.len();
    let store = EmbeddingStore::from_vectors(
        dim,
        vectors
            .iter()
            .map(|&(c, _, v)| (TermCode(c), EmbeddingVector::normalize(v).unwrap())),
    )
    .unwrap();
    (dict, store)
}

/// Unit vector in the plane of e0/e1 at the given cosine to e0.
fn at_cos(c: f64) -> [f64; 3] {
    [c, (1.0 - c * c).sqrt(), 0.0]
}

#[test]
fn lexical_match_short_circuits() {
    let (d, s) = fixture(&[(1, "Nausea", &[1.0, 0.0]), (2, "Vomiting", &[0.0, 1.0])]);
    let m = match_term(
        "nausea",
        &d,
        &s,
        &ProbeTable::new(),
        &PipelineConfig::default(),
    )
    .unwrap();
    assert_eq!((m.codes, m.kind), (vec![TermCode(1)], MatchKind::Lexical));
}

#[test]
fn semantic_margin_selection() {
    // cosines to the probe e0: A 0.95, B 0.94, C 0.80
    let a = at_cos(0.95);
    let b = {
        let c: f64 = 0.94;
        [c, 0.0, (1.0 - c * c).sqrt()]
    };
    let c = {
        let c: f64 = 0.80;
        [c, -(1.0 - c * c).sqrt(), 0.0]
    };
    let (d, s) = fixture(&[(1, "alpha", &a), (2, "beta", &b), (3, "gamma", &c)]);
    let mut probes = ProbeTable::new();
    probes.insert(
        "something else",
        EmbeddingVector::normalize(&[1.0, 0.0, 0.0]).unwrap(),
    );
    let m = match_term(
        "something else",
        &d,
        &s,
        &probes,
        &PipelineConfig::default(),
    )
    .unwrap();
    assert_eq!(m.kind, MatchKind::Semantic);
    assert_eq!(m.codes, vec![TermCode(1), TermCode(2)]);
}

#[test]
fn semantic_ties_use_lowest_code_and_cap_at_top_k() {
    let e0 = [1.0, 0.0];
    let (d, s) = fixture(&[
        (40, "d", &e0),
        (10, "a", &e0),
        (30, "c", &e0),
        (20, "b", &e0),
    ]);
    let mut probes = ProbeTable::new();
    probes.insert("zzzz", EmbeddingVector::normalize(&e0).unwrap());
    let m = match_term("zzzz", &d, &s, &probes, &PipelineConfig::default()).unwrap();
    assert_eq!(m.codes, vec![TermCode(10), TermCode(20), TermCode(30)]);
}

#[test]
fn missing_embedding_is_match_stage_error() {
    let (d, s) = fixture(&[(1, "Nausea", &[1.0, 0.0])]);
    let err = match_term(
        "headache",
        &d,
        &s,
        &ProbeTable::new(),
        &PipelineConfig::default(),
    )
    .unwrap_err();
    assert_eq!(err.stage(), "match");
}

#[test]
fn probe_building() {
    let (_, s) = fixture(&[(1, "a", &[1.0, 0.0]), (2, "b", &[0.0, 1.0])]);
    let (v, k) = build_probe(&[TermCode(1)], &s).unwrap();
    assert_eq!((v.values(), k), (&[1.0, 0.0][..], ProbeKind::Single));
    let (v, k) = build_probe(&[TermCode(1), TermCode(2)], &s).unwrap();
    assert_eq!(k, ProbeKind::Composite);
    assert!((v.values()[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    let (v, k) = build_probe(&[TermCode(2), TermCode(2)], &s).unwrap();
    assert_eq!((v.values(), k), (&[0.0, 1.0][..], ProbeKind::Single));
}

#[test]
fn antipodal_seeds_fail_in_probe_stage() {
    let (_, s) = fixture(&[(1, "a", &[1.0, 0.0]), (2, "b", &[-1.0, 0.0])]);
    let err = build_probe(&[TermCode(1), TermCode(2)], &s).unwrap_err();
    assert_eq!(err.stage(), "probe");
}

#[test]
fn exact_term_query_with_manual_threshold() {
    let (d, s) = fixture(&[
        (1, "Hepatic failure", &at_cos(1.0)),
        (2, "Jaundice", &at_cos(0.8)),
        (3, "Nausea", &at_cos(0.1)),
    ]);
    let input = QueryInput::new(["Hepatic failure"]).with_config(PipelineConfig {
        manual_threshold: Some(0.99),
        ..Default::default()
    });
    let r = run_query(&input, &d, &s, &ProbeTable::new()).unwrap();
    let kept: Vec<_> = r.retained().collect();
    assert_eq!(kept.len(), 1);
    assert_eq!((kept[0].code, kept[0].rank), (TermCode(1), 1));
    assert!((kept[0].sim_best_pt - 1.0).abs() < 1e-12);
    assert_eq!(r.decision.source, ThresholdSource::Manual);
    let ranks: Vec<usize> = r.all_scored.iter().map(|t| t.rank).collect();
    assert_eq!(ranks, vec![1, 2, 3]);
}

#[test]
fn apply_threshold_extremes_and_nesting() {
    let (d, s) = fixture(&[
        (1, "a", &at_cos(1.0)),
        (2, "b", &at_cos(0.7)),
        (3, "c", &at_cos(0.4)),
        (4, "d", &at_cos(-0.2)),
    ]);
    let cfg = PipelineConfig {
        include_matched_seeds: false,
        ..Default::default()
    };
    let r = run_query(
        &QueryInput::new(["a"]).with_config(cfg),
        &d,
        &s,
        &ProbeTable::new(),
    )
    .unwrap();
    assert_eq!(r.apply_threshold(1.5).retained().count(), 0);
    assert_eq!(r.apply_threshold(-1.0).retained().count(), 4);
    let lo = r.apply_threshold(0.3).retained_codes();
    let hi = r.apply_threshold(0.6).retained_codes();
    assert!(hi.is_subset(&lo));
    assert_eq!(
        r.apply_threshold(0.6).decision.source,
        ThresholdSource::Manual
    );
}

#[test]
fn seeds_are_forced_into_retained() {
    let (d, s) = fixture(&[(1, "a", &at_cos(1.0)), (2, "b", &at_cos(0.5))]);
    let r = run_query(&QueryInput::new(["a"]), &d, &s, &ProbeTable::new()).unwrap();
    assert!(r
        .apply_threshold(1.5)
        .retained_codes()
        .contains(&TermCode(1)));
}

#[test]
fn config_validation() {
    let c = PipelineConfig {
        semantic_top_k: 4,
        ..Default::default()
    };
    assert!(c.validate().is_err());
    let c = PipelineConfig {
        lexical_cutoff: 0.0,
        ..Default::default()
    };
    assert!(c.validate().is_err());
    let c = PipelineConfig {
        manual_threshold: Some(2.0),
        ..Default::default()
    };
    assert!(c.validate().is_err());
    let err = serde_json::from_str::<PipelineConfig>(r#"{"lexical_cutof": 0.8}"#).unwrap_err();
    assert!(err.to_string().contains("lexical_cutof"));
}

#[test]
fn query_input_validation() {
    assert!(matches!(
        QueryInput::new(Vec::<String>::new()).validate(),
        Err(PipelineError::NoTerms)
    ));
    assert!(matches!(
        QueryInput::new(["  ;"]).validate(),
        Err(PipelineError::EmptyTerm(_))
    ));
}

#[test]
fn max_probe_seeds_scoring_dominates_probe_scoring() {
    let (d, s) = fixture(&[
        (1, "a", &[1.0, 0.0, 0.0]),
        (2, "b", &[0.0, 1.0, 0.0]),
        (3, "c", &[0.9, 0.1, 0.3]),
        (4, "d", &[0.0, 0.2, 0.9]),
    ]);
    let run = |mode| {
        let cfg = PipelineConfig {
            score_against: mode,
            ..Default::default()
        };
        run_query(
            &QueryInput::new(["a", "b"]).with_config(cfg),
            &d,
            &s,
            &ProbeTable::new(),
        )
        .unwrap()
    };
    let probe = run(ScoreAgainst::Probe);
    let maxed = run(ScoreAgainst::MaxProbeSeeds);
    assert_eq!(probe.probe_kind, ProbeKind::Composite);
    for t in &probe.all_scored {
        let m = maxed.all_scored.iter().find(|x| x.code == t.code).unwrap();
        assert!(m.sim_best_pt >= t.sim_best_pt);
    }
}

#[test]
fn probe_table_parsing() {
    let t = ProbeTable::parse_tsv("# comment\nLow sugar\t3,4\n\n").unwrap();
    assert_eq!(t.embed("low  SUGAR").unwrap().values(), &[0.6, 0.8]);
    assert!(ProbeTable::parse_tsv("no tab here\n").is_err());
    assert!(ProbeTable::parse_tsv("x\t1,abc\n").is_err());
    assert!(ProbeTable::parse_tsv("x\t0,0\n").is_err());
    let again = ProbeTable::parse_tsv(&t.to_tsv()).unwrap();
    assert_eq!(again, t);
}
