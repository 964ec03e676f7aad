use amq_core::corpus::PreferredTerm;
use amq_core::corpus::*;
use amq_core::lexical::*;

fn dict(names: &[(u64, &str)]) -> Dictionary {
    Dictionary::from_terms(
        names.iter().map(|&(c, n)| PreferredTerm {
            code: TermCode(c),
            name: n.to_string(),
            group: None,
        }),
        "t",
    )
    .unwrap()
}

#[test]
fn ratio_examples() {
    assert_eq!(
        lexical_ratio("Hepatic failure", "hepatic   FAILURE").unwrap(),
        1.0
    );
    assert!((lexical_ratio("colour", "color").unwrap() - (1.0 - 1.0 / 6.0)).abs() < 1e-12);
    assert_eq!(lexical_ratio("abc", "xyz").unwrap(), 0.0);
    assert!(lexical_ratio("...", "abc").is_err());
    assert!(lexical_ratio("abc", "  ").is_err());
}

#[test]
fn best_exact_and_tie() {
    let d = dict(&[(30, "Nausea"), (10, "Hepatic failure"), (20, "Vomiting")]);
    let m = best_lexical("hepatic failure", &d).unwrap().unwrap();
    assert_eq!((m.code, m.score), (TermCode(10), 1.0));

    // "abd" and "abf" are both one edit from "abc"
    let d = dict(&[(7, "abf"), (5, "abd")]);
    let m = best_lexical("abc", &d).unwrap().unwrap();
    assert_eq!(m.code, TermCode(5));
    assert!(best_lexical("!!", &d).is_err());
    assert!(best_lexical("abc", &dict(&[])).unwrap().is_none());
}

#[test]
fn rank_is_sorted() {
    let d = dict(&[(1, "rash"), (2, "rashes"), (3, "nausea")]);
    let r = rank_lexical("rash", &d).unwrap();
    let codes: Vec<u64> = r.iter().map(|m| m.code.0).collect();
    assert_eq!(codes, vec![1, 2, 3]);
}
