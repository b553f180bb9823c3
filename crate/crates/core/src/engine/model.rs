use std::collections::BTreeMap;

use super::EngineError;
use crate::ast::{Model, NormalizedFormula, StrVar, SubtermConstraint};

/// Extend words for the live variables of a satisfied leaf to every
/// variable defined by its subterm constraints.
pub fn extract_model(leaf: &NormalizedFormula, live: &Model) -> Result<Model, EngineError> {
    let mut words: BTreeMap<StrVar, String> = live.strings.clone();
    let mut pending: Vec<&SubtermConstraint> = leaf.subterms.iter().collect();
    while !pending.is_empty() {
        let before = pending.len();
        let mut rest = Vec::new();
        for c in pending {
            // a component never defined and never live is unconstrained
            let get = |v: &StrVar, words: &BTreeMap<StrVar, String>| -> Option<String> {
                match words.get(v) {
                    Some(w) => Some(w.clone()),
                    None if !leaf.subterms.iter().any(|d| d.defined() == v) => Some(String::new()),
                    None => None,
                }
            };
            let value = match c {
                SubtermConstraint::EpsBind(_) => Some(String::new()),
                SubtermConstraint::CharPrefix { head, tail, .. } => get(tail, &words).map(|t| format!("{head}{t}")),
                SubtermConstraint::Split { prefix, suffix, .. } => {
                    match (get(prefix, &words), get(suffix, &words)) {
                        (Some(p), Some(s)) => Some(p + &s),
                        _ => None,
                    }
                }
                SubtermConstraint::Alias { rhs, .. } => get(rhs, &words),
            };
            match value {
                Some(w) => {
                    if let Some(old) = words.insert(c.defined().clone(), w.clone()) {
                        if old != w {
                            return Err(EngineError::Internal(format!(
                                "conflicting values for {}: {old:?} and {w:?}",
                                c.defined()
                            )));
                        }
                    }
                }
                None => rest.push(c),
            }
        }
        if rest.len() == before {
            return Err(EngineError::Internal("cyclic subterm constraints".into()));
        }
        pending = rest;
    }
    Ok(Model { strings: words, ints: live.ints.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> StrVar {
        StrVar::new(s)
    }

    #[test]
    fn resolves_chains() {
        let leaf = NormalizedFormula {
            subterms: vec![
                SubtermConstraint::Alias { lhs: v("s"), rhs: v("u1") },
                SubtermConstraint::CharPrefix { outer: v("u1"), head: 'a', tail: v("u2") },
                SubtermConstraint::Split { outer: v("u2"), prefix: v("x"), suffix: v("y") },
                SubtermConstraint::EpsBind(v("y")),
            ],
            ..Default::default()
        };
        let live = Model { strings: BTreeMap::from([(v("x"), "bb".to_string())]), ..Default::default() };
        let m = extract_model(&leaf, &live).unwrap();
        assert_eq!(m.strings[&v("s")], "abb");
    }

    #[test]
    fn cycles_are_errors() {
        let leaf = NormalizedFormula {
            subterms: vec![
                SubtermConstraint::Alias { lhs: v("a"), rhs: v("b") },
                SubtermConstraint::Alias { lhs: v("b"), rhs: v("a") },
            ],
            ..Default::default()
        };
        assert!(extract_model(&leaf, &Model::default()).is_err());
    }
}
