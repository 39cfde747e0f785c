//! Bias classes: subclasses with their target terms, equality sets and
//! attribute sets, plus resolution of those words against a store.
//!
//! Words are lowercased on load and looked up exactly. When the lowercase
//! form is missing from the store, one more lookup with the casing written
//! in the lexicon is tried (word2vec vocabularies are mixed-case).

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::metrics::WordSet;

/// Religion lexicon bundled with the crate (Christianity, Islam, Judaism).
pub const RELIGION_LEXICON_JSON: &str = include_str!("../data/religion.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subclass {
    pub name: String,
    pub targets: Vec<String>,
}

/// One term per subclass, in subclass order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EqualitySet {
    pub terms: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributeSet {
    pub name: String,
    pub words: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLexicon {
    class: String,
    subclasses: Vec<Subclass>,
    equality_sets: Vec<Vec<String>>,
    attribute_sets: Vec<AttributeSet>,
}

/// A validated bias class. All words are stored lowercased.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasLexicon {
    class_name: String,
    subclasses: Vec<Subclass>,
    equality_sets: Vec<EqualitySet>,
    attribute_sets: Vec<AttributeSet>,
    surface: HashMap<String, String>,
}

fn lexicon_err(field: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Lexicon {
        field: field.into(),
        message: message.into(),
    }
}

impl BiasLexicon {
    pub fn new(
        class_name: impl Into<String>,
        subclasses: Vec<Subclass>,
        equality_sets: Vec<EqualitySet>,
        attribute_sets: Vec<AttributeSet>,
    ) -> Result<Self> {
        let mut surface = HashMap::new();
        let mut canon = |field: &str, w: &str| -> Result<String> {
            if w.is_empty() {
                return Err(lexicon_err(field, "empty word"));
            }
            if w.chars().any(char::is_whitespace) {
                return Err(lexicon_err(field, format!("multi-token entry {w:?} is not supported")));
            }
            let lower = w.to_lowercase();
            if lower != w {
                surface.entry(lower.clone()).or_insert_with(|| w.to_string());
            }
            Ok(lower)
        };

        let class_name = class_name.into();
        if class_name.trim().is_empty() {
            return Err(lexicon_err("class", "empty class name"));
        }
        if subclasses.len() < 2 {
            return Err(lexicon_err(
                "subclasses",
                format!("need at least 2 subclasses, found {}", subclasses.len()),
            ));
        }

        let mut names = HashSet::new();
        let mut subs = Vec::with_capacity(subclasses.len());
        for (i, s) in subclasses.into_iter().enumerate() {
            let field = format!("subclasses[{i}]");
            if s.name.is_empty() || !names.insert(s.name.clone()) {
                return Err(lexicon_err(format!("{field}.name"), format!("missing or duplicate name {:?}", s.name)));
            }
            if s.targets.is_empty() {
                return Err(lexicon_err(format!("{field}.targets"), "target set is empty"));
            }
            let mut seen = HashSet::new();
            let mut targets = Vec::with_capacity(s.targets.len());
            for t in &s.targets {
                let t = canon(&format!("{field}.targets"), t)?;
                if !seen.insert(t.clone()) {
                    return Err(lexicon_err(format!("{field}.targets"), format!("duplicate target {t:?}")));
                }
                targets.push(t);
            }
            subs.push(Subclass { name: s.name, targets });
        }

        let mut eq = Vec::with_capacity(equality_sets.len());
        for (i, e) in equality_sets.into_iter().enumerate() {
            let field = format!("equality_sets[{i}]");
            if e.terms.len() != subs.len() {
                return Err(lexicon_err(
                    field,
                    format!("has {} terms but there are {} subclasses", e.terms.len(), subs.len()),
                ));
            }
            let terms = e.terms.iter().map(|t| canon(&field, t)).collect::<Result<Vec<_>>>()?;
            eq.push(EqualitySet { terms });
        }

        let mut attr_names = HashSet::new();
        let mut attrs = Vec::with_capacity(attribute_sets.len());
        for (i, a) in attribute_sets.into_iter().enumerate() {
            let field = format!("attribute_sets[{i}]");
            if a.name.is_empty() || !attr_names.insert(a.name.clone()) {
                return Err(lexicon_err(format!("{field}.name"), format!("missing or duplicate name {:?}", a.name)));
            }
            if a.words.is_empty() {
                return Err(lexicon_err(format!("{field}.words"), "attribute set is empty"));
            }
            let words = a
                .words
                .iter()
                .map(|w| canon(&format!("{field}.words"), w))
                .collect::<Result<Vec<_>>>()?;
            attrs.push(AttributeSet { name: a.name, words });
        }

        Ok(Self {
            class_name,
            subclasses: subs,
            equality_sets: eq,
            attribute_sets: attrs,
            surface,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawLexicon = serde_json::from_str(text).map_err(|e| lexicon_err("<document>", e.to_string()))?;
        Self::new(
            raw.class,
            raw.subclasses,
            raw.equality_sets.into_iter().map(|terms| EqualitySet { terms }).collect(),
            raw.attribute_sets,
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Lexicon { field, message } => Error::Lexicon {
                field: format!("{}: {field}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn religion() -> Self {
        Self::from_json(RELIGION_LEXICON_JSON).expect("bundled lexicon is valid")
    }

    pub fn to_json(&self) -> String {
        let value = serde_json::json!({
            "class": self.class_name,
            "subclasses": self.subclasses,
            "equality_sets": self.equality_sets,
            "attribute_sets": self.attribute_sets,
        });
        serde_json::to_string_pretty(&value).expect("lexicon serializes")
    }

    pub fn class_name(&self) -> &str {
        &self.class_name
    }

    pub fn subclasses(&self) -> &[Subclass] {
        &self.subclasses
    }

    pub fn equality_sets(&self) -> &[EqualitySet] {
        &self.equality_sets
    }

    pub fn attribute_sets(&self) -> &[AttributeSet] {
        &self.attribute_sets
    }

    /// Casing the word was written with, when it differs from the stored form.
    pub fn surface_form<'a>(&'a self, word: &'a str) -> &'a str {
        self.surface.get(word).map_or(word, String::as_str)
    }

    /// Map every word onto a store row, dropping what is missing.
    pub fn resolve(&self, store: &EmbeddingStore) -> Result<ResolvedLexicon> {
        let mut report = ResolutionReport::default();
        let find = |w: &str| lookup_term(store, w, self.surface_form(w));

        let mut subclasses = Vec::with_capacity(self.subclasses.len());
        for s in &self.subclasses {
            let mut targets = Vec::new();
            for t in &s.targets {
                match find(t) {
                    Some(rt) => targets.push(rt),
                    None => report.dropped_targets.push(format!("{}/{t}", s.name)),
                }
            }
            if targets.is_empty() {
                return Err(Error::Resolution(format!(
                    "no target term of subclass {:?} is in the vocabulary",
                    s.name
                )));
            }
            subclasses.push(ResolvedSubclass {
                name: s.name.clone(),
                targets,
            });
        }

        let mut equality_sets = Vec::new();
        for e in &self.equality_sets {
            let resolved: Option<Vec<_>> = e.terms.iter().map(|t| find(t)).collect();
            match resolved {
                Some(r) => equality_sets.push(r),
                None => report.dropped_equality_sets.push(e.terms.join(",")),
            }
        }
        if equality_sets.is_empty() {
            return Err(Error::Resolution(
                "no equality set has all of its terms in the vocabulary; hard debiasing is impossible".into(),
            ));
        }

        let mut attribute_sets = Vec::new();
        for a in &self.attribute_sets {
            let mut words = Vec::new();
            for w in &a.words {
                match find(w) {
                    Some(rt) => words.push(rt),
                    None => report.dropped_attribute_words.push(format!("{}/{w}", a.name)),
                }
            }
            if words.is_empty() {
                report.dropped_attribute_sets.push(a.name.clone());
            } else {
                attribute_sets.push(ResolvedAttributeSet {
                    name: a.name.clone(),
                    words,
                });
            }
        }

        for w in &report.dropped_targets {
            log::warn!("out-of-vocabulary target dropped: {w}");
        }
        for w in &report.dropped_attribute_words {
            log::warn!("out-of-vocabulary attribute word dropped: {w}");
        }
        for e in &report.dropped_equality_sets {
            log::warn!("incomplete equality set dropped: ({e})");
        }
        for a in &report.dropped_attribute_sets {
            log::warn!("attribute set {a:?} has no word in the vocabulary and was dropped");
        }

        Ok(ResolvedLexicon {
            class_name: self.class_name.clone(),
            subclasses,
            equality_sets,
            attribute_sets,
            report,
        })
    }
}

/// Lowercase exact match first, then the original casing.
pub fn lookup_term(store: &EmbeddingStore, lower: &str, surface: &str) -> Option<ResolvedTerm> {
    store
        .index_of(lower)
        .or_else(|| (surface != lower).then(|| store.index_of(surface)).flatten())
        .map(|index| ResolvedTerm {
            word: store.word(index).to_string(),
            index,
        })
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ResolvedTerm {
    /// The vocabulary entry that matched.
    pub word: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedSubclass {
    pub name: String,
    pub targets: Vec<ResolvedTerm>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedAttributeSet {
    pub name: String,
    pub words: Vec<ResolvedTerm>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResolutionReport {
    pub dropped_targets: Vec<String>,
    pub dropped_attribute_words: Vec<String>,
    pub dropped_attribute_sets: Vec<String>,
    pub dropped_equality_sets: Vec<String>,
}

impl ResolutionReport {
    pub fn total_dropped_words(&self) -> usize {
        self.dropped_targets.len() + self.dropped_attribute_words.len()
    }
}

/// A lexicon whose words all exist in one particular store (or in any store
/// sharing its vocabulary, such as a debiased copy).
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedLexicon {
    pub class_name: String,
    pub subclasses: Vec<ResolvedSubclass>,
    pub equality_sets: Vec<Vec<ResolvedTerm>>,
    pub attribute_sets: Vec<ResolvedAttributeSet>,
    pub report: ResolutionReport,
}

fn word_set<'a>(store: &'a EmbeddingStore, terms: &[ResolvedTerm]) -> WordSet<'a> {
    WordSet::new(
        terms.iter().map(|t| t.word.clone()).collect(),
        terms.iter().map(|t| store.row(t.index)).collect(),
    )
}

impl ResolvedLexicon {
    pub fn target_set<'a>(&self, store: &'a EmbeddingStore, subclass: usize) -> WordSet<'a> {
        word_set(store, &self.subclasses[subclass].targets)
    }

    pub fn attribute_set<'a>(&self, store: &'a EmbeddingStore, set: usize) -> WordSet<'a> {
        word_set(store, &self.attribute_sets[set].words)
    }

    pub fn target_sets<'a>(&self, store: &'a EmbeddingStore) -> Vec<WordSet<'a>> {
        (0..self.subclasses.len()).map(|i| self.target_set(store, i)).collect()
    }

    pub fn attribute_sets_of<'a>(&self, store: &'a EmbeddingStore) -> Vec<WordSet<'a>> {
        (0..self.attribute_sets.len()).map(|i| self.attribute_set(store, i)).collect()
    }

    pub fn subclass_names(&self) -> Vec<String> {
        self.subclasses.iter().map(|s| s.name.clone()).collect()
    }

    /// Row indices of every target term and equality-set term, sorted and
    /// deduplicated. These are the identity words that keep their bias
    /// component under hard debiasing and feed the conceptor.
    pub fn identity_indices(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .subclasses
            .iter()
            .flat_map(|s| s.targets.iter())
            .chain(self.equality_sets.iter().flatten())
            .map(|t| t.index)
            .collect();
        set.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> &'static str {
        r#"{
            "class": "religion",
            "subclasses": [
                {"name": "christianity", "targets": ["Church", "bible"]},
                {"name": "islam", "targets": ["mosque", "quran"]}
            ],
            "equality_sets": [["church", "mosque"]],
            "attribute_sets": [
                {"name": "pleasant", "words": ["joy", "love"]},
                {"name": "unpleasant", "words": ["agony"]}
            ]
        }"#
    }

    fn store(words: &[&str]) -> EmbeddingStore {
        EmbeddingStore::from_rows(
            2,
            words.iter().enumerate().map(|(i, w)| (w.to_string(), vec![i as f64 + 1.0, 1.0])),
        )
        .unwrap()
    }

    #[test]
    fn loads_minimal_lexicon_lowercased() {
        let lex = BiasLexicon::from_json(minimal_json()).unwrap();
        assert_eq!(lex.class_name(), "religion");
        assert_eq!(lex.subclasses()[0].targets, vec!["church", "bible"]);
        assert_eq!(lex.equality_sets().len(), 1);
        assert_eq!(lex.attribute_sets().len(), 2);
        assert_eq!(lex.surface_form("church"), "Church");
        let again = BiasLexicon::from_json(&lex.to_json()).unwrap();
        assert_eq!(again.subclasses(), lex.subclasses());
    }

    #[test]
    fn bundled_religion_lexicon() {
        let lex = BiasLexicon::religion();
        let names: Vec<_> = lex.subclasses().iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, ["christianity", "islam", "judaism"]);
        assert!(lex.equality_sets().len() >= 11);
        assert!(lex
            .equality_sets()
            .iter()
            .any(|e| e.terms == ["church", "mosque", "synagogue"]));
    }

    #[test]
    fn validation_errors_name_fields() {
        let bad_arity = minimal_json().replace(r#"[["church", "mosque"]]"#, r#"[["church"]]"#);
        match BiasLexicon::from_json(&bad_arity) {
            Err(Error::Lexicon { field, .. }) => assert_eq!(field, "equality_sets[0]"),
            other => panic!("{other:?}"),
        }
        let multi = minimal_json().replace("\"joy\"", "\"holy trinity\"");
        assert!(matches!(BiasLexicon::from_json(&multi), Err(Error::Lexicon { .. })));
        let dup = minimal_json().replace("\"bible\"", "\"church\"");
        assert!(matches!(BiasLexicon::from_json(&dup), Err(Error::Lexicon { .. })));
        let missing = minimal_json().replace("\"class\": \"religion\",", "");
        assert!(matches!(BiasLexicon::from_json(&missing), Err(Error::Lexicon { .. })));
        let one_sub = r#"{"class":"c","subclasses":[{"name":"a","targets":["x"]}],"equality_sets":[],"attribute_sets":[]}"#;
        assert!(matches!(BiasLexicon::from_json(one_sub), Err(Error::Lexicon { .. })));
    }

    #[test]
    fn three_subclass_arity() {
        let subs = vec![
            Subclass { name: "christianity".into(), targets: vec!["church".into()] },
            Subclass { name: "islam".into(), targets: vec!["mosque".into()] },
            Subclass { name: "judaism".into(), targets: vec!["synagogue".into()] },
        ];
        let attrs = vec![AttributeSet { name: "a".into(), words: vec!["x".into()] }];
        let ok = BiasLexicon::new(
            "religion",
            subs.clone(),
            vec![EqualitySet { terms: vec!["Church".into(), "Mosque".into(), "Synagogue".into()] }],
            attrs.clone(),
        )
        .unwrap();
        assert_eq!(ok.equality_sets()[0].terms, ["church", "mosque", "synagogue"]);
        let bad = BiasLexicon::new(
            "religion",
            subs,
            vec![EqualitySet { terms: vec!["church".into(), "mosque".into()] }],
            attrs,
        );
        assert!(matches!(bad, Err(Error::Lexicon { .. })));
    }

    #[test]
    fn resolve_all_present() {
        let lex = BiasLexicon::from_json(minimal_json()).unwrap();
        let s = store(&["church", "bible", "mosque", "quran", "joy", "love", "agony"]);
        let r = lex.resolve(&s).unwrap();
        assert_eq!(r.report, ResolutionReport::default());
        assert_eq!(r.subclasses[0].targets[0], ResolvedTerm { word: "church".into(), index: 0 });
        assert_eq!(r.attribute_sets[0].words.len(), 2);
    }

    #[test]
    fn resolve_drops_oov_and_uses_surface_fallback() {
        let lex = BiasLexicon::from_json(minimal_json()).unwrap();
        // "Church" only exists capitalised; "love" is missing.
        let s = store(&["Church", "bible", "mosque", "quran", "joy", "agony"]);
        let r = lex.resolve(&s).unwrap();
        assert_eq!(r.subclasses[0].targets[0].word, "Church");
        assert_eq!(r.attribute_sets[0].words.len(), 1);
        assert_eq!(r.report.dropped_attribute_words, vec!["pleasant/love"]);
    }

    #[test]
    fn resolve_drops_incomplete_equality_set_whole() {
        let subs = vec![
            Subclass { name: "christianity".into(), targets: vec!["christian".into()] },
            Subclass { name: "islam".into(), targets: vec!["muslim".into()] },
            Subclass { name: "judaism".into(), targets: vec!["jew".into()] },
        ];
        let eq = vec![
            EqualitySet { terms: vec!["church".into(), "mosque".into(), "synagogue".into()] },
            EqualitySet { terms: vec!["bible".into(), "quran".into(), "torah".into()] },
        ];
        let attrs = vec![AttributeSet { name: "a".into(), words: vec!["x".into()] }];
        let lex = BiasLexicon::new("religion", subs, eq, attrs).unwrap();
        let s = store(&["christian", "muslim", "jew", "church", "mosque", "bible", "quran", "torah", "x"]);
        let r = lex.resolve(&s).unwrap();
        assert_eq!(r.equality_sets.len(), 1);
        let words: Vec<_> = r.equality_sets[0].iter().map(|t| t.word.as_str()).collect();
        assert_eq!(words, ["bible", "quran", "torah"]);
        assert_eq!(r.report.dropped_equality_sets, vec!["church,mosque,synagogue"]);
    }

    #[test]
    fn resolve_fatal_cases() {
        let lex = BiasLexicon::from_json(minimal_json()).unwrap();
        let s = store(&["church", "bible", "joy"]);
        assert!(matches!(lex.resolve(&s), Err(Error::Resolution(_))));
        let s = store(&["bible", "quran", "joy"]);
        assert!(matches!(lex.resolve(&s), Err(Error::Resolution(_))));
    }

    #[test]
    fn resolution_is_monotone_in_vocabulary() {
        let lex = BiasLexicon::from_json(minimal_json()).unwrap();
        let small = store(&["church", "mosque", "quran", "joy"]);
        let big = store(&["church", "mosque", "quran", "joy", "love", "bible", "zebra"]);
        let a = lex.resolve(&small).unwrap();
        let b = lex.resolve(&big).unwrap();
        assert!(b.report.total_dropped_words() <= a.report.total_dropped_words());
        assert_eq!(lex.resolve(&small).unwrap(), a);
    }
}
