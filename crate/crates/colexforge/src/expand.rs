//! Underspecified-concept handling: multiply forms mapped to broad concepts
//! onto their specific targets, and apply one-for-one concept renames.
//!
//! A word like Vietnamese *xanh*, elicited for `BLUE OR GREEN`, is turned into
//! two forms, one mapped to `BLUE` and one to `GREEN`, both marked with the
//! original concept. Within a variety the two copies share a form key, so the
//! pair shows up as a colexification downstream; that is the point of the
//! whole exercise.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::corpus::{Concept, Corpus, WordForm};
use crate::error::{Error, Result};

/// Maps each underspecified source concept either to two or more specific
/// targets (`expansions`) or to a single replacement concept (`renames`).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ReplacementTable {
    pub expansions: BTreeMap<String, Vec<String>>,
    pub renames: BTreeMap<String, String>,
}

impl ReplacementTable {
    pub fn is_empty(&self) -> bool {
        self.expansions.is_empty() && self.renames.is_empty()
    }

    /// Checks the table invariants: no duplicate sources and no target that is
    /// itself a source, so one expansion pass is always enough.
    fn check(&self) -> Result<()> {
        let is_source =
            |c: &str| self.expansions.contains_key(c) || self.renames.contains_key(c);
        for (source, targets) in &self.expansions {
            for target in targets {
                if is_source(target) {
                    return Err(Error::ChainedExpansion {
                        source: source.clone(),
                        target: target.clone(),
                    });
                }
            }
        }
        for (source, target) in &self.renames {
            if is_source(target) {
                return Err(Error::ChainedExpansion {
                    source: source.clone(),
                    target: target.clone(),
                });
            }
        }
        Ok(())
    }
}

/// Reads a replacement table from a two-column CSV (`source`, `targets`); the
/// targets field is semicolon-separated. A single target is a rename, two or
/// more are an expansion. A row that uses the semicolon syntax but resolves to
/// one distinct target is rejected.
pub fn load_replacement_table(path: &Path) -> Result<ReplacementTable> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut table = ReplacementTable::default();
    for record in reader.records() {
        let record = record?;
        let source = record.get(0).unwrap_or("").trim().to_string();
        let raw_targets = record.get(1).unwrap_or("");
        if source.is_empty() {
            continue;
        }
        if table.expansions.contains_key(&source) || table.renames.contains_key(&source) {
            return Err(Error::DuplicateSource(source));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut targets: Vec<String> = raw_targets
            .split(';')
            .map(|t| t.trim().to_string())
            .filter(|t| !t.is_empty() && seen.insert(t.clone()))
            .collect();
        if raw_targets.contains(';') && targets.len() < 2 {
            return Err(Error::SingletonExpansionWithExpansionSyntax { source });
        }
        match targets.len() {
            0 => {
                return Err(Error::MalformedMetadata {
                    path: path.to_path_buf(),
                    reason: format!("row '{source}' has no targets"),
                })
            }
            1 => {
                table.renames.insert(source, targets.pop().unwrap());
            }
            _ => {
                table.expansions.insert(source, targets);
            }
        }
    }
    table.check()?;
    Ok(table)
}

/// Bookkeeping for one expansion run.
///
/// `derived_forms` counts multiplied copies that survived deduplication, per
/// expansion source in `per_source`; renames are counted separately.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ExpansionReport {
    pub input_forms: usize,
    pub derived_forms: usize,
    pub renamed_forms: usize,
    pub per_source: BTreeMap<String, usize>,
}

/// Applies the replacement table to a corpus.
///
/// Forms mapped to an expansion source are removed and replaced by one copy
/// per target concept; forms mapped to a rename source are re-mapped to the
/// target. Either way the copies carry `derived_from = source`. Source
/// concepts disappear from the inventory, target concepts are added when
/// missing, and duplicate (variety, concept, segments) triples are removed —
/// a directly attested form wins over a derived copy.
pub fn expand_corpus(corpus: &Corpus, table: &ReplacementTable) -> (Corpus, ExpansionReport) {
    let input_forms = corpus.forms.len();
    let mut out = Corpus {
        varieties: corpus.varieties.clone(),
        concepts: corpus.concepts.clone(),
        forms: Vec::with_capacity(corpus.forms.len()),
        provenance: corpus.provenance.clone(),
    };

    for form in &corpus.forms {
        if let Some(targets) = table.expansions.get(&form.concept_id) {
            for (i, target) in targets.iter().enumerate() {
                out.forms.push(WordForm {
                    id: format!("{}.{}", form.id, i + 1),
                    variety_id: form.variety_id.clone(),
                    concept_id: target.clone(),
                    segments: form.segments.clone(),
                    value: form.value.clone(),
                    derived_from: Some(form.concept_id.clone()),
                });
            }
        } else if let Some(target) = table.renames.get(&form.concept_id) {
            out.forms.push(WordForm {
                id: form.id.clone(),
                variety_id: form.variety_id.clone(),
                concept_id: target.clone(),
                segments: form.segments.clone(),
                value: form.value.clone(),
                derived_from: Some(form.concept_id.clone()),
            });
        } else {
            out.forms.push(form.clone());
        }
    }

    // Source concepts vanish from the inventory; every target must resolve.
    for source in table.expansions.keys().chain(table.renames.keys()) {
        out.concepts.remove(source);
    }
    for target in table
        .expansions
        .values()
        .flatten()
        .chain(table.renames.values())
    {
        out.concepts.entry(target.clone()).or_insert_with(|| Concept {
            id: target.clone(),
            concepticon_id: None,
        });
    }

    out.canonicalize();

    let mut report = ExpansionReport {
        input_forms,
        ..Default::default()
    };
    for form in &out.forms {
        if let Some(source) = &form.derived_from {
            if table.expansions.contains_key(source) {
                report.derived_forms += 1;
                *report.per_source.entry(source.clone()).or_insert(0) += 1;
            } else {
                report.renamed_forms += 1;
            }
        }
    }
    (out, report)
}

/// Number of forms marked as derived (expanded or renamed).
pub fn count_derived(corpus: &Corpus) -> usize {
    corpus.derived_form_count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn table_from(rows: &str) -> Result<ReplacementTable> {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "source,targets").unwrap();
        write!(file, "{rows}").unwrap();
        load_replacement_table(file.path())
    }

    fn toy_corpus() -> Corpus {
        let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/datasets");
        crate::ingest::load_dataset_collection(&fixtures).unwrap()
    }

    fn toy_table() -> ReplacementTable {
        let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/replacements.csv");
        load_replacement_table(&path).unwrap()
    }

    #[test]
    fn two_target_row_is_an_expansion() {
        let t = table_from("ARM OR HAND,ARM;HAND\n").unwrap();
        assert_eq!(t.expansions["ARM OR HAND"], vec!["ARM", "HAND"]);
        assert!(t.renames.is_empty());
    }

    #[test]
    fn kinship_row_keeps_all_four_targets() {
        let t = table_from(
            "SISTER,YOUNGER SISTER (OF MAN);YOUNGER SISTER (OF WOMAN);OLDER SISTER (OF MAN);OLDER SISTER (OF WOMAN)\n",
        )
        .unwrap();
        assert_eq!(t.expansions["SISTER"].len(), 4);
    }

    #[test]
    fn single_target_row_is_a_rename() {
        let t = table_from("STONE OR ROCK,STONE\n").unwrap();
        assert_eq!(t.renames["STONE OR ROCK"], "STONE");
        assert!(t.expansions.is_empty());
    }

    #[test]
    fn expansion_syntax_with_one_target_is_rejected() {
        let err = table_from("STONE OR ROCK,STONE;\n").unwrap_err();
        assert!(matches!(
            err,
            Error::SingletonExpansionWithExpansionSyntax { .. }
        ));
    }

    #[test]
    fn chained_expansion_is_rejected() {
        let err = table_from("A OR B,A;B\nC OR D,A OR B;D\n").unwrap_err();
        assert!(matches!(err, Error::ChainedExpansion { .. }));
    }

    #[test]
    fn duplicate_source_is_rejected() {
        let err = table_from("A OR B,A;B\nA OR B,C;D\n").unwrap_err();
        assert!(matches!(err, Error::DuplicateSource(_)));
    }

    #[test]
    fn xanh_is_multiplied_onto_blue_and_green() {
        let (expanded, report) = expand_corpus(&toy_corpus(), &toy_table());
        let cyan: Vec<_> = expanded
            .forms
            .iter()
            .filter(|f| f.variety_id == "eastlake/el-b" && f.value == "cyan")
            .collect();
        assert_eq!(cyan.len(), 2);
        let concepts: Vec<_> = cyan.iter().map(|f| f.concept_id.as_str()).collect();
        assert_eq!(concepts, vec!["BLUE", "GREEN"]);
        for f in &cyan {
            assert_eq!(f.derived_from.as_deref(), Some("BLUE OR GREEN"));
        }
        // Three expansion-source forms with two targets each, one rename.
        assert_eq!(report.input_forms, 54);
        assert_eq!(report.derived_forms, 6);
        assert_eq!(report.renamed_forms, 1);
        assert_eq!(expanded.forms.len(), 57);
        assert_eq!(count_derived(&expanded), 7);
        // Sources are gone from the inventory, targets resolve.
        assert!(!expanded.concepts.contains_key("BLUE OR GREEN"));
        assert!(!expanded.concepts.contains_key("ARM OR HAND"));
        assert!(!expanded.concepts.contains_key("STONE OR ROCK"));
        assert_eq!(expanded.concepts.len(), 12);
    }

    #[test]
    fn empty_table_is_identity() {
        let corpus = toy_corpus();
        let (out, report) = expand_corpus(&corpus, &ReplacementTable::default());
        assert_eq!(out, corpus);
        assert_eq!(report.derived_forms, 0);
        assert_eq!(count_derived(&out), 0);
    }

    #[test]
    fn expansion_is_idempotent() {
        let table = toy_table();
        let (once, _) = expand_corpus(&toy_corpus(), &table);
        let (twice, report) = expand_corpus(&once, &table);
        assert_eq!(once, twice);
        assert_eq!(report.derived_forms, 0);
    }

    #[test]
    fn derived_copy_colliding_with_direct_form_is_dropped() {
        let mut corpus = toy_corpus();
        // el-b already writes "c y a n" for BLUE directly; the expanded copy
        // of the BLUE OR GREEN form must collapse onto it.
        corpus.forms.push(WordForm {
            id: "eastlake/f99".into(),
            variety_id: "eastlake/el-b".into(),
            concept_id: "BLUE".into(),
            segments: vec!["c".into(), "y".into(), "a".into(), "n".into()],
            value: "cyan".into(),
            derived_from: None,
        });
        corpus.canonicalize();
        let (expanded, report) = expand_corpus(&corpus, &toy_table());
        let blue_cyan: Vec<_> = expanded
            .forms
            .iter()
            .filter(|f| {
                f.variety_id == "eastlake/el-b" && f.concept_id == "BLUE" && f.value == "cyan"
            })
            .collect();
        assert_eq!(blue_cyan.len(), 1);
        assert!(blue_cyan[0].derived_from.is_none(), "direct form wins");
        // One derived copy was removed by dedup, so only 5 survive.
        assert_eq!(report.derived_forms, 5);
        assert_eq!(count_derived(&expanded), 6);
    }

    #[test]
    fn form_count_matches_multiplication_arithmetic() {
        let corpus = toy_corpus();
        let table = toy_table();
        let (expanded, report) = expand_corpus(&corpus, &table);
        let source_forms = corpus
            .forms
            .iter()
            .filter(|f| table.expansions.contains_key(&f.concept_id))
            .count();
        let planted: usize = corpus
            .forms
            .iter()
            .filter_map(|f| table.expansions.get(&f.concept_id).map(Vec::len))
            .sum();
        let dedup_removals = planted - report.derived_forms;
        assert_eq!(
            expanded.forms.len(),
            corpus.forms.len() - source_forms + planted - dedup_removals
        );
    }
}
