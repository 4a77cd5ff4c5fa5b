//! The shared data model: varieties, concepts, word forms, and the merged corpus.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// A single documented lect. Several varieties may share a glottocode; ids are
/// namespaced as `dataset_id/local_id` so varieties from different datasets
/// never collide.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variety {
    pub id: String,
    pub name: String,
    pub glottocode: Option<String>,
    pub family: Option<String>,
    pub dataset_id: String,
}

impl Variety {
    /// Label used for family-level counting. A variety without a family
    /// classification counts as its own singleton family.
    pub fn family_label(&self) -> &str {
        self.family.as_deref().unwrap_or(&self.id)
    }
}

/// A comparison concept, identified by its gloss (e.g. `ARM`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Concept {
    pub id: String,
    pub concepticon_id: Option<String>,
}

/// One transcribed word attached to a variety and a concept.
///
/// `derived_from` is absent for forms read from input files; the expansion
/// stage sets it to the original underspecified concept when it multiplies or
/// re-maps a form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordForm {
    pub id: String,
    pub variety_id: String,
    pub concept_id: String,
    pub segments: Vec<String>,
    pub value: String,
    pub derived_from: Option<String>,
}

impl WordForm {
    /// Dedup key: two forms with the same triple are considered the same entry.
    pub fn triple(&self) -> (&str, &str, &[String]) {
        (&self.variety_id, &self.concept_id, &self.segments)
    }
}

/// Merged collection of varieties, concepts and word forms from one or more
/// datasets. Immutable after construction; every stage produces a new corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub varieties: BTreeMap<String, Variety>,
    pub concepts: BTreeMap<String, Concept>,
    pub forms: Vec<WordForm>,
    pub provenance: Vec<String>,
}

impl Corpus {
    /// Sorts forms into canonical order and removes exact duplicate
    /// (variety, concept, segments) triples.
    ///
    /// Non-derived forms sort before derived ones, so when a derived copy
    /// collides with a directly attested form the direct attestation survives.
    /// The result is independent of the order forms were added in.
    pub fn canonicalize(&mut self) {
        self.forms.sort_by(|x, y| {
            (
                &x.variety_id,
                &x.concept_id,
                &x.segments,
                x.derived_from.is_some(),
                &x.id,
            )
                .cmp(&(
                    &y.variety_id,
                    &y.concept_id,
                    &y.segments,
                    y.derived_from.is_some(),
                    &y.id,
                ))
        });
        self.forms.dedup_by(|later, kept| later.triple() == kept.triple());
        self.provenance.sort();
        self.provenance.dedup();
    }

    /// Number of forms carrying a `derived_from` marker.
    pub fn derived_form_count(&self) -> usize {
        self.forms.iter().filter(|f| f.derived_from.is_some()).count()
    }

    /// Distinct concepts attested by at least one form.
    pub fn attested_concepts(&self) -> std::collections::BTreeSet<&str> {
        self.forms.iter().map(|f| f.concept_id.as_str()).collect()
    }
}
