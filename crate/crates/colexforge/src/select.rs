//! Language and concept selection: rank concepts by cross-variety occurrence,
//! keep the most frequent ones, drop varieties below the coverage threshold,
//! and recompute the effective concept inventory.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

/// Thresholds for the selection stage. Defaults are the published values:
/// keep the 1,800 most frequent concepts and require 180 of them per variety.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub concept_cap: usize,
    pub variety_min_concepts: usize,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            concept_cap: 1800,
            variety_min_concepts: 180,
        }
    }
}

impl SelectionConfig {
    fn check(&self) -> Result<()> {
        if self.variety_min_concepts < 1 || self.concept_cap < self.variety_min_concepts {
            return Err(Error::InvalidConfig(format!(
                "need concept_cap >= variety_min_concepts >= 1, got {} / {}",
                self.concept_cap, self.variety_min_concepts
            )));
        }
        Ok(())
    }
}

/// What the selection did: the full ranking, the kept set, the varieties that
/// fell below the threshold, and the concepts still attested afterwards.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SelectionReport {
    pub ranked_concepts: Vec<(String, usize)>,
    pub kept_concepts: BTreeSet<String>,
    pub dropped_varieties: Vec<(String, usize)>,
    pub effective_concepts: BTreeSet<String>,
}

/// Orders all corpus concepts by the number of distinct varieties attesting
/// them (descending, ties broken by concept id) and truncates to `cap`.
pub fn rank_concepts(corpus: &Corpus, cap: usize) -> Vec<(String, usize)> {
    let mut ranking = full_ranking(corpus);
    ranking.truncate(cap);
    ranking
}

fn full_ranking(corpus: &Corpus) -> Vec<(String, usize)> {
    let mut attestation: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for form in &corpus.forms {
        attestation
            .entry(form.concept_id.as_str())
            .or_default()
            .insert(form.variety_id.as_str());
    }
    let mut ranking: Vec<(String, usize)> = corpus
        .concepts
        .keys()
        .map(|id| {
            (
                id.clone(),
                attestation.get(id.as_str()).map_or(0, BTreeSet::len),
            )
        })
        .collect();
    ranking.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranking
}

/// Runs the three selection steps in order: restrict forms to the capped
/// concept ranking, remove varieties covering fewer than
/// `variety_min_concepts` kept concepts (threshold inclusive), then shrink the
/// inventory to the concepts still attested. No re-iteration after the
/// variety removal.
pub fn apply_selection(
    corpus: &Corpus,
    config: &SelectionConfig,
) -> Result<(Corpus, SelectionReport)> {
    config.check()?;

    let ranked_concepts = full_ranking(corpus);
    let kept_concepts: BTreeSet<String> = ranked_concepts
        .iter()
        .take(config.concept_cap)
        .map(|(id, _)| id.clone())
        .collect();

    // Step 1: restrict forms to kept concepts.
    let restricted: Vec<_> = corpus
        .forms
        .iter()
        .filter(|f| kept_concepts.contains(&f.concept_id))
        .cloned()
        .collect();

    // Step 2: drop varieties below the coverage threshold.
    let mut coverage: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for form in &restricted {
        coverage
            .entry(form.variety_id.as_str())
            .or_default()
            .insert(form.concept_id.as_str());
    }
    let mut dropped_varieties = Vec::new();
    let mut kept_varieties = BTreeSet::new();
    for id in corpus.varieties.keys() {
        let covered = coverage.get(id.as_str()).map_or(0, BTreeSet::len);
        if covered >= config.variety_min_concepts {
            kept_varieties.insert(id.clone());
        } else {
            dropped_varieties.push((id.clone(), covered));
        }
    }
    if kept_varieties.is_empty() {
        return Err(Error::EmptySelection);
    }

    let forms: Vec<_> = restricted
        .into_iter()
        .filter(|f| kept_varieties.contains(&f.variety_id))
        .collect();

    // Step 3: the effective inventory is whatever is still attested.
    let effective_concepts: BTreeSet<String> =
        forms.iter().map(|f| f.concept_id.clone()).collect();

    let mut selected = Corpus {
        varieties: corpus
            .varieties
            .iter()
            .filter(|(id, _)| kept_varieties.contains(*id))
            .map(|(id, v)| (id.clone(), v.clone()))
            .collect(),
        concepts: corpus
            .concepts
            .iter()
            .filter(|(id, _)| effective_concepts.contains(*id))
            .map(|(id, c)| (id.clone(), c.clone()))
            .collect(),
        forms,
        provenance: corpus.provenance.clone(),
    };
    selected.canonicalize();

    let report = SelectionReport {
        ranked_concepts,
        kept_concepts,
        dropped_varieties,
        effective_concepts,
    };
    Ok((selected, report))
}
