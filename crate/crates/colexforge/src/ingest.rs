//! Reading CLDF-style datasets (a JSON metadata file linking CSV tables) and
//! merging them into a single [`Corpus`].
//!
//! The input profile is deliberately small: the metadata file names three CSV
//! tables (`forms`, `languages`, `parameters`) and maps semantic column roles
//! to the actual CSV header names, e.g.
//!
//! ```json
//! {
//!   "id": "northwind",
//!   "tables": {
//!     "forms": { "file": "forms.csv",
//!                "columns": { "id": "ID", "variety": "Language_ID",
//!                             "concept": "Parameter_ID", "segments": "Segments",
//!                             "value": "Form" } },
//!     "languages": { "file": "languages.csv",
//!                    "columns": { "id": "ID", "name": "Name",
//!                                 "glottocode": "Glottocode", "family": "Family" } },
//!     "parameters": { "file": "parameters.csv",
//!                     "columns": { "id": "ID", "concepticon_id": "Concepticon_ID" } }
//!   }
//! }
//! ```
//!
//! Required roles: forms need `id`, `variety`, `concept`, `segments`;
//! languages and parameters need `id`. Everything else is optional.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Concept, Corpus, Variety, WordForm};
use crate::error::{Error, Result};

/// Location and column mapping of one CSV table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableSpec {
    pub file: String,
    pub columns: BTreeMap<String, String>,
}

impl TableSpec {
    fn require(&self, roles: &[&str], metadata: &Path) -> Result<()> {
        for role in roles {
            if !self.columns.contains_key(*role) {
                return Err(Error::MalformedMetadata {
                    path: metadata.to_path_buf(),
                    reason: format!("table '{}' lacks a column mapping for '{role}'", self.file),
                });
            }
        }
        Ok(())
    }
}

/// A dataset on disk: directory, metadata file, and the three table specs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetDescriptor {
    pub id: String,
    pub path: PathBuf,
    pub metadata_file: String,
    pub form_table: TableSpec,
    pub language_table: TableSpec,
    pub parameter_table: TableSpec,
}

#[derive(Deserialize)]
struct MetadataFile {
    id: String,
    tables: MetadataTables,
}

#[derive(Deserialize)]
struct MetadataTables {
    forms: TableSpec,
    languages: TableSpec,
    parameters: TableSpec,
}

/// Reads and checks the metadata file of a dataset directory.
///
/// Verifies that every declared table file exists and that the column maps
/// cover the required roles.
pub fn read_descriptor(dir: &Path) -> Result<DatasetDescriptor> {
    let metadata_file = "metadata.json".to_string();
    let metadata_path = dir.join(&metadata_file);
    if !metadata_path.is_file() {
        return Err(Error::MissingFile(metadata_path));
    }
    let reader = BufReader::new(File::open(&metadata_path)?);
    let parsed: MetadataFile =
        serde_json::from_reader(reader).map_err(|e| Error::MalformedMetadata {
            path: metadata_path.clone(),
            reason: e.to_string(),
        })?;
    if parsed.id.is_empty() {
        return Err(Error::MalformedMetadata {
            path: metadata_path.clone(),
            reason: "dataset id is empty".into(),
        });
    }

    parsed
        .tables
        .forms
        .require(&["id", "variety", "concept", "segments"], &metadata_path)?;
    parsed.tables.languages.require(&["id"], &metadata_path)?;
    parsed.tables.parameters.require(&["id"], &metadata_path)?;

    for spec in [
        &parsed.tables.forms,
        &parsed.tables.languages,
        &parsed.tables.parameters,
    ] {
        let table_path = dir.join(&spec.file);
        if !table_path.is_file() {
            return Err(Error::MissingFile(table_path));
        }
    }

    Ok(DatasetDescriptor {
        id: parsed.id,
        path: dir.to_path_buf(),
        metadata_file,
        form_table: parsed.tables.forms,
        language_table: parsed.tables.languages,
        parameter_table: parsed.tables.parameters,
    })
}

/// Cursor over one CSV table that resolves mapped roles to field indices.
struct TableReader {
    records: Vec<csv::StringRecord>,
    role_index: HashMap<String, usize>,
    table_name: String,
}

impl TableReader {
    fn open(dir: &Path, spec: &TableSpec) -> Result<Self> {
        let path = dir.join(&spec.file);
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(&path)?;
        let headers = reader.headers()?.clone();
        let mut role_index = HashMap::new();
        for (role, column) in &spec.columns {
            match headers.iter().position(|h| h == column) {
                Some(i) => {
                    role_index.insert(role.clone(), i);
                }
                None => {
                    return Err(Error::MalformedMetadata {
                        path,
                        reason: format!("column '{column}' (role '{role}') not found in header"),
                    })
                }
            }
        }
        let records = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
        Ok(TableReader {
            records,
            role_index,
            table_name: spec.file.clone(),
        })
    }

    fn get<'a>(&self, record: &'a csv::StringRecord, role: &str) -> &'a str {
        self.role_index
            .get(role)
            .and_then(|&i| record.get(i))
            .unwrap_or("")
    }

    /// Optional field: the empty string reads as absent.
    fn get_opt(&self, record: &csv::StringRecord, role: &str) -> Option<String> {
        if !self.role_index.contains_key(role) {
            return None;
        }
        let v = self.get(record, role);
        if v.is_empty() {
            None
        } else {
            Some(v.to_string())
        }
    }
}

/// Loads one dataset into a self-contained corpus.
///
/// Variety and form ids are namespaced with the dataset id. Form rows whose
/// variety or concept is not declared in the respective table are rejected
/// with a [`Error::DanglingReference`] naming the offending row. Forms whose
/// segment field is empty are dropped with a warning.
pub fn load_dataset(descriptor: &DatasetDescriptor) -> Result<Corpus> {
    let dir = &descriptor.path;
    let ds = &descriptor.id;

    let languages = TableReader::open(dir, &descriptor.language_table)?;
    let parameters = TableReader::open(dir, &descriptor.parameter_table)?;
    let forms = TableReader::open(dir, &descriptor.form_table)?;

    let mut varieties = BTreeMap::new();
    let mut local_variety_ids = BTreeSet::new();
    for record in &languages.records {
        let local_id = languages.get(record, "id").to_string();
        if local_id.is_empty() {
            return Err(Error::MalformedMetadata {
                path: dir.join(&descriptor.language_table.file),
                reason: "language row with empty id".into(),
            });
        }
        if !local_variety_ids.insert(local_id.clone()) {
            return Err(Error::DuplicateId {
                table: languages.table_name.clone(),
                id: local_id,
            });
        }
        let id = format!("{ds}/{local_id}");
        let name = languages
            .get_opt(record, "name")
            .unwrap_or_else(|| local_id.clone());
        varieties.insert(
            id.clone(),
            Variety {
                id,
                name,
                glottocode: languages.get_opt(record, "glottocode"),
                family: languages.get_opt(record, "family"),
                dataset_id: ds.clone(),
            },
        );
    }

    let mut concepts = BTreeMap::new();
    for record in &parameters.records {
        let id = parameters.get(record, "id").to_string();
        if id.is_empty() {
            return Err(Error::MalformedMetadata {
                path: dir.join(&descriptor.parameter_table.file),
                reason: "parameter row with empty id".into(),
            });
        }
        if concepts.contains_key(&id) {
            return Err(Error::DuplicateId {
                table: parameters.table_name.clone(),
                id,
            });
        }
        concepts.insert(
            id.clone(),
            Concept {
                id,
                concepticon_id: parameters.get_opt(record, "concepticon_id"),
            },
        );
    }

    let mut corpus_forms = Vec::new();
    let mut seen_form_ids = BTreeSet::new();
    for (i, record) in forms.records.iter().enumerate() {
        let row = i + 2; // 1-based, counting the header line
        let local_id = forms.get(record, "id").to_string();
        if !seen_form_ids.insert(local_id.clone()) {
            return Err(Error::DuplicateId {
                table: forms.table_name.clone(),
                id: local_id,
            });
        }
        let local_variety = forms.get(record, "variety");
        let variety_id = format!("{ds}/{local_variety}");
        if !varieties.contains_key(&variety_id) {
            return Err(Error::DanglingReference {
                table: forms.table_name.clone(),
                row,
                column: descriptor.form_table.columns["variety"].clone(),
                kind: "variety",
                value: local_variety.to_string(),
            });
        }
        let concept_id = forms.get(record, "concept").to_string();
        if !concepts.contains_key(&concept_id) {
            return Err(Error::DanglingReference {
                table: forms.table_name.clone(),
                row,
                column: descriptor.form_table.columns["concept"].clone(),
                kind: "concept",
                value: concept_id,
            });
        }
        let segments: Vec<String> = forms
            .get(record, "segments")
            .split_whitespace()
            .map(str::to_string)
            .collect();
        if segments.is_empty() {
            log::warn!("{ds}: dropping form '{local_id}' (row {row}): empty segments");
            continue;
        }
        let value = forms
            .get_opt(record, "value")
            .unwrap_or_else(|| segments.join(""));
        corpus_forms.push(WordForm {
            id: format!("{ds}/{local_id}"),
            variety_id,
            concept_id,
            segments,
            value,
            derived_from: None,
        });
    }

    let mut corpus = Corpus {
        varieties,
        concepts,
        forms: corpus_forms,
        provenance: vec![ds.clone()],
    };
    corpus.canonicalize();
    Ok(corpus)
}

/// Convenience: read the descriptor of `dir` and load it.
pub fn load_dataset_dir(dir: &Path) -> Result<Corpus> {
    load_dataset(&read_descriptor(dir)?)
}

/// Finds dataset directories (those containing `metadata.json`) directly
/// under `root`, sorted by directory name.
pub fn discover_datasets(root: &Path) -> Result<Vec<DatasetDescriptor>> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("metadata.json").is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::EmptyDatasetDir(root.to_path_buf()));
    }
    dirs.iter().map(|d| read_descriptor(d)).collect()
}

/// Loads every dataset under `root` (in parallel) and merges the results.
pub fn load_dataset_collection(root: &Path) -> Result<Corpus> {
    let descriptors = discover_datasets(root)?;
    let parts: Vec<Corpus> = descriptors
        .par_iter()
        .map(load_dataset)
        .collect::<Result<Vec<_>>>()?;
    Ok(merge_corpora(parts))
}

/// Merges corpora: union of varieties and concepts by id, concatenation of
/// forms with exact duplicate triples removed. Associative and insensitive to
/// input order.
pub fn merge_corpora(parts: Vec<Corpus>) -> Corpus {
    let mut merged = Corpus::default();
    for part in parts {
        merged.varieties.extend(part.varieties);
        for (id, concept) in part.concepts {
            merged.concepts.entry(id).or_insert(concept);
        }
        merged.forms.extend(part.forms);
        merged.provenance.extend(part.provenance);
    }
    merged.canonicalize();
    merged
}

/// One problem found by [`validate_corpus`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ValidationIssue {
    DanglingReference {
        form_id: String,
        column: String,
        value: String,
    },
    DuplicateId {
        id: String,
    },
    EmptySegments {
        form_id: String,
    },
    EmptyVariety {
        variety_id: String,
    },
}

/// Report-only result of a corpus consistency scan.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

/// Scans a corpus for dangling references, duplicate form ids, empty-segment
/// forms, and varieties without any form. Never fails; the corpus is not
/// modified.
pub fn validate_corpus(corpus: &Corpus) -> ValidationReport {
    let mut issues = Vec::new();
    let mut seen_ids = BTreeSet::new();
    let mut varieties_with_forms = BTreeSet::new();
    for form in &corpus.forms {
        if !seen_ids.insert(form.id.as_str()) {
            issues.push(ValidationIssue::DuplicateId {
                id: form.id.clone(),
            });
        }
        if !corpus.varieties.contains_key(&form.variety_id) {
            issues.push(ValidationIssue::DanglingReference {
                form_id: form.id.clone(),
                column: "variety_id".into(),
                value: form.variety_id.clone(),
            });
        } else {
            varieties_with_forms.insert(form.variety_id.as_str());
        }
        if !corpus.concepts.contains_key(&form.concept_id) {
            issues.push(ValidationIssue::DanglingReference {
                form_id: form.id.clone(),
                column: "concept_id".into(),
                value: form.concept_id.clone(),
            });
        }
        if form.segments.is_empty() {
            issues.push(ValidationIssue::EmptySegments {
                form_id: form.id.clone(),
            });
        }
    }
    for id in corpus.varieties.keys() {
        if !varieties_with_forms.contains(id.as_str()) {
            issues.push(ValidationIssue::EmptyVariety {
                variety_id: id.clone(),
            });
        }
    }
    ValidationReport { issues }
}

#[derive(Serialize, Deserialize)]
struct BundleManifest {
    datasets: Vec<String>,
}

/// Writes a corpus as a bundle directory: `varieties.csv`, `concepts.csv`,
/// `forms.csv` (all canonically sorted) plus `provenance.json`. The bundle is
/// the cache format the CLI stages pass between each other.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;

    let mut w = csv::Writer::from_path(dir.join("varieties.csv"))?;
    w.write_record(["id", "name", "glottocode", "family", "dataset_id"])?;
    for v in corpus.varieties.values() {
        w.write_record([
            v.id.as_str(),
            v.name.as_str(),
            v.glottocode.as_deref().unwrap_or(""),
            v.family.as_deref().unwrap_or(""),
            v.dataset_id.as_str(),
        ])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("concepts.csv"))?;
    w.write_record(["id", "concepticon_id"])?;
    for c in corpus.concepts.values() {
        w.write_record([c.id.as_str(), c.concepticon_id.as_deref().unwrap_or("")])?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join("forms.csv"))?;
    w.write_record([
        "id",
        "variety_id",
        "concept_id",
        "segments",
        "value",
        "derived_from",
    ])?;
    for f in &corpus.forms {
        w.write_record([
            f.id.as_str(),
            f.variety_id.as_str(),
            f.concept_id.as_str(),
            &f.segments.join(" "),
            f.value.as_str(),
            f.derived_from.as_deref().unwrap_or(""),
        ])?;
    }
    w.flush()?;

    let manifest = BundleManifest {
        datasets: corpus.provenance.clone(),
    };
    let file = BufWriter::new(File::create(dir.join("provenance.json"))?);
    serde_json::to_writer_pretty(file, &manifest)?;
    Ok(())
}

/// Reads a bundle written by [`save_corpus`]. Ids are taken as stored; no
/// re-namespacing happens, so save/load round-trips exactly.
pub fn load_corpus(dir: &Path) -> Result<Corpus> {
    for name in ["varieties.csv", "concepts.csv", "forms.csv", "provenance.json"] {
        if !dir.join(name).is_file() {
            return Err(Error::MissingFile(dir.join(name)));
        }
    }
    let opt = |s: &str| {
        if s.is_empty() {
            None
        } else {
            Some(s.to_string())
        }
    };

    let mut varieties = BTreeMap::new();
    let mut reader = csv::Reader::from_path(dir.join("varieties.csv"))?;
    for record in reader.records() {
        let r = record?;
        let v = Variety {
            id: r.get(0).unwrap_or("").to_string(),
            name: r.get(1).unwrap_or("").to_string(),
            glottocode: opt(r.get(2).unwrap_or("")),
            family: opt(r.get(3).unwrap_or("")),
            dataset_id: r.get(4).unwrap_or("").to_string(),
        };
        varieties.insert(v.id.clone(), v);
    }

    let mut concepts = BTreeMap::new();
    let mut reader = csv::Reader::from_path(dir.join("concepts.csv"))?;
    for record in reader.records() {
        let r = record?;
        let c = Concept {
            id: r.get(0).unwrap_or("").to_string(),
            concepticon_id: opt(r.get(1).unwrap_or("")),
        };
        concepts.insert(c.id.clone(), c);
    }

    let mut forms = Vec::new();
    let mut reader = csv::Reader::from_path(dir.join("forms.csv"))?;
    for (i, record) in reader.records().enumerate() {
        let r = record?;
        let form = WordForm {
            id: r.get(0).unwrap_or("").to_string(),
            variety_id: r.get(1).unwrap_or("").to_string(),
            concept_id: r.get(2).unwrap_or("").to_string(),
            segments: r
                .get(3)
                .unwrap_or("")
                .split_whitespace()
                .map(str::to_string)
                .collect(),
            value: r.get(4).unwrap_or("").to_string(),
            derived_from: opt(r.get(5).unwrap_or("")),
        };
        if !varieties.contains_key(&form.variety_id) {
            return Err(Error::DanglingReference {
                table: "forms.csv".into(),
                row: i + 2,
                column: "variety_id".into(),
                kind: "variety",
                value: form.variety_id,
            });
        }
        if !concepts.contains_key(&form.concept_id) {
            return Err(Error::DanglingReference {
                table: "forms.csv".into(),
                row: i + 2,
                column: "concept_id".into(),
                kind: "concept",
                value: form.concept_id,
            });
        }
        forms.push(form);
    }

    let file = BufReader::new(File::open(dir.join("provenance.json"))?);
    let manifest: BundleManifest = serde_json::from_reader(file)?;

    let mut corpus = Corpus {
        varieties,
        concepts,
        forms,
        provenance: manifest.datasets,
    };
    corpus.canonicalize();
    Ok(corpus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn fixture_dir() -> PathBuf {
        Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/datasets")
    }

    #[test]
    fn loads_northwind_with_expected_counts() {
        // Hand count of the bundled fixture: 2 varieties, 12 concepts, 21 form rows.
        let corpus = load_dataset_dir(&fixture_dir().join("northwind")).unwrap();
        assert_eq!(corpus.varieties.len(), 2);
        assert_eq!(corpus.concepts.len(), 12);
        assert_eq!(corpus.forms.len(), 21);
        assert!(corpus.varieties.contains_key("northwind/nw-a"));
        assert_eq!(corpus.provenance, vec!["northwind".to_string()]);
    }

    #[test]
    fn empty_form_table_keeps_declared_inventory() {
        let dir = tempfile::tempdir().unwrap();
        fs::copy(
            fixture_dir().join("northwind/metadata.json"),
            dir.path().join("metadata.json"),
        )
        .unwrap();
        fs::copy(
            fixture_dir().join("northwind/languages.csv"),
            dir.path().join("languages.csv"),
        )
        .unwrap();
        fs::copy(
            fixture_dir().join("northwind/parameters.csv"),
            dir.path().join("parameters.csv"),
        )
        .unwrap();
        fs::write(dir.path().join("forms.csv"), "ID,Language_ID,Parameter_ID,Segments,Form\n")
            .unwrap();
        let corpus = load_dataset_dir(dir.path()).unwrap();
        assert_eq!(corpus.varieties.len(), 2);
        assert_eq!(corpus.concepts.len(), 12);
        assert!(corpus.forms.is_empty());
    }

    #[test]
    fn dangling_concept_reference_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["metadata.json", "languages.csv", "parameters.csv"] {
            fs::copy(fixture_dir().join("northwind").join(f), dir.path().join(f)).unwrap();
        }
        fs::write(
            dir.path().join("forms.csv"),
            "ID,Language_ID,Parameter_ID,Segments,Form\nf01,nw-a,NO SUCH CONCEPT,t a j,taj\n",
        )
        .unwrap();
        let err = load_dataset_dir(dir.path()).unwrap_err();
        match err {
            Error::DanglingReference { row, kind, value, .. } => {
                assert_eq!(row, 2);
                assert_eq!(kind, "concept");
                assert_eq!(value, "NO SUCH CONCEPT");
            }
            other => panic!("expected DanglingReference, got {other}"),
        }
    }

    #[test]
    fn empty_segments_are_dropped_not_fatal() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["metadata.json", "languages.csv", "parameters.csv"] {
            fs::copy(fixture_dir().join("northwind").join(f), dir.path().join(f)).unwrap();
        }
        fs::write(
            dir.path().join("forms.csv"),
            "ID,Language_ID,Parameter_ID,Segments,Form\nf01,nw-a,ARM,,taj\nf02,nw-a,HAND,t a j,taj\n",
        )
        .unwrap();
        let corpus = load_dataset_dir(dir.path()).unwrap();
        assert_eq!(corpus.forms.len(), 1);
        assert_eq!(corpus.forms[0].concept_id, "HAND");
    }

    #[test]
    fn missing_table_file_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        fs::copy(
            fixture_dir().join("northwind/metadata.json"),
            dir.path().join("metadata.json"),
        )
        .unwrap();
        let err = read_descriptor(dir.path()).unwrap_err();
        assert!(matches!(err, Error::MissingFile(_)));
    }

    #[test]
    fn merge_unions_varieties_and_concepts() {
        let a = load_dataset_dir(&fixture_dir().join("northwind")).unwrap();
        let b = load_dataset_dir(&fixture_dir().join("southriver")).unwrap();
        let c = load_dataset_dir(&fixture_dir().join("eastlake")).unwrap();
        let merged = merge_corpora(vec![a.clone(), b.clone(), c.clone()]);
        assert_eq!(merged.varieties.len(), 6);
        // Shared concepts collapse to one entry per gloss.
        assert_eq!(
            merged.concepts.len(),
            15,
            "12 northwind + STONE + BLUE OR GREEN + ARM OR HAND"
        );
        assert_eq!(merged.forms.len(), 54);

        // Order-insensitive.
        let merged2 = merge_corpora(vec![c, a, b]);
        assert_eq!(merged, merged2);
    }

    #[test]
    fn merge_with_itself_is_idempotent() {
        let a = load_dataset_dir(&fixture_dir().join("northwind")).unwrap();
        let merged = merge_corpora(vec![a.clone(), a.clone()]);
        assert_eq!(merged, a);
    }

    #[test]
    fn validation_flags_injected_problems() {
        let mut corpus = load_dataset_dir(&fixture_dir().join("northwind")).unwrap();
        assert!(validate_corpus(&corpus).is_clean());

        corpus.forms.push(WordForm {
            id: "northwind/f99".into(),
            variety_id: "northwind/nw-a".into(),
            concept_id: "ARM".into(),
            segments: vec![],
            value: "x".into(),
            derived_from: None,
        });
        corpus.varieties.insert(
            "northwind/nw-z".into(),
            Variety {
                id: "northwind/nw-z".into(),
                name: "Ghost".into(),
                glottocode: None,
                family: None,
                dataset_id: "northwind".into(),
            },
        );
        let report = validate_corpus(&corpus);
        assert_eq!(report.issues.len(), 2);
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::EmptySegments { .. })));
        assert!(report
            .issues
            .iter()
            .any(|i| matches!(i, ValidationIssue::EmptyVariety { variety_id } if variety_id == "northwind/nw-z")));
    }

    #[test]
    fn bundle_round_trip_is_identity() {
        let merged = load_dataset_collection(&fixture_dir()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_corpus(&merged, dir.path()).unwrap();
        let reloaded = load_corpus(dir.path()).unwrap();
        assert_eq!(merged, reloaded);
    }
}
