//! Model directory: `manifest.json` plus `reps.bin` in the `HSD1` format.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus_io::{decode_binary, encode_binary, Corpus, DocId};
use crate::engine::{FitConfig, FittedModel};
use crate::error::{Error, Result};
use crate::representation::TopicState;
use crate::taxonomy::{Taxonomy, TaxonomyFile, TopicId};

pub const FORMAT: &str = "hierseed-model/1";
pub const MANIFEST: &str = "manifest.json";
pub const REPS: &str = "reps.bin";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicEntry {
    pub topic: TopicId,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub taxonomy: TaxonomyFile,
    /// Parents that received an Other child, in creation order.
    pub other_parents: Vec<TopicId>,
    pub thresholds: Vec<TopicEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eccentricities: Vec<TopicEntry>,
    pub config: FitConfig,
    pub objective_trace: Vec<f64>,
    pub iterations_run: usize,
    pub best_iteration: usize,
    pub unfit: bool,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text)?;
        if m.format != FORMAT {
            return Err(Error::ConfigInvalid(format!(
                "model format `{}`, expected `{FORMAT}`",
                m.format
            )));
        }
        Ok(m)
    }
}

fn other_parents(t: &Taxonomy) -> Vec<TopicId> {
    // Other nodes are appended, so arena order is creation order
    t.nodes()
        .iter()
        .filter(|n| n.id.is_other())
        .map(|n| t.id(n.parent.expect("Other nodes have a parent")).clone())
        .collect()
}

/// Serialized form of `model`: manifest text and `reps.bin` bytes.
pub fn encode(model: &FittedModel) -> Result<(String, Vec<u8>)> {
    let t = &model.taxonomy;
    let mut thresholds = Vec::new();
    let mut eccentricities = Vec::new();
    let mut reps: Option<Corpus> = None;
    for (i, s) in model.states.iter().enumerate() {
        let id = t.id(i);
        if let Some(v) = s.threshold {
            thresholds.push(TopicEntry {
                topic: id.clone(),
                value: v,
            });
        }
        if let Some(e) = s.eccentricity {
            eccentricities.push(TopicEntry {
                topic: id.clone(),
                value: e,
            });
        }
        if let Some(r) = &s.rep {
            reps.get_or_insert_with(|| Corpus::new(r.len()))
                .push(DocId::new(id.as_str()), r)?;
        }
    }
    let reps = reps.ok_or_else(|| Error::NoRepresentation("model has no topic vectors".into()))?;
    let manifest = Manifest {
        format: FORMAT.to_string(),
        taxonomy: t.to_file(),
        other_parents: other_parents(t),
        thresholds,
        eccentricities,
        config: model.config.clone(),
        objective_trace: model.objective_trace.clone(),
        iterations_run: model.iterations_run,
        best_iteration: model.best_iteration,
        unfit: model.config.unfit,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    Ok((text, encode_binary(&reps)?))
}

/// Rebuild a model from its manifest and reps. Assigned sets are not stored.
pub fn decode(manifest: &str, reps: &[u8]) -> Result<FittedModel> {
    let m = Manifest::parse(manifest)?;
    let mut taxonomy = Taxonomy::from_file(&m.taxonomy, None)?;
    for p in &m.other_parents {
        let i = taxonomy.get(p).ok_or_else(|| Error::UnknownTopic(p.to_string()))?;
        taxonomy.add_other_child(i)?;
    }
    let mut states = vec![TopicState::default(); taxonomy.len()];
    let lookup = |id: &TopicId| taxonomy.get(id).ok_or_else(|| Error::UnknownTopic(id.to_string()));
    for e in &m.thresholds {
        states[lookup(&e.topic)?].threshold = Some(e.value);
    }
    for e in &m.eccentricities {
        states[lookup(&e.topic)?].eccentricity = Some(e.value);
    }
    let reps = decode_binary(reps)?;
    for (id, row) in reps.ids().iter().zip(reps.rows()) {
        states[lookup(&TopicId::new(id.as_str()))?].rep = Some(row.to_vec());
    }
    Ok(FittedModel {
        taxonomy,
        states,
        objective_trace: m.objective_trace,
        iterations_run: m.iterations_run,
        best_iteration: m.best_iteration,
        config: m.config,
    })
}

/// Write the model directory plus any `extras` (name, bytes). Files go to a
/// staging directory that is renamed into place, so a failed save leaves no
/// partial model.
pub fn save(model: &FittedModel, dir: impl AsRef<Path>, extras: &[(&str, Vec<u8>)]) -> Result<()> {
    let dir = dir.as_ref();
    let (manifest, reps) = encode(model)?;
    let name = dir
        .file_name()
        .ok_or_else(|| Error::ConfigInvalid(format!("`{}` is not a directory path", dir.display())))?;
    let staging = dir.with_file_name(format!(".{}.staging{}", name.to_string_lossy(), std::process::id()));
    if staging.exists() {
        std::fs::remove_dir_all(&staging)?;
    }
    std::fs::create_dir_all(&staging)?;
    let written = (|| -> Result<()> {
        std::fs::write(staging.join(MANIFEST), manifest)?;
        std::fs::write(staging.join(REPS), reps)?;
        for (name, bytes) in extras {
            std::fs::write(staging.join(name), bytes)?;
        }
        if dir.exists() {
            std::fs::remove_dir_all(dir)?;
        }
        std::fs::rename(&staging, dir)?;
        Ok(())
    })();
    if written.is_err() {
        let _ = std::fs::remove_dir_all(&staging);
    }
    written
}

pub fn load(dir: impl AsRef<Path>) -> Result<FittedModel> {
    let dir = dir.as_ref();
    let manifest = std::fs::read_to_string(dir.join(MANIFEST))?;
    let reps = std::fs::read(dir.join(REPS))?;
    decode(&manifest, &reps)
}
