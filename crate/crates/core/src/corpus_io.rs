//! Embedding, seed, gold-label, and assignment file formats.
//!
//! Binary embeddings (`HSD1`):
//!
//! ```text
//! magic "HSD1" | u32 dim | u64 count | count × (u16 id_len | id bytes | dim × f32)
//! ```
//!
//! all little-endian. CSV embeddings are `doc_id,v1,...,vd` rows without a
//! header. Seeds and gold labels are `doc_id<TAB>topic_id` rows. Lines that
//! start with `#` are comments in every text format.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::taxonomy::{NodeKind, Taxonomy, TopicId};

pub const MAGIC: &[u8; 4] = b"HSD1";

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(String);

impl DocId {
    pub fn new(id: impl Into<String>) -> Self {
        DocId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DocId {
    fn from(s: &str) -> Self {
        DocId::new(s)
    }
}

/// Row-major matrix of document vectors keyed by document id.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    dim: usize,
    ids: Vec<DocId>,
    data: Vec<f64>,
    index: HashMap<DocId, usize>,
}

impl Corpus {
    pub fn new(dim: usize) -> Self {
        Corpus {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_rows(dim: usize, rows: impl IntoIterator<Item = (DocId, Vec<f64>)>) -> Result<Self> {
        let mut c = Corpus::new(dim);
        for (id, v) in rows {
            c.push(id, &v)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, id: DocId, vector: &[f64]) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::dim_mismatch("dimension must be positive", 1, 0));
        }
        if vector.len() != self.dim {
            return Err(Error::dim_mismatch(format!("document `{id}`"), self.dim, vector.len()));
        }
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(id.to_string()));
        }
        if self.index.contains_key(&id) {
            return Err(Error::DuplicateDocId(id.to_string()));
        }
        self.index.insert(id.clone(), self.ids.len());
        self.ids.push(id);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[DocId] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &DocId {
        &self.ids[i]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn position(&self, id: &DocId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &DocId) -> Option<&[f64]> {
        self.position(id).map(|i| self.row(i))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingFormat {
    Binary,
    Csv,
}

impl EmbeddingFormat {
    /// `.csv` files are CSV, everything else binary.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => EmbeddingFormat::Csv,
            _ => EmbeddingFormat::Binary,
        }
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Truncated(format!("{what} at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn array<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        Ok(self.take(N, what)?.try_into().expect("length checked"))
    }

    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }
}

/// Decode an `HSD1` buffer.
pub fn decode_binary(bytes: &[u8]) -> Result<Corpus> {
    let mut r = ByteReader { buf: bytes, pos: 0 };
    if r.take(4, "magic").map_err(|_| Error::BadMagic)? != MAGIC {
        return Err(Error::BadMagic);
    }
    let dim = u32::from_le_bytes(r.array("dim")?) as usize;
    let count = u64::from_le_bytes(r.array("count")?);
    if dim == 0 {
        return Err(Error::dim_mismatch("header", 1, 0));
    }
    let mut corpus = Corpus::new(dim);
    // each record is at least 2 + 4·dim bytes; never trust count for allocation
    let min_record = dim
        .checked_mul(4)
        .and_then(|b| b.checked_add(2))
        .ok_or_else(|| Error::Truncated(format!("dimension {dim} too large")))?;
    if count > 0 && r.remaining() < min_record {
        return Err(Error::Truncated(format!(
            "{count} records of dimension {dim} need at least {min_record} bytes, {} left",
            r.remaining()
        )));
    }
    let cap = (r.remaining() / min_record).min(count as usize);
    corpus.ids.reserve(cap);
    corpus.data.reserve(cap * dim);
    let mut row = if count > 0 { vec![0.0f64; dim] } else { Vec::new() };
    for _ in 0..count {
        let len = u16::from_le_bytes(r.array("id length")?) as usize;
        let id = std::str::from_utf8(r.take(len, "id")?)
            .map_err(|_| Error::Truncated(format!("invalid UTF-8 id at byte {}", r.pos)))?;
        let raw = r.take(4 * dim, "vector")?;
        for (v, b) in row.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes(b.try_into().expect("chunk of 4")) as f64;
        }
        corpus.push(DocId::new(id), &row)?;
    }
    if r.remaining() != 0 {
        return Err(Error::Truncated(format!(
            "{} trailing bytes after {count} records",
            r.remaining()
        )));
    }
    Ok(corpus)
}

/// Encode as `HSD1`. Values are narrowed to `f32`.
pub fn encode_binary(corpus: &Corpus) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(16 + corpus.len() * (2 + 16 + 4 * corpus.dim()));
    out.extend_from_slice(MAGIC);
    let dim = u32::try_from(corpus.dim()).map_err(|_| Error::ConfigInvalid("dimension exceeds u32".into()))?;
    out.extend_from_slice(&dim.to_le_bytes());
    out.extend_from_slice(&(corpus.len() as u64).to_le_bytes());
    for (id, row) in corpus.ids().iter().zip(corpus.rows()) {
        let bytes = id.as_str().as_bytes();
        let len = u16::try_from(bytes.len())
            .map_err(|_| Error::ConfigInvalid(format!("document id `{id}` longer than 65535 bytes")))?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(bytes);
        for &v in row {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    Ok(out)
}

fn text_reader(text: &[u8], delimiter: u8) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .comment(Some(b'#'))
        .flexible(true)
        .quoting(delimiter == b',')
        .from_reader(text)
}

fn record_line(rec: &csv::StringRecord, fallback: usize) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(fallback)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    Error::MalformedLine {
        line,
        reason: e.to_string(),
    }
}

/// Parse CSV embeddings. The dimension is fixed by the first row.
pub fn parse_csv(text: &[u8]) -> Result<Corpus> {
    let mut reader = text_reader(text, b',');
    let mut corpus: Option<Corpus> = None;
    let mut row = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = record_line(&rec, n + 1);
        let mut fields = rec.iter();
        let id = fields.next().unwrap_or("");
        row.clear();
        for f in fields {
            let v: f64 = f.trim().parse().map_err(|_| Error::MalformedLine {
                line,
                reason: format!("`{f}` is not a number"),
            })?;
            row.push(v);
        }
        if row.is_empty() {
            return Err(Error::MalformedLine {
                line,
                reason: "row has no values".into(),
            });
        }
        let c = corpus.get_or_insert_with(|| Corpus::new(row.len()));
        c.push(DocId::new(id), &row)?;
    }
    corpus.ok_or(Error::EmptyCorpus)
}

pub fn write_csv(corpus: &Corpus) -> String {
    let mut out = String::new();
    for (id, row) in corpus.ids().iter().zip(corpus.rows()) {
        let id = id.as_str();
        // a leading BOM would be taken for the file's own
        if id.starts_with(['#', '\u{feff}']) || id.contains([',', '"', '\n', '\r']) {
            out.push('"');
            out.push_str(&id.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(id);
        }
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn load_embeddings(path: impl AsRef<Path>, format: EmbeddingFormat) -> Result<Corpus> {
    let bytes = std::fs::read(path)?;
    match format {
        EmbeddingFormat::Binary => decode_binary(&bytes),
        EmbeddingFormat::Csv => parse_csv(&bytes),
    }
}

pub fn save_embeddings(path: impl AsRef<Path>, corpus: &Corpus, format: EmbeddingFormat) -> Result<()> {
    let bytes = match format {
        EmbeddingFormat::Binary => encode_binary(corpus)?,
        EmbeddingFormat::Csv => write_csv(corpus).into_bytes(),
    };
    write_atomic(path.as_ref(), &bytes)
}

/// Write to a sibling temp file and rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::ConfigInvalid(format!("`{}` is not a file path", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp{}", file_name.to_string_lossy(), std::process::id()));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

/// `(doc_id, topic_id)` rows of a seeds or gold TSV, in file order.
pub fn parse_pairs(text: &[u8]) -> Result<Vec<(DocId, TopicId)>> {
    let mut reader = text_reader(text, b'\t');
    let mut out = Vec::new();
    for (n, rec) in reader.records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = record_line(&rec, n + 1);
        if rec.len() != 2 || rec[0].is_empty() || rec[1].is_empty() {
            return Err(Error::MalformedLine {
                line,
                reason: format!("expected `doc_id<TAB>topic_id`, found {} fields", rec.len()),
            });
        }
        out.push((DocId::new(&rec[0]), TopicId::new(&rec[1])));
    }
    Ok(out)
}

pub fn write_pairs(header: Option<&str>, pairs: &[(DocId, TopicId)]) -> String {
    let mut out = String::new();
    if let Some(h) = header {
        for line in h.lines() {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
    if out.is_empty() && pairs.first().is_some_and(|(d, _)| d.as_str().starts_with('\u{feff}')) {
        // readers drop one leading BOM; give them ours
        out.push('\u{feff}');
    }
    for (d, t) in pairs {
        out.push_str(d.as_str());
        out.push('\t');
        out.push_str(t.as_str());
        out.push('\n');
    }
    out
}

/// Seed vectors per topic, in file order within each topic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeedSet {
    by_topic: BTreeMap<TopicId, Vec<(DocId, Vec<f64>)>>,
}

impl SeedSet {
    /// Resolve seed pairs against `vectors` and check coverage: every user
    /// topic at or below the pivot needs at least one seed.
    pub fn resolve(pairs: &[(DocId, TopicId)], taxonomy: &Taxonomy, vectors: &Corpus) -> Result<Self> {
        let mut by_topic: BTreeMap<TopicId, Vec<(DocId, Vec<f64>)>> = BTreeMap::new();
        for (doc, topic) in pairs {
            match taxonomy.get(topic) {
                Some(i) if taxonomy.node(i).kind == NodeKind::User => {}
                _ => return Err(Error::UnknownTopic(topic.to_string())),
            }
            let v = vectors.get(doc).ok_or_else(|| Error::UnknownDoc(doc.to_string()))?;
            let entry = by_topic.entry(topic.clone()).or_default();
            if !entry.iter().any(|(d, _)| d == doc) {
                entry.push((doc.clone(), v.to_vec()));
            }
        }
        let missing: Vec<String> = taxonomy
            .preorder()
            .into_iter()
            .filter(|&i| {
                let n = taxonomy.node(i);
                n.kind == NodeKind::User && n.level >= taxonomy.pivot() && !by_topic.contains_key(&n.id)
            })
            .map(|i| taxonomy.id(i).to_string())
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingSeedsForTopic(missing));
        }
        Ok(SeedSet { by_topic })
    }

    pub fn get(&self, topic: &TopicId) -> Option<&[(DocId, Vec<f64>)]> {
        self.by_topic.get(topic).map(Vec::as_slice)
    }

    pub fn topics(&self) -> impl Iterator<Item = &TopicId> {
        self.by_topic.keys()
    }

    pub fn dim(&self) -> Option<usize> {
        self.by_topic.values().flatten().map(|(_, v)| v.len()).next()
    }
}

pub fn load_seeds(path: impl AsRef<Path>, taxonomy: &Taxonomy, vectors: &Corpus) -> Result<SeedSet> {
    let pairs = parse_pairs(&std::fs::read(path)?)?;
    SeedSet::resolve(&pairs, taxonomy, vectors)
}

/// Gold topics per document (multi-label).
pub type GoldLabels = BTreeMap<DocId, BTreeSet<TopicId>>;

/// Gold labels; ids must exist in `taxonomy` (Other ids are accepted when the
/// taxonomy has been extended, see [`Taxonomy::with_all_others`]).
pub fn gold_from_pairs(pairs: &[(DocId, TopicId)], taxonomy: &Taxonomy) -> Result<GoldLabels> {
    let mut gold = GoldLabels::new();
    for (doc, topic) in pairs {
        if taxonomy.get(topic).is_none() {
            return Err(Error::UnknownTopic(topic.to_string()));
        }
        gold.entry(doc.clone()).or_default().insert(topic.clone());
    }
    Ok(gold)
}

pub fn load_gold(path: impl AsRef<Path>, taxonomy: &Taxonomy) -> Result<GoldLabels> {
    gold_from_pairs(&parse_pairs(&std::fs::read(path)?)?, taxonomy)
}

/// Per-document outcome: a path from the pivot level to a leaf, or `__none__`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssignmentRecord {
    pub doc: DocId,
    pub path: Vec<TopicId>,
    pub distances: BTreeMap<TopicId, f64>,
}

impl AssignmentRecord {
    pub fn none(doc: DocId) -> Self {
        AssignmentRecord {
            doc,
            path: vec![TopicId::none()],
            distances: BTreeMap::new(),
        }
    }

    pub fn is_none(&self) -> bool {
        matches!(self.path.as_slice(), [t] if t.is_none_label())
    }

    fn check(&self, taxonomy: &Taxonomy) -> std::result::Result<(), String> {
        if self.is_none() {
            return Ok(());
        }
        let mut prev: Option<usize> = None;
        for t in &self.path {
            let i = taxonomy.get(t).ok_or_else(|| format!("unknown topic `{t}`"))?;
            match prev {
                None if taxonomy.level(i) != taxonomy.pivot() => {
                    return Err(format!(
                        "path starts at `{t}` (level {}), expected pivot level {}",
                        taxonomy.level(i),
                        taxonomy.pivot()
                    ))
                }
                Some(p) if taxonomy.node(i).parent != Some(p) => {
                    return Err(format!("`{t}` is not a child of `{}`", taxonomy.id(p)))
                }
                _ => {}
            }
            prev = Some(i);
        }
        if prev.is_none() {
            return Err("empty path".into());
        }
        if let Some((k, v)) = self.distances.iter().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(format!("distance for `{k}` is {v}"));
        }
        Ok(())
    }
}

pub fn write_assignments(records: &[AssignmentRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parse JSON-lines assignments and validate paths against `taxonomy`.
pub fn parse_assignments(text: &str, taxonomy: &Taxonomy) -> Result<Vec<AssignmentRecord>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line_no = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: AssignmentRecord = serde_json::from_str(line).map_err(|e| Error::MalformedLine {
            line: line_no,
            reason: e.to_string(),
        })?;
        rec.check(taxonomy)
            .map_err(|reason| Error::MalformedLine { line: line_no, reason })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn save_assignments(path: impl AsRef<Path>, records: &[AssignmentRecord]) -> Result<()> {
    write_atomic(path.as_ref(), write_assignments(records)?.as_bytes())
}

pub fn read_assignments(path: impl AsRef<Path>, taxonomy: &Taxonomy) -> Result<Vec<AssignmentRecord>> {
    parse_assignments(&std::fs::read_to_string(path)?, taxonomy)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> Corpus {
        Corpus::from_rows(
            4,
            [
                (DocId::new("a"), vec![0.5, -1.0, 2.25, 3.0]),
                (DocId::new("b"), vec![1e-3, 0.0, -0.0, 7.0]),
                (DocId::new("c"), vec![f32::MAX as f64, 1.0, 2.0, 3.0]),
            ],
        )
        .unwrap()
    }

    fn taxonomy() -> Taxonomy {
        Taxonomy::parse(
            r#"{"pivot":1,"nodes":[{"id":"r","parent":null},{"id":"a","parent":"r"},
            {"id":"a1","parent":"a"},{"id":"a2","parent":"a"},{"id":"b","parent":"r"}]}"#,
        )
        .unwrap()
    }

    #[test]
    fn ids_starting_with_a_bom_survive() {
        let c = Corpus::from_rows(1, [(DocId::new("\u{feff}x"), vec![1.0]), (DocId::new("\u{feff}"), vec![2.0])]).unwrap();
        let text = write_csv(&c);
        assert_eq!(parse_csv(text.as_bytes()).unwrap(), c);
        let pairs = vec![
            (DocId::new("\u{feff}"), TopicId::new("t")),
            (DocId::new("\u{feff}d"), TopicId::new("\u{feff}")),
        ];
        let text = write_pairs(None, &pairs);
        assert_eq!(parse_pairs(text.as_bytes()).unwrap(), pairs);
        // a file BOM in front of ordinary ids is still skipped
        assert_eq!(parse_pairs("\u{feff}d\tt\n".as_bytes()).unwrap(), vec![(DocId::new("d"), TopicId::new("t"))]);
    }

    #[test]
    fn binary_roundtrip_bit_exact() {
        let c = Corpus::from_rows(
            4,
            small().ids().iter().cloned().zip(
                small()
                    .rows()
                    .map(|r| r.iter().map(|&v| v as f32 as f64).collect::<Vec<_>>()),
            ),
        )
        .unwrap();
        let back = decode_binary(&encode_binary(&c).unwrap()).unwrap();
        assert_eq!(c.ids(), back.ids());
        for (x, y) in c.rows().flatten().zip(back.rows().flatten()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }

    #[test]
    fn binary_errors() {
        assert!(matches!(decode_binary(b"NOPE"), Err(Error::BadMagic)));
        assert!(matches!(decode_binary(b"HS"), Err(Error::BadMagic)));
        let mut bytes = encode_binary(&small()).unwrap();
        bytes.pop();
        assert!(matches!(decode_binary(&bytes), Err(Error::Truncated(_))));
        let mut huge = b"HSD1".to_vec();
        huge.extend_from_slice(&4u32.to_le_bytes());
        huge.extend_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(decode_binary(&huge), Err(Error::Truncated(_))));
        // a huge declared dimension must not allocate a row before the length check
        let mut wide = b"HSD1".to_vec();
        wide.extend_from_slice(&u32::MAX.to_le_bytes());
        wide.extend_from_slice(&1u64.to_le_bytes());
        wide.extend_from_slice(&[0, 0]);
        assert!(matches!(decode_binary(&wide), Err(Error::Truncated(_))));
        let mut empty_wide = b"HSD1".to_vec();
        empty_wide.extend_from_slice(&u32::MAX.to_le_bytes());
        empty_wide.extend_from_slice(&0u64.to_le_bytes());
        assert_eq!(decode_binary(&empty_wide).unwrap().len(), 0);
        let mut nan = encode_binary(&small()).unwrap();
        let at = 16 + 2 + 1;
        nan[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(decode_binary(&nan), Err(Error::NonFiniteValue(_))));
    }

    #[test]
    fn csv_roundtrip_and_errors() {
        let c = small();
        assert_eq!(parse_csv(write_csv(&c).as_bytes()).unwrap(), c);
        let short = parse_csv(b"a,1,2,3,4\nb,1,2,3\n");
        assert!(matches!(
            short,
            Err(Error::DimMismatch {
                expected: 4,
                found: 3,
                ..
            })
        ));
        assert!(matches!(parse_csv(b"a,1,NaN,3\n"), Err(Error::NonFiniteValue(_))));
        assert!(matches!(parse_csv(b"a,1\na,2\n"), Err(Error::DuplicateDocId(_))));
        assert!(matches!(parse_csv(b"a,x\n"), Err(Error::MalformedLine { line: 1, .. })));
        let commented = parse_csv(b"# header\na,1,2\n").unwrap();
        assert_eq!(commented.len(), 1);
    }

    #[test]
    fn seeds_resolution() {
        let t = taxonomy();
        let c = Corpus::from_rows(1, ["s1", "s2", "s3"].iter().map(|d| (DocId::new(*d), vec![1.0]))).unwrap();
        let ok = parse_pairs(b"s1\ta\ns2\ta1\ns3\ta2\ns3\tb\n").unwrap();
        let seeds = SeedSet::resolve(&ok, &t, &c).unwrap();
        assert_eq!(seeds.get(&"a".into()).unwrap().len(), 1);

        let unknown = parse_pairs(b"s1\tzzz\n").unwrap();
        assert!(matches!(
            SeedSet::resolve(&unknown, &t, &c),
            Err(Error::UnknownTopic(_))
        ));
        let doc = parse_pairs(b"nope\ta\n").unwrap();
        assert!(matches!(SeedSet::resolve(&doc, &t, &c), Err(Error::UnknownDoc(_))));
        let partial = parse_pairs(b"s1\ta\ns2\ta1\n").unwrap();
        match SeedSet::resolve(&partial, &t, &c) {
            Err(Error::MissingSeedsForTopic(m)) => assert_eq!(m, ["a2", "b"]),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse_pairs(b"a\tb\tc\n"),
            Err(Error::MalformedLine { line: 1, .. })
        ));
    }

    #[test]
    fn assignment_lines() {
        let t = taxonomy();
        let recs = vec![
            AssignmentRecord {
                doc: "d1".into(),
                path: vec!["a".into(), "a2".into()],
                distances: [("a".into(), 1.5), ("a2".into(), 0.25)].into_iter().collect(),
            },
            AssignmentRecord::none("d2".into()),
        ];
        let text = write_assignments(&recs).unwrap();
        assert_eq!(parse_assignments(&text, &t).unwrap(), recs);

        let wrong_level = r#"{"doc":"x","path":["a1"],"distances":{}}"#;
        assert!(matches!(
            parse_assignments(wrong_level, &t),
            Err(Error::MalformedLine { line: 1, .. })
        ));
        let not_child = "\n{\"doc\":\"x\",\"path\":[\"b\",\"a1\"],\"distances\":{}}";
        assert!(matches!(
            parse_assignments(not_child, &t),
            Err(Error::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(parse_assignments("{", &t), Err(Error::MalformedLine { .. })));
    }

    #[test]
    fn gold_accepts_other_after_extension() {
        let t = taxonomy();
        let pairs = parse_pairs(b"d1\ta::other\nd1\tb\n").unwrap();
        assert!(matches!(gold_from_pairs(&pairs, &t), Err(Error::UnknownTopic(_))));
        let gold = gold_from_pairs(&pairs, &t.with_all_others()).unwrap();
        assert_eq!(gold[&DocId::new("d1")].len(), 2);
    }
}
