//! Persistence and the export path: response catalogs, matrix CSV,
//! JSONL for datasets, corruptions, rankings, reports, and pairwise
//! fine-tuning records.
//!
//! Every file starts with a version marker. Matrix CSV cells use 17
//! significant digits so that save and load round-trip bitwise; empty
//! cells mean unobserved.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::adversary::{CorruptionSpace, SparseCorruption};
use crate::error::{Error, Result};
use crate::model::{
    btl_preference, BtlParams, ComparisonDataset, ComparisonRecord, LinkId, PreferenceMatrix,
};
use crate::ranking::Ranking;
use crate::recovery::{RecoveryReport, TraceEntry};

const MATRIX_VERSION: &str = "# curatron matrix v1";
const DATASET_VERSION: &str = "curatron dataset v1";
const CORRUPTION_VERSION: &str = "curatron corruption v1";
const RANKING_VERSION: &str = "curatron ranking v1";
const REPORT_VERSION: &str = "curatron report v1";
const CATALOG_VERSION: &str = "curatron catalog v1";
const EXPORT_VERSION: &str = "curatron export v1";

/// One rated response attached to a prompt. Scores are normalized to
/// `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseEntry {
    pub id: String,
    pub text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// All candidate responses for one prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseCatalog {
    pub prompt: String,
    pub responses: Vec<ResponseEntry>,
}

impl ResponseCatalog {
    pub fn new(prompt: String, responses: Vec<ResponseEntry>) -> Result<Self> {
        let c = ResponseCatalog { prompt, responses };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids = BTreeSet::new();
        for r in &self.responses {
            if !ids.insert(r.id.as_str()) {
                return Err(Error::invalid(format!("duplicate response id {:?}", r.id)));
            }
            if let Some(s) = r.score {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::invalid(format!(
                        "score of response {:?} outside [0,1]",
                        r.id
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

/// Removes exact duplicate response texts, keeping the first occurrence.
/// Returns the pruned catalog and the removed ids in input order.
pub fn dedup_responses(catalog: &ResponseCatalog) -> (ResponseCatalog, Vec<String>) {
    let mut seen = BTreeSet::new();
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for r in &catalog.responses {
        if seen.insert(r.text.clone()) {
            kept.push(r.clone());
        } else {
            removed.push(r.id.clone());
        }
    }
    (
        ResponseCatalog { prompt: catalog.prompt.clone(), responses: kept },
        removed,
    )
}

/// Builds the preference matrix of a fully scored catalog, using the
/// normalized scores directly as BTL parameters.
///
/// The model formula `P_ij = e^{-w_i}/(e^{-w_i}+e^{-w_j})` is applied
/// verbatim, so the response with the lower score wins the pairwise
/// comparison; pass scores through [`crate::model::btl_preference_oriented`]
/// for the opposite convention.
pub fn scores_to_matrix(catalog: &ResponseCatalog) -> Result<PreferenceMatrix> {
    catalog.validate()?;
    let missing: Vec<&str> = catalog
        .responses
        .iter()
        .filter(|r| r.score.is_none())
        .map(|r| r.id.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(Error::invalid(format!(
            "responses without scores: {}",
            missing.join(", ")
        )));
    }
    let w: Vec<f64> = catalog.responses.iter().map(|r| r.score.unwrap()).collect();
    btl_preference(&BtlParams::new(w)?)
}

/// One pairwise fine-tuning example.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairwiseExportRecord {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
}

/// How export pairs are drawn from a ranked catalog.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingStrategy {
    /// Top responses each paired with a disjoint random group drawn from
    /// the lowest-ranked ones (3 tops, groups of 7 from the bottom 21 at
    /// full size; proportionally scaled below 24 responses).
    TopGroups,
    /// Every ordered pair, better response chosen.
    AllPairs,
    /// The single best response against every other.
    BestOfN,
    /// Every other response against the single worst.
    WorstOfN,
}

/// Draws export records from a ranking over a catalog. Deterministic for
/// a fixed RNG stream; only `TopGroups` consumes randomness.
pub fn sample_pairs(
    p: &PreferenceMatrix,
    ranking: &Ranking,
    catalog: &ResponseCatalog,
    strategy: SamplingStrategy,
    rng: &mut impl Rng,
) -> Result<Vec<PairwiseExportRecord>> {
    ranking.validate()?;
    let n = catalog.len();
    if n < 2 {
        return Err(Error::invalid("export needs at least 2 responses"));
    }
    if ranking.n() != n || p.n() != n {
        return Err(Error::invalid("catalog, ranking, and matrix sizes must agree"));
    }
    let text = |item: usize| catalog.responses[item].text.clone();
    let make = |chosen: usize, rejected: usize| -> Result<PairwiseExportRecord> {
        if catalog.responses[chosen].text == catalog.responses[rejected].text {
            return Err(Error::invalid(
                "identical response texts in an export pair; deduplicate the catalog first",
            ));
        }
        Ok(PairwiseExportRecord {
            prompt: catalog.prompt.clone(),
            chosen: text(chosen),
            rejected: text(rejected),
        })
    };

    let order = &ranking.order;
    let mut records = Vec::new();
    match strategy {
        SamplingStrategy::TopGroups => {
            let tops_n = if n >= 24 {
                3
            } else {
                ((3.0 * n as f64 / 24.0).round() as usize).max(1)
            };
            let pool_n = (n - tops_n).min(if n >= 24 {
                21
            } else {
                ((21.0 * n as f64 / 24.0).round() as usize).max(1)
            });
            let group = (pool_n / tops_n).min(7);
            if group == 0 {
                return Err(Error::invalid(format!(
                    "{n} responses are too few for the top-groups strategy"
                )));
            }
            let mut pool: Vec<usize> = order[n - pool_n..].to_vec();
            for k in (1..pool.len()).rev() {
                let swap = rng.random_range(0..=k);
                pool.swap(k, swap);
            }
            for (t, &top) in order[..tops_n].iter().enumerate() {
                for &low in &pool[t * group..(t + 1) * group] {
                    records.push(make(top, low)?);
                }
            }
        }
        SamplingStrategy::AllPairs => {
            for a in 0..n {
                for b in (a + 1)..n {
                    records.push(make(order[a], order[b])?);
                }
            }
        }
        SamplingStrategy::BestOfN => {
            for &other in &order[1..] {
                records.push(make(order[0], other)?);
            }
        }
        SamplingStrategy::WorstOfN => {
            for &other in &order[..n - 1] {
                records.push(make(other, order[n - 1])?);
            }
        }
    }
    Ok(records)
}

fn fmt_cell(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_reader(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn open_writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

/// Writes a preference matrix as versioned CSV: version comment, `n`, and
/// `n` rows of 17-digit cells with unobserved pairs left empty.
pub fn save_matrix(path: &Path, p: &PreferenceMatrix) -> Result<()> {
    let mut w = open_writer(path)?;
    writeln!(w, "{MATRIX_VERSION}")?;
    writeln!(w, "{}", p.n())?;
    for i in 0..p.n() {
        let row: Vec<String> = (0..p.n())
            .map(|j| {
                if p.is_observed(i, j) {
                    fmt_cell(p.get(i, j))
                } else {
                    String::new()
                }
            })
            .collect();
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a matrix written by [`save_matrix`], validating all invariants.
pub fn load_matrix(path: &Path) -> Result<PreferenceMatrix> {
    let reader = open_reader(path)?;
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if first?.trim_end() != MATRIX_VERSION {
        return Err(parse_err(1, format!("expected version line {MATRIX_VERSION:?}")));
    }
    let (_, second) = lines.next().ok_or_else(|| parse_err(2, "missing size line"))?;
    let n: usize = second?
        .trim()
        .parse()
        .map_err(|e| parse_err(2, format!("bad matrix size: {e}")))?;
    let mut entries = DMatrix::from_element(n, n, 0.5);
    let mut mask = DMatrix::from_element(n, n, true);
    for i in 0..n {
        let (idx, line) = lines
            .next()
            .ok_or_else(|| parse_err(3 + i, "missing matrix row"))?;
        let line = line?;
        let cells: Vec<&str> = line.trim_end_matches('\r').split(',').collect();
        if cells.len() != n {
            return Err(parse_err(idx + 1, format!("expected {n} cells, found {}", cells.len())));
        }
        for (j, cell) in cells.iter().enumerate() {
            if cell.is_empty() {
                entries[(i, j)] = 0.5;
                mask[(i, j)] = false;
            } else {
                entries[(i, j)] = cell
                    .parse()
                    .map_err(|e| parse_err(idx + 1, format!("bad cell {j}: {e}")))?;
                mask[(i, j)] = true;
            }
        }
    }
    PreferenceMatrix::new(entries, mask)
}

#[derive(Serialize, Deserialize)]
struct DatasetHeader {
    version: String,
    n: usize,
}

/// Writes a comparison dataset as JSONL with a version header line.
pub fn save_dataset(path: &Path, data: &ComparisonDataset) -> Result<()> {
    let mut w = open_writer(path)?;
    let header = DatasetHeader { version: DATASET_VERSION.into(), n: data.n };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for r in &data.records {
        writeln!(w, "{}", serde_json::to_string(r).expect("record serializes"))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset written by [`save_dataset`].
pub fn load_dataset(path: &Path) -> Result<ComparisonDataset> {
    let reader = open_reader(path)?;
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header: DatasetHeader = serde_json::from_str(&first?)
        .map_err(|e| parse_err(1, format!("bad header: {e}")))?;
    if header.version != DATASET_VERSION {
        return Err(parse_err(1, format!("unsupported version {:?}", header.version)));
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ComparisonRecord = serde_json::from_str(&line)
            .map_err(|e| parse_err(idx + 1, format!("bad record: {e}")))?;
        records.push(r);
    }
    ComparisonDataset::new(header.n, records)
}

#[derive(Serialize, Deserialize)]
struct CorruptionHeader {
    version: String,
    n: usize,
}

#[derive(Serialize, Deserialize)]
struct CorruptionTriple {
    i: usize,
    j: usize,
    delta: f64,
    space: CorruptionSpace,
}

/// Writes a sparse corruption as JSONL triples.
pub fn save_corruption(path: &Path, c: &SparseCorruption) -> Result<()> {
    let mut w = open_writer(path)?;
    let header = CorruptionHeader { version: CORRUPTION_VERSION.into(), n: c.n };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for &(i, j, delta) in &c.triples {
        let t = CorruptionTriple { i, j, delta, space: c.space };
        writeln!(w, "{}", serde_json::to_string(&t).expect("triple serializes"))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a corruption written by [`save_corruption`]. An empty triple list
/// loads as an empty logit-space corruption.
pub fn load_corruption(path: &Path) -> Result<SparseCorruption> {
    let reader = open_reader(path)?;
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header: CorruptionHeader = serde_json::from_str(&first?)
        .map_err(|e| parse_err(1, format!("bad header: {e}")))?;
    if header.version != CORRUPTION_VERSION {
        return Err(parse_err(1, format!("unsupported version {:?}", header.version)));
    }
    let mut triples = Vec::new();
    let mut space = None;
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let t: CorruptionTriple = serde_json::from_str(&line)
            .map_err(|e| parse_err(idx + 1, format!("bad triple: {e}")))?;
        if *space.get_or_insert(t.space) != t.space {
            return Err(parse_err(idx + 1, "mixed corruption spaces in one file"));
        }
        triples.push((t.i, t.j, t.delta));
    }
    SparseCorruption::new(header.n, triples, space.unwrap_or(CorruptionSpace::Logit))
}

#[derive(Serialize, Deserialize)]
struct RankingDocument {
    version: String,
    order: Vec<usize>,
    scores: Vec<f64>,
}

/// Writes a ranking as a single JSON document.
pub fn save_ranking(path: &Path, r: &Ranking) -> Result<()> {
    let doc = RankingDocument {
        version: RANKING_VERSION.into(),
        order: r.order.clone(),
        scores: r.scores.clone(),
    };
    let mut w = open_writer(path)?;
    writeln!(w, "{}", serde_json::to_string(&doc).expect("ranking serializes"))?;
    w.flush()?;
    Ok(())
}

/// Reads a ranking written by [`save_ranking`], validating the
/// permutation.
pub fn load_ranking(path: &Path) -> Result<Ranking> {
    let reader = open_reader(path)?;
    let line = reader
        .lines()
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))??;
    let doc: RankingDocument =
        serde_json::from_str(&line).map_err(|e| parse_err(1, format!("bad ranking: {e}")))?;
    if doc.version != RANKING_VERSION {
        return Err(parse_err(1, format!("unsupported version {:?}", doc.version)));
    }
    Ranking::new(doc.order, doc.scores)
}

/// JSON shape of a recovery report: spectrum, detected support, and the
/// convergence trace. The low-rank matrix itself is saved separately as
/// CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub version: String,
    pub n: usize,
    pub link: LinkId,
    pub singular_values: Vec<f64>,
    pub iterations_used: usize,
    pub residual_frobenius: f64,
    pub converged: bool,
    pub detected: Vec<(usize, usize, f64)>,
    pub trace: Vec<TraceEntry>,
}

impl From<&RecoveryReport> for ReportDocument {
    fn from(r: &RecoveryReport) -> Self {
        ReportDocument {
            version: REPORT_VERSION.into(),
            n: r.l_hat.n(),
            link: r.l_hat.link_id,
            singular_values: r.singular_values.clone(),
            iterations_used: r.iterations_used,
            residual_frobenius: r.residual_frobenius,
            converged: r.converged,
            detected: r.s_hat.triples.clone(),
            trace: r.trace.clone(),
        }
    }
}

/// Writes the JSON document form of a recovery report.
pub fn save_report(path: &Path, report: &RecoveryReport) -> Result<()> {
    let doc = ReportDocument::from(report);
    let mut w = open_writer(path)?;
    writeln!(w, "{}", serde_json::to_string(&doc).expect("report serializes"))?;
    w.flush()?;
    Ok(())
}

/// Reads a report document written by [`save_report`].
pub fn load_report(path: &Path) -> Result<ReportDocument> {
    let reader = open_reader(path)?;
    let line = reader
        .lines()
        .next()
        .ok_or_else(|| parse_err(1, "empty file"))??;
    let doc: ReportDocument =
        serde_json::from_str(&line).map_err(|e| parse_err(1, format!("bad report: {e}")))?;
    if doc.version != REPORT_VERSION {
        return Err(parse_err(1, format!("unsupported version {:?}", doc.version)));
    }
    Ok(doc)
}

#[derive(Serialize, Deserialize)]
struct CatalogHeader {
    version: String,
    prompt: String,
}

/// Writes a response catalog as JSONL: header with the prompt, then one
/// response per line.
pub fn save_catalog(path: &Path, c: &ResponseCatalog) -> Result<()> {
    let mut w = open_writer(path)?;
    let header = CatalogHeader { version: CATALOG_VERSION.into(), prompt: c.prompt.clone() };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for r in &c.responses {
        writeln!(w, "{}", serde_json::to_string(r).expect("response serializes"))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a catalog written by [`save_catalog`].
pub fn load_catalog(path: &Path) -> Result<ResponseCatalog> {
    let reader = open_reader(path)?;
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header: CatalogHeader = serde_json::from_str(&first?)
        .map_err(|e| parse_err(1, format!("bad header: {e}")))?;
    if header.version != CATALOG_VERSION {
        return Err(parse_err(1, format!("unsupported version {:?}", header.version)));
    }
    let mut responses = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: ResponseEntry = serde_json::from_str(&line)
            .map_err(|e| parse_err(idx + 1, format!("bad response: {e}")))?;
        responses.push(r);
    }
    ResponseCatalog::new(header.prompt, responses)
}

#[derive(Serialize, Deserialize)]
struct ExportHeader {
    version: String,
}

/// Writes pairwise export records as JSONL.
pub fn save_export(path: &Path, records: &[PairwiseExportRecord]) -> Result<()> {
    let mut w = open_writer(path)?;
    let header = ExportHeader { version: EXPORT_VERSION.into() };
    writeln!(w, "{}", serde_json::to_string(&header).expect("header serializes"))?;
    for r in records {
        writeln!(w, "{}", serde_json::to_string(r).expect("record serializes"))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads export records written by [`save_export`].
pub fn load_export(path: &Path) -> Result<Vec<PairwiseExportRecord>> {
    let reader = open_reader(path)?;
    let mut lines = reader.lines().enumerate();
    let (_, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let header: ExportHeader = serde_json::from_str(&first?)
        .map_err(|e| parse_err(1, format!("bad header: {e}")))?;
    if header.version != EXPORT_VERSION {
        return Err(parse_err(1, format!("unsupported version {:?}", header.version)));
    }
    let mut records = Vec::new();
    for (idx, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r: PairwiseExportRecord = serde_json::from_str(&line)
            .map_err(|e| parse_err(idx + 1, format!("bad record: {e}")))?;
        if r.chosen == r.rejected {
            return Err(parse_err(idx + 1, "chosen and rejected must differ"));
        }
        records.push(r);
    }
    Ok(records)
}
