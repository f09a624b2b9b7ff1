//! Citation-record ingest, coauthor graph construction, dominance-directed
//! influence graphs, time windows and ±1 author-reference state series.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One published item: its authors, year and outgoing references.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CitationRecord {
    pub paper_id: String,
    pub authors: Vec<String>,
    pub year: i32,
    #[serde(default)]
    pub references: Vec<String>,
}

/// Supported ingest formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IngestFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for IngestFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(IngestFormat::Csv),
            "jsonl" | "json" => Ok(IngestFormat::Jsonl),
            other => Err(Error::UnknownFormat(other.to_string())),
        }
    }
}

/// Half-open year interval `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Self {
        YearRange { start, end }
    }

    pub fn contains(&self, year: i32) -> bool {
        self.start <= year && year < self.end
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    pub fn len_years(&self) -> i32 {
        (self.end - self.start).max(0)
    }
}

impl std::fmt::Display for YearRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}, {})", self.start, self.end)
    }
}

const CSV_HEADER: [&str; 4] = ["paper_id", "authors", "year", "references"];

/// Parse citation records from a byte stream.
///
/// CSV schema: `paper_id,authors,year,references` with `;`-separated author
/// and reference lists and a mandatory header row. JSONL: one object per line
/// with keys `paper_id`, `authors`, `year`, `references`. Record order is
/// preserved; malformed rows are reported with their line number.
pub fn ingest_records<R: BufRead>(reader: R, format: IngestFormat) -> Result<Vec<CitationRecord>> {
    match format {
        IngestFormat::Csv => ingest_csv(reader),
        IngestFormat::Jsonl => ingest_jsonl(reader),
    }
}

fn validate_record(rec: &CitationRecord, line: usize) -> Result<()> {
    if rec.authors.is_empty() {
        return Err(Error::MalformedRecord {
            line,
            msg: "record has no authors".into(),
        });
    }
    if rec.paper_id.is_empty() {
        return Err(Error::MalformedRecord {
            line,
            msg: "empty paper_id".into(),
        });
    }
    Ok(())
}

fn split_list(field: &str) -> Vec<String> {
    field
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn ingest_csv<R: BufRead>(reader: R) -> Result<Vec<CitationRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(reader);
    {
        let headers = rdr.headers().map_err(|e| Error::MalformedRecord {
            line: 1,
            msg: format!("missing header: {e}"),
        })?;
        let got: Vec<&str> = headers.iter().map(str::trim).collect();
        if got != CSV_HEADER {
            return Err(Error::MalformedRecord {
                line: 1,
                msg: format!("bad header {:?}, expected {:?}", got, CSV_HEADER),
            });
        }
    }
    let mut records = Vec::new();
    for row in rdr.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
                return Err(Error::MalformedRecord {
                    line,
                    msg: e.to_string(),
                });
            }
        };
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        if row.len() != 4 {
            return Err(Error::MalformedRecord {
                line,
                msg: format!("expected 4 fields, got {}", row.len()),
            });
        }
        let year: i32 = row[2].trim().parse().map_err(|_| Error::MalformedRecord {
            line,
            msg: format!("invalid year `{}`", &row[2]),
        })?;
        let rec = CitationRecord {
            paper_id: row[0].trim().to_string(),
            authors: split_list(&row[1]),
            year,
            references: split_list(&row[3]),
        };
        validate_record(&rec, line)?;
        records.push(rec);
    }
    Ok(records)
}

fn ingest_jsonl<R: BufRead>(reader: R) -> Result<Vec<CitationRecord>> {
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: CitationRecord =
            serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                line: line_no,
                msg: e.to_string(),
            })?;
        validate_record(&rec, line_no)?;
        records.push(rec);
    }
    Ok(records)
}

/// Reject records whose year falls outside the configured corpus range.
pub fn validate_year_range(records: &[CitationRecord], range: YearRange) -> Result<()> {
    for (idx, rec) in records.iter().enumerate() {
        if !range.contains(rec.year) {
            return Err(Error::MalformedRecord {
                line: idx + 1,
                msg: format!("year {} outside corpus range {}", rec.year, range),
            });
        }
    }
    Ok(())
}

/// Serialize records in the CSV ingest schema.
pub fn write_records_csv<W: Write>(records: &[CitationRecord], mut w: W) -> Result<()> {
    writeln!(w, "{}", CSV_HEADER.join(","))?;
    for rec in records {
        writeln!(
            w,
            "{},{},{},{}",
            rec.paper_id,
            rec.authors.join(";"),
            rec.year,
            rec.references.join(";")
        )?;
    }
    Ok(())
}

/// Serialize records as JSON lines.
pub fn write_records_jsonl<W: Write>(records: &[CitationRecord], mut w: W) -> Result<()> {
    for rec in records {
        writeln!(w, "{}", serde_json::to_string(rec)?)?;
    }
    Ok(())
}

/// Undirected coauthor graph; each edge carries its earliest coauthorship year.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoauthorGraph {
    nodes: BTreeSet<String>,
    /// Keyed by the lexicographically ordered author pair.
    edges: BTreeMap<(String, String), i32>,
}

impl CoauthorGraph {
    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as (a, b, earliest year) with `a < b`.
    pub fn edges(&self) -> impl Iterator<Item = (&str, &str, i32)> {
        self.edges
            .iter()
            .map(|((a, b), &y)| (a.as_str(), b.as_str(), y))
    }

    pub fn edge_year(&self, a: &str, b: &str) -> Option<i32> {
        self.edges.get(&ordered_pair(a, b)).copied()
    }

    pub fn degree(&self, node: &str) -> usize {
        self.edges
            .keys()
            .filter(|(a, b)| a == node || b == node)
            .count()
    }

    /// Degree of every node (zero-degree nodes included).
    pub fn degrees(&self) -> BTreeMap<&str, usize> {
        let mut d: BTreeMap<&str, usize> = self.nodes.iter().map(|n| (n.as_str(), 0)).collect();
        for (a, b) in self.edges.keys() {
            *d.get_mut(a.as_str()).unwrap() += 1;
            *d.get_mut(b.as_str()).unwrap() += 1;
        }
        d
    }

    pub fn add_node(&mut self, node: impl Into<String>) {
        self.nodes.insert(node.into());
    }

    /// Insert an edge, keeping the earliest year on duplicates. Self-loops are
    /// ignored.
    pub fn add_edge(&mut self, a: &str, b: &str, year: i32) {
        if a == b {
            return;
        }
        self.nodes.insert(a.to_string());
        self.nodes.insert(b.to_string());
        self.edges
            .entry(ordered_pair(a, b))
            .and_modify(|y| *y = (*y).min(year))
            .or_insert(year);
    }
}

fn ordered_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Connect authors who share at least one paper dated within `edge_window`.
/// Every author appearing on any paper in the window becomes a node.
pub fn build_coauthor_graph(records: &[CitationRecord], edge_window: YearRange) -> CoauthorGraph {
    let mut g = CoauthorGraph::default();
    for rec in records {
        if !edge_window.contains(rec.year) {
            continue;
        }
        // Duplicate author ids on one paper are treated as a single author.
        let mut authors: Vec<&str> = rec.authors.iter().map(String::as_str).collect();
        authors.sort_unstable();
        authors.dedup();
        for a in &authors {
            g.add_node(*a);
        }
        for (i, a) in authors.iter().enumerate() {
            for b in &authors[i + 1..] {
                g.add_edge(a, b, rec.year);
            }
        }
    }
    g
}

/// Coauthor graph with every edge directed from the dominant author
/// (strictly higher degree; ties broken toward the lexicographically smaller
/// id) to the nondominant one.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectedInfluenceGraph {
    nodes: BTreeSet<String>,
    arcs: BTreeSet<(String, String)>,
}

impl DirectedInfluenceGraph {
    pub fn nodes(&self) -> &BTreeSet<String> {
        &self.nodes
    }

    pub fn arcs(&self) -> impl Iterator<Item = &(String, String)> {
        self.arcs.iter()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn from_parts(nodes: BTreeSet<String>, arcs: BTreeSet<(String, String)>) -> Result<Self> {
        for (a, b) in &arcs {
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop arc on `{a}`")));
            }
            if !nodes.contains(a) || !nodes.contains(b) {
                return Err(Error::InvalidInput(format!(
                    "arc {a} -> {b} references unknown node"
                )));
            }
        }
        Ok(DirectedInfluenceGraph { nodes, arcs })
    }
}

/// Direct every coauthor edge by degree dominance.
pub fn direct_by_degree(graph: &CoauthorGraph) -> DirectedInfluenceGraph {
    let degrees = graph.degrees();
    let mut arcs = BTreeSet::new();
    for (a, b, _) in graph.edges() {
        let (da, db) = (degrees[a], degrees[b]);
        // a < b by construction, so the tie-break favours `a`.
        let (from, to) = if db > da { (b, a) } else { (a, b) };
        arcs.insert((from.to_string(), to.to_string()));
    }
    DirectedInfluenceGraph {
        nodes: graph.nodes().clone(),
        arcs,
    }
}

/// A contiguous observation window partitioned into `T` slices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub start_year: i32,
    pub end_year: i32,
    pub slices: Vec<YearRange>,
}

impl TimeWindow {
    /// Partition `[start, end)` into `t` slices of near-equal integer length,
    /// remainder years going to the earliest slices.
    pub fn partitioned(start_year: i32, end_year: i32, t: usize) -> Result<Self> {
        if t < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 slices, got {t}"
            )));
        }
        let span = end_year - start_year;
        if span < t as i32 {
            return Err(Error::InvalidInput(format!(
                "window [{start_year}, {end_year}) too short for {t} slices"
            )));
        }
        let base = span / t as i32;
        let rem = span % t as i32;
        let mut slices = Vec::with_capacity(t);
        let mut cur = start_year;
        for i in 0..t as i32 {
            let len = base + if i < rem { 1 } else { 0 };
            slices.push(YearRange::new(cur, cur + len));
            cur += len;
        }
        Ok(TimeWindow {
            start_year,
            end_year,
            slices,
        })
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn range(&self) -> YearRange {
        YearRange::new(self.start_year, self.end_year)
    }

    /// Index of the slice containing `year`, if any.
    pub fn slice_of(&self, year: i32) -> Option<usize> {
        self.slices.iter().position(|s| s.contains(year))
    }
}

impl std::fmt::Display for TimeWindow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.start_year, self.end_year)
    }
}

/// How observation windows are laid over the corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowScheme {
    /// One window covering the whole corpus range, split into `T` periods.
    ThreePeriod,
    /// Fixed-span windows starting at `first_start`, advancing by `stride`.
    Span {
        span_years: i32,
        first_start: i32,
        stride: i32,
    },
}

/// Windows produced by a scheme, plus the start years of candidates dropped
/// because they extend past the corpus end.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowPlan {
    pub windows: Vec<TimeWindow>,
    pub dropped: Vec<YearRange>,
}

/// Enumerate the observation windows of a scheme over the corpus range.
pub fn window_slices(corpus: YearRange, scheme: WindowScheme, t: usize) -> Result<WindowPlan> {
    if corpus.is_empty() {
        return Err(Error::InvalidInput(format!("empty corpus range {corpus}")));
    }
    match scheme {
        WindowScheme::ThreePeriod => Ok(WindowPlan {
            windows: vec![TimeWindow::partitioned(corpus.start, corpus.end, t)?],
            dropped: vec![],
        }),
        WindowScheme::Span {
            span_years,
            first_start,
            stride,
        } => {
            if span_years < t as i32 {
                return Err(Error::InvalidInput(format!(
                    "span of {span_years} years too short for {t} slices"
                )));
            }
            if stride <= 0 {
                return Err(Error::InvalidInput(format!(
                    "stride must be positive, got {stride}"
                )));
            }
            if first_start < corpus.start || first_start >= corpus.end {
                return Err(Error::InvalidInput(format!(
                    "first start {first_start} outside corpus range {corpus}"
                )));
            }
            let mut windows = Vec::new();
            let mut dropped = Vec::new();
            let mut start = first_start;
            while start < corpus.end {
                let end = start + span_years;
                if end <= corpus.end {
                    windows.push(TimeWindow::partitioned(start, end, t)?);
                } else {
                    dropped.push(YearRange::new(start, end));
                }
                start += stride;
            }
            Ok(WindowPlan { windows, dropped })
        }
    }
}

/// Which references are paired across an arc when counting statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UniverseRule {
    /// References cited (state +1 somewhere) by either endpoint: the
    /// citation-network rule, matching the per-edge universes built by
    /// [`author_reference_states`].
    #[serde(rename = "cited-by-either")]
    CitedByEitherEndpoint,
    /// Every reference carried by both endpoints: the simulator rule, where
    /// the state is meaningful regardless of citation activity.
    #[serde(rename = "shared")]
    SharedReferences,
}

/// ±1 states of (author, reference) nodes across the slices of a window.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeStateSeries {
    num_slices: usize,
    window: TimeWindow,
    states: BTreeMap<(String, String), Vec<i8>>,
    meta: SeriesMeta,
    universe_rule: UniverseRule,
}

/// Provenance carried along with a state series.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeriesMeta {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub picks_per_step: Option<u64>,
    #[serde(default)]
    pub source: String,
}

impl NodeStateSeries {
    pub fn new(window: TimeWindow, meta: SeriesMeta, universe_rule: UniverseRule) -> Self {
        let num_slices = window.num_slices();
        NodeStateSeries {
            num_slices,
            window,
            states: BTreeMap::new(),
            meta,
            universe_rule,
        }
    }

    pub fn num_slices(&self) -> usize {
        self.num_slices
    }

    pub fn universe_rule(&self) -> UniverseRule {
        self.universe_rule
    }

    pub fn window(&self) -> &TimeWindow {
        &self.window
    }

    pub fn meta(&self) -> &SeriesMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn insert(
        &mut self,
        author: impl Into<String>,
        reference: impl Into<String>,
        states: Vec<i8>,
    ) -> Result<()> {
        if states.len() != self.num_slices {
            return Err(Error::LengthMismatch {
                left: states.len(),
                right: self.num_slices,
            });
        }
        for &s in &states {
            if s != 1 && s != -1 {
                return Err(Error::InvalidState(s));
            }
        }
        self.states
            .insert((author.into(), reference.into()), states);
        Ok(())
    }

    pub fn states(&self, author: &str, reference: &str) -> Option<&[i8]> {
        self.states
            .get(&(author.to_string(), reference.to_string()))
            .map(Vec::as_slice)
    }

    pub fn node_ids(&self) -> impl Iterator<Item = (&str, &str)> {
        self.states.keys().map(|(a, r)| (a.as_str(), r.as_str()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(String, String), &Vec<i8>)> {
        self.states.iter()
    }
}

#[derive(Serialize, Deserialize)]
struct SeriesNodeRepr {
    author: String,
    reference: String,
    states: Vec<i8>,
}

#[derive(Serialize, Deserialize)]
struct SeriesRepr {
    #[serde(rename = "T")]
    t: usize,
    window: TimeWindow,
    universe_rule: UniverseRule,
    meta: SeriesMeta,
    nodes: Vec<SeriesNodeRepr>,
}

impl Serialize for NodeStateSeries {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SeriesRepr {
            t: self.num_slices,
            window: self.window.clone(),
            universe_rule: self.universe_rule,
            meta: self.meta.clone(),
            nodes: self
                .states
                .iter()
                .map(|((a, r), st)| SeriesNodeRepr {
                    author: a.clone(),
                    reference: r.clone(),
                    states: st.clone(),
                })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NodeStateSeries {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = SeriesRepr::deserialize(d)?;
        let mut series = NodeStateSeries::new(repr.window, repr.meta, repr.universe_rule);
        if series.num_slices != repr.t {
            return Err(D::Error::custom("window slice count does not match T"));
        }
        for node in repr.nodes {
            series
                .insert(node.author, node.reference, node.states)
                .map_err(D::Error::custom)?;
        }
        Ok(series)
    }
}

/// Build the ±1 state series for a window: for every coauthor edge the
/// references cited by either endpoint anywhere in the window form the node
/// universe of that pair, and a node (author, reference) is `+1` in slice `t`
/// exactly when the author has a paper in that slice citing the reference.
/// States flip back to `-1` in slices without such a citation.
pub fn author_reference_states(
    records: &[CitationRecord],
    graph: &CoauthorGraph,
    window: &TimeWindow,
) -> NodeStateSeries {
    let t = window.num_slices();
    // Per author and slice: the set of references cited there.
    let mut cited: BTreeMap<&str, Vec<BTreeSet<&str>>> = BTreeMap::new();
    // Per author: references cited anywhere in the window.
    let mut cited_any: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    for rec in records {
        let Some(slice) = window.slice_of(rec.year) else {
            continue;
        };
        for author in &rec.authors {
            if !graph.nodes().contains(author) {
                continue;
            }
            let per_slice = cited
                .entry(author)
                .or_insert_with(|| vec![BTreeSet::new(); t]);
            let any = cited_any.entry(author).or_default();
            for reference in &rec.references {
                per_slice[slice].insert(reference);
                any.insert(reference);
            }
        }
    }

    let mut series = NodeStateSeries::new(
        window.clone(),
        SeriesMeta {
            seed: None,
            picks_per_step: None,
            source: "network".into(),
        },
        UniverseRule::CitedByEitherEndpoint,
    );
    let empty = BTreeSet::new();
    for (a, b, _) in graph.edges() {
        // Pair universe: union of references cited by either endpoint.
        let mut universe: BTreeSet<&str> = BTreeSet::new();
        universe.extend(cited_any.get(a).unwrap_or(&empty).iter().copied());
        universe.extend(cited_any.get(b).unwrap_or(&empty).iter().copied());
        for reference in universe {
            for author in [a, b] {
                if series.states(author, reference).is_some() {
                    continue;
                }
                let per_slice = cited.get(author);
                let states: Vec<i8> = (0..t)
                    .map(|s| {
                        let hit = per_slice
                            .map(|ps| ps[s].contains(reference))
                            .unwrap_or(false);
                        if hit {
                            1
                        } else {
                            -1
                        }
                    })
                    .collect();
                series
                    .insert(author, reference, states)
                    .expect("slice count matches window");
            }
        }
    }
    series
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(paper: &str, authors: &[&str], year: i32, refs: &[&str]) -> CitationRecord {
        CitationRecord {
            paper_id: paper.into(),
            authors: authors.iter().map(|s| s.to_string()).collect(),
            year,
            references: refs.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn csv_single_row() {
        let data = "paper_id,authors,year,references\np1,a1;a2,1999,r1;r2\n";
        let recs = ingest_records(data.as_bytes(), IngestFormat::Csv).unwrap();
        assert_eq!(recs, vec![rec("p1", &["a1", "a2"], 1999, &["r1", "r2"])]);
    }

    #[test]
    fn csv_empty_stream_is_empty_list() {
        let data = "paper_id,authors,year,references\n";
        let recs = ingest_records(data.as_bytes(), IngestFormat::Csv).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn csv_bad_year_names_row() {
        let data = "paper_id,authors,year,references\np1,a1,1999,r1\np2,a2,19x9,r2\n";
        let err = ingest_records(data.as_bytes(), IngestFormat::Csv).unwrap_err();
        match err {
            Error::MalformedRecord { line, msg } => {
                assert_eq!(line, 3);
                assert!(msg.contains("19x9"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_empty_references_allowed() {
        let data = "paper_id,authors,year,references\np1,a1,1999,\n";
        let recs = ingest_records(data.as_bytes(), IngestFormat::Csv).unwrap();
        assert!(recs[0].references.is_empty());
    }

    #[test]
    fn csv_no_authors_rejected() {
        let data = "paper_id,authors,year,references\np1,,1999,r1\n";
        assert!(matches!(
            ingest_records(data.as_bytes(), IngestFormat::Csv),
            Err(Error::MalformedRecord { .. })
        ));
    }

    #[test]
    fn jsonl_round_trip_preserves_records() {
        let recs = vec![
            rec("p1", &["a1", "a2"], 1999, &["r1"]),
            rec("p2", &["a3"], 2001, &[]),
        ];
        let mut buf = Vec::new();
        write_records_jsonl(&recs, &mut buf).unwrap();
        let back = ingest_records(buf.as_slice(), IngestFormat::Jsonl).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn csv_round_trip_preserves_records() {
        let recs = vec![
            rec("p1", &["a1", "a2"], 1999, &["r1", "r2"]),
            rec("p2", &["a3"], 2001, &[]),
        ];
        let mut buf = Vec::new();
        write_records_csv(&recs, &mut buf).unwrap();
        let back = ingest_records(buf.as_slice(), IngestFormat::Csv).unwrap();
        assert_eq!(back, recs);
    }

    #[test]
    fn jsonl_bad_line_numbered() {
        let data =
            "{\"paper_id\":\"p1\",\"authors\":[\"a\"],\"year\":2000,\"references\":[]}\nnot json\n";
        let err = ingest_records(data.as_bytes(), IngestFormat::Jsonl).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 2, .. }));
    }

    #[test]
    fn year_range_validation() {
        let recs = vec![rec("p1", &["a"], 1940, &[])];
        assert!(validate_year_range(&recs, YearRange::new(1945, 2014)).is_err());
        assert!(validate_year_range(&recs, YearRange::new(1930, 2014)).is_ok());
    }

    #[test]
    fn graph_single_paper_single_edge() {
        let g = build_coauthor_graph(
            &[rec("p1", &["a", "b"], 2000, &[])],
            YearRange::new(2000, 2001),
        );
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_year("a", "b"), Some(2000));
    }

    #[test]
    fn graph_single_author_papers_have_no_edges() {
        let g = build_coauthor_graph(
            &[rec("p1", &["a"], 2000, &[]), rec("p2", &["b"], 2000, &[])],
            YearRange::new(2000, 2001),
        );
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn graph_keeps_earliest_year() {
        let g = build_coauthor_graph(
            &[
                rec("p1", &["a", "b"], 2003, &[]),
                rec("p2", &["b", "a"], 2000, &[]),
            ],
            YearRange::new(2000, 2005),
        );
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.edge_year("b", "a"), Some(2000));
    }

    #[test]
    fn graph_ignores_papers_outside_window() {
        let g = build_coauthor_graph(
            &[rec("p1", &["a", "b"], 1999, &[])],
            YearRange::new(2000, 2001),
        );
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn graph_no_self_loops_on_duplicate_authors() {
        let g = build_coauthor_graph(
            &[rec("p1", &["a", "a"], 2000, &[])],
            YearRange::new(2000, 2001),
        );
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.node_count(), 1);
    }

    #[test]
    fn direct_path_by_degree() {
        // a - b - c: b has degree 2 and dominates both.
        let g = build_coauthor_graph(
            &[
                rec("p1", &["a", "b"], 2000, &[]),
                rec("p2", &["b", "c"], 2000, &[]),
            ],
            YearRange::new(2000, 2001),
        );
        let d = direct_by_degree(&g);
        let arcs: Vec<_> = d.arcs().cloned().collect();
        assert_eq!(
            arcs,
            vec![
                ("b".to_string(), "a".to_string()),
                ("b".to_string(), "c".to_string())
            ]
        );
    }

    #[test]
    fn direct_tie_breaks_lexicographically() {
        let g = build_coauthor_graph(
            &[rec("p1", &["b", "a"], 2000, &[])],
            YearRange::new(2000, 2001),
        );
        let d = direct_by_degree(&g);
        assert_eq!(
            d.arcs().cloned().collect::<Vec<_>>(),
            vec![("a".to_string(), "b".to_string())]
        );
    }

    #[test]
    fn direct_empty_graph() {
        let d = direct_by_degree(&CoauthorGraph::default());
        assert_eq!(d.arc_count(), 0);
    }

    #[test]
    fn degree_antisymmetry_holds() {
        let recs = vec![
            rec("p1", &["a", "b", "c"], 2000, &[]),
            rec("p2", &["c", "d"], 2000, &[]),
            rec("p3", &["d", "e"], 2000, &[]),
        ];
        let g = build_coauthor_graph(&recs, YearRange::new(2000, 2001));
        let degrees = g.degrees();
        let d = direct_by_degree(&g);
        for (u, v) in d.arcs() {
            let (du, dv) = (degrees[u.as_str()], degrees[v.as_str()]);
            assert!(du > dv || (du == dv && u < v), "arc {u}->{v}");
        }
    }

    #[test]
    fn three_period_matches_even_split() {
        let plan = window_slices(YearRange::new(1945, 2014), WindowScheme::ThreePeriod, 3).unwrap();
        assert_eq!(plan.windows.len(), 1);
        let w = &plan.windows[0];
        assert_eq!(
            w.slices,
            vec![
                YearRange::new(1945, 1968),
                YearRange::new(1968, 1991),
                YearRange::new(1991, 2014)
            ]
        );
    }

    #[test]
    fn span_scheme_enumerates_starts() {
        let plan = window_slices(
            YearRange::new(1945, 2014),
            WindowScheme::Span {
                span_years: 30,
                first_start: 1949,
                stride: 5,
            },
            3,
        )
        .unwrap();
        let starts: Vec<i32> = plan.windows.iter().map(|w| w.start_year).collect();
        assert_eq!(starts, vec![1949, 1954, 1959, 1964, 1969, 1974, 1979, 1984]);
        assert!(plan.windows.iter().all(|w| w.end_year - w.start_year == 30));
        assert!(!plan.dropped.is_empty());
        assert_eq!(plan.dropped[0].start, 1989);
    }

    #[test]
    fn five_year_scheme_slice_lengths() {
        let plan = window_slices(
            YearRange::new(1945, 2014),
            WindowScheme::Span {
                span_years: 5,
                first_start: 1959,
                stride: 3,
            },
            3,
        )
        .unwrap();
        assert_eq!(plan.windows.len(), 17);
        let w = &plan.windows[0];
        assert_eq!(w.start_year, 1959);
        assert_eq!(w.end_year, 1964);
        // 5 = 2 + 2 + 1, remainder to the earliest slices.
        let lens: Vec<i32> = w.slices.iter().map(YearRange::len_years).collect();
        assert_eq!(lens, vec![2, 2, 1]);
    }

    #[test]
    fn window_partition_properties() {
        for (start, end) in [(1949, 1979), (1959, 1964), (1945, 2014), (2000, 2007)] {
            let w = TimeWindow::partitioned(start, end, 3).unwrap();
            // Slices tile the window.
            assert_eq!(w.slices[0].start, start);
            assert_eq!(w.slices.last().unwrap().end, end);
            for pair in w.slices.windows(2) {
                assert_eq!(pair[0].end, pair[1].start);
            }
            // Lengths differ by at most one year.
            let lens: Vec<i32> = w.slices.iter().map(YearRange::len_years).collect();
            let (lo, hi) = (lens.iter().min().unwrap(), lens.iter().max().unwrap());
            assert!(hi - lo <= 1);
        }
    }

    #[test]
    fn states_flip_back() {
        // a cites r only in the middle slice.
        let recs = vec![
            rec("p1", &["a", "b"], 2000, &[]),
            rec("p2", &["a"], 2004, &["r"]),
        ];
        let window = TimeWindow::partitioned(2000, 2009, 3).unwrap();
        let g = build_coauthor_graph(&recs, window.slices[0]);
        let series = author_reference_states(&recs, &g, &window);
        assert_eq!(series.states("a", "r").unwrap(), &[-1, 1, -1]);
        // b never cites r but is in the pair universe.
        assert_eq!(series.states("b", "r").unwrap(), &[-1, -1, -1]);
    }

    #[test]
    fn states_always_citing() {
        let recs = vec![
            rec("p0", &["a", "b"], 2000, &["r"]),
            rec("p1", &["a"], 2001, &["r"]),
            rec("p2", &["a"], 2002, &["r"]),
        ];
        let window = TimeWindow::partitioned(2000, 2003, 3).unwrap();
        let g = build_coauthor_graph(&recs, window.slices[0]);
        let series = author_reference_states(&recs, &g, &window);
        assert_eq!(series.states("a", "r").unwrap(), &[1, 1, 1]);
    }

    #[test]
    fn states_author_without_papers_in_slice_is_minus() {
        let recs = vec![
            rec("p1", &["a", "b"], 2000, &[]),
            rec("p2", &["a"], 2000, &["r"]),
            rec("p3", &["b"], 2004, &["r"]),
        ];
        let window = TimeWindow::partitioned(2000, 2009, 3).unwrap();
        let g = build_coauthor_graph(&recs, window.slices[0]);
        let series = author_reference_states(&recs, &g, &window);
        // a cites r in slice 0 only; has no papers at all in slices 1, 2.
        assert_eq!(series.states("a", "r").unwrap(), &[1, -1, -1]);
        assert_eq!(series.states("b", "r").unwrap(), &[-1, 1, -1]);
    }

    #[test]
    fn series_json_round_trip() {
        let window = TimeWindow::partitioned(2000, 2003, 3).unwrap();
        let mut series = NodeStateSeries::new(
            window,
            SeriesMeta {
                seed: Some(7),
                picks_per_step: Some(3),
                source: "simulator".into(),
            },
            UniverseRule::SharedReferences,
        );
        series.insert("a", "r", vec![1, -1, 1]).unwrap();
        let s = serde_json::to_string(&series).unwrap();
        assert!(s.contains("\"universe_rule\":\"shared\""));
        let back: NodeStateSeries = serde_json::from_str(&s).unwrap();
        assert_eq!(back, series);
    }
}
