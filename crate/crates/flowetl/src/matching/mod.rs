//! Schema matching: finding which source columns feed which target columns.
//!
//! Matching works on column names and types only — never values. Each
//! source/target pair gets a similarity weight combining a syntactic score
//! (normalized edit distance) and a semantic score (token-set overlap with
//! a bundled synonym table), discounted when the column types are
//! incompatible. A two-stage extended stable-matching algorithm then turns
//! the weighted bipartite graph into correspondences:
//!
//! 1. classic proposal rounds produce a stable 1:1 core;
//! 2. leftovers attach to their best counterpart above a threshold, which
//!    is what creates n:1 (decomposition) and 1:n (replication) matches.
//!
//! A remote provider can replace the whole procedure; its answer is
//! validated and falls back to the algorithmic matcher when unusable.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ir::ColumnType;
use crate::provider::{MatchRequest, Provenance, Provider, DEFAULT_MATCH_RULES};
use crate::schema::ColumnSchema;

/// Attachment threshold: stage-2 edges below this weight are not matched.
pub const DEFAULT_ATTACH_THRESHOLD: f64 = 0.4;
/// Hard floor: edges below this weight are never matched at all.
pub const DEFAULT_FLOOR_THRESHOLD: f64 = 0.25;

/// Thresholds steering the algorithmic matcher.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchConfig {
    pub attach_threshold: f64,
    pub floor_threshold: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            attach_threshold: DEFAULT_ATTACH_THRESHOLD,
            floor_threshold: DEFAULT_FLOOR_THRESHOLD,
        }
    }
}

/// One correspondence: the listed source columns feed the target column.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Correspondence {
    pub sources: Vec<String>,
    pub target: String,
}

/// The full outcome of matching two schemas.
///
/// A target appears in at most one correspondence. A source may appear in
/// several (replication); several sources may share a target
/// (decomposition). Columns in neither role are listed as unmapped.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaMap {
    pub correspondences: Vec<Correspondence>,
    pub unmapped_sources: Vec<String>,
    pub unmapped_targets: Vec<String>,
}

impl SchemaMap {
    /// Builds a map from bare correspondences, deriving the unmapped lists
    /// from the two schemas. No validation happens here.
    pub fn from_correspondences(
        correspondences: Vec<Correspondence>,
        source_schema: &ColumnSchema,
        target_schema: &ColumnSchema,
    ) -> SchemaMap {
        let used_sources: HashSet<&str> = correspondences
            .iter()
            .flat_map(|c| c.sources.iter().map(String::as_str))
            .collect();
        let used_targets: HashSet<&str> =
            correspondences.iter().map(|c| c.target.as_str()).collect();
        SchemaMap {
            unmapped_sources: source_schema
                .names()
                .filter(|n| !used_sources.contains(n))
                .map(str::to_string)
                .collect(),
            unmapped_targets: target_schema
                .names()
                .filter(|n| !used_targets.contains(n))
                .map(str::to_string)
                .collect(),
            correspondences,
        }
    }

    pub fn correspondence_for(&self, target: &str) -> Option<&Correspondence> {
        self.correspondences.iter().find(|c| c.target == target)
    }

    /// Mapped target columns in correspondence order.
    pub fn targets(&self) -> impl Iterator<Item = &str> {
        self.correspondences.iter().map(|c| c.target.as_str())
    }
}

// ---------------------------------------------------------------------------
// Similarity
// ---------------------------------------------------------------------------

/// Splits a column name into lowercase tokens at underscores, hyphens,
/// spaces, dots, and camel-case boundaries. Digits stick to their token.
pub(crate) fn tokenize(name: &str) -> BTreeSet<String> {
    let chars: Vec<char> = name.chars().collect();
    let mut tokens = BTreeSet::new();
    let mut current = String::new();
    for (i, &ch) in chars.iter().enumerate() {
        if !ch.is_alphanumeric() {
            if !current.is_empty() {
                tokens.insert(std::mem::take(&mut current));
            }
            continue;
        }
        // Camel-case boundary: lower/digit→Upper, or Upper followed by
        // lower after an uppercase run (HTTPServer → http, server).
        let upper_break = ch.is_uppercase()
            && i > 0
            && (chars[i - 1].is_lowercase()
                || chars[i - 1].is_ascii_digit()
                || (chars[i - 1].is_uppercase()
                    && chars.get(i + 1).is_some_and(|c| c.is_lowercase())));
        if upper_break && !current.is_empty() {
            tokens.insert(std::mem::take(&mut current));
        }
        current.extend(ch.to_lowercase());
    }
    if !current.is_empty() {
        tokens.insert(current);
    }
    tokens
}

fn synonym_table() -> &'static HashMap<String, BTreeSet<String>> {
    static TABLE: OnceLock<HashMap<String, BTreeSet<String>>> = OnceLock::new();
    TABLE.get_or_init(|| parse_synonyms(include_str!("synonyms.txt")))
}

/// Parses the bundled synonym file: one comma-separated alias group per
/// line, `#` starts a comment. Every member of a group maps to the whole
/// group.
fn parse_synonyms(text: &str) -> HashMap<String, BTreeSet<String>> {
    let mut table: HashMap<String, BTreeSet<String>> = HashMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let group: BTreeSet<String> = line
            .split(',')
            .map(|t| t.trim().to_lowercase())
            .filter(|t| !t.is_empty())
            .collect();
        if group.len() < 2 {
            continue;
        }
        for member in &group {
            table.entry(member.clone()).or_default().extend(group.iter().cloned());
        }
    }
    table
}

/// Expands a token set with the synonyms of each token.
fn expand(tokens: &BTreeSet<String>) -> BTreeSet<String> {
    let table = synonym_table();
    let mut out = tokens.clone();
    for token in tokens {
        if let Some(group) = table.get(token) {
            out.extend(group.iter().cloned());
        }
    }
    out
}

/// Syntactic component: normalized edit-distance similarity of the
/// lowercased names.
pub(crate) fn syntactic_similarity(x: &str, y: &str) -> f64 {
    strsim::normalized_levenshtein(&x.to_lowercase(), &y.to_lowercase())
}

/// Semantic component: Jaccard overlap of synonym-expanded token sets.
pub(crate) fn semantic_similarity(x: &str, y: &str) -> f64 {
    let a = expand(&tokenize(x));
    let b = expand(&tokenize(y));
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    if a.is_empty() || b.is_empty() {
        return 0.0;
    }
    let intersection = a.intersection(&b).count() as f64;
    let union = a.union(&b).count() as f64;
    intersection / union
}

/// Whether two column types may plausibly describe the same data. Boolean
/// is compatible with both string and number because two-valued columns of
/// either kind are typed boolean; ambiguous is compatible with everything.
fn types_compatible(x: ColumnType, y: ColumnType) -> bool {
    use ColumnType::*;
    if x == y || x == Ambiguous || y == Ambiguous {
        return true;
    }
    matches!(
        (x, y),
        (Boolean, String) | (String, Boolean) | (Boolean, Number) | (Number, Boolean)
    )
}

/// Similarity of two columns: the mean of the syntactic and semantic
/// components, halved when the types are incompatible.
pub fn similarity(x_name: &str, x_type: ColumnType, y_name: &str, y_type: ColumnType) -> f64 {
    let base = (syntactic_similarity(x_name, y_name) + semantic_similarity(x_name, y_name)) / 2.0;
    if types_compatible(x_type, y_type) {
        base
    } else {
        base * 0.5
    }
}

// ---------------------------------------------------------------------------
// Bipartite graph and the two-stage matcher
// ---------------------------------------------------------------------------

/// Complete weighted bipartite graph over source and target columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteGraph {
    sources: Vec<(String, ColumnType)>,
    targets: Vec<(String, ColumnType)>,
    /// `weights[x][y]` — similarity of source x and target y, in [0,1].
    weights: Vec<Vec<f64>>,
}

impl BipartiteGraph {
    pub fn sources(&self) -> &[(String, ColumnType)] {
        &self.sources
    }

    pub fn targets(&self) -> &[(String, ColumnType)] {
        &self.targets
    }

    pub fn weight(&self, source: usize, target: usize) -> f64 {
        self.weights[source][target]
    }

    #[cfg(test)]
    pub(crate) fn from_weights(
        sources: Vec<(String, ColumnType)>,
        targets: Vec<(String, ColumnType)>,
        weights: Vec<Vec<f64>>,
    ) -> BipartiteGraph {
        BipartiteGraph {
            sources,
            targets,
            weights,
        }
    }
}

/// Builds the complete similarity graph for two non-empty schemas.
pub fn build_bipartite(
    source_schema: &ColumnSchema,
    target_schema: &ColumnSchema,
) -> Result<BipartiteGraph> {
    if source_schema.is_empty() {
        return Err(Error::EmptySchema("source schema has no columns".into()));
    }
    if target_schema.is_empty() {
        return Err(Error::EmptySchema("target schema has no columns".into()));
    }
    let sources: Vec<(String, ColumnType)> = source_schema
        .iter()
        .map(|(n, t)| (n.to_string(), t))
        .collect();
    let targets: Vec<(String, ColumnType)> = target_schema
        .iter()
        .map(|(n, t)| (n.to_string(), t))
        .collect();
    let weights = sources
        .iter()
        .map(|(xn, xt)| {
            targets
                .iter()
                .map(|(yn, yt)| similarity(xn, *xt, yn, *yt))
                .collect()
        })
        .collect();
    Ok(BipartiteGraph {
        sources,
        targets,
        weights,
    })
}

/// Stage 1: stable 1:1 matching by proposal rounds.
///
/// Source preference lists are ordered by weight (descending) with ties
/// broken by target name; targets judge proposals the same way by source
/// name. Edges below the floor are never proposed along. Returns
/// `(source, target)` index pairs.
pub(crate) fn stable_pairs(graph: &BipartiteGraph, floor: f64) -> Vec<(usize, usize)> {
    let nx = graph.sources.len();
    let ny = graph.targets.len();

    let prefs: Vec<Vec<usize>> = (0..nx)
        .map(|x| {
            let mut order: Vec<usize> = (0..ny)
                .filter(|&y| graph.weights[x][y] >= floor)
                .collect();
            order.sort_by(|&a, &b| {
                graph.weights[x][b]
                    .partial_cmp(&graph.weights[x][a])
                    .unwrap()
                    .then_with(|| graph.targets[a].0.cmp(&graph.targets[b].0))
            });
            order
        })
        .collect();

    // target_prefers(y, a, b): does target y rank source a above source b?
    let target_prefers = |y: usize, a: usize, b: usize| -> bool {
        match graph.weights[a][y].partial_cmp(&graph.weights[b][y]).unwrap() {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => graph.sources[a].0 < graph.sources[b].0,
        }
    };

    let mut next = vec![0usize; nx];
    let mut partner_of_target: Vec<Option<usize>> = vec![None; ny];
    let mut free: std::collections::VecDeque<usize> = (0..nx).collect();

    while let Some(x) = free.pop_front() {
        while next[x] < prefs[x].len() {
            let y = prefs[x][next[x]];
            next[x] += 1;
            match partner_of_target[y] {
                None => {
                    partner_of_target[y] = Some(x);
                    break;
                }
                Some(current) if target_prefers(y, x, current) => {
                    partner_of_target[y] = Some(x);
                    free.push_back(current);
                    break;
                }
                Some(_) => continue,
            }
        }
    }

    let mut pairs: Vec<(usize, usize)> = partner_of_target
        .iter()
        .enumerate()
        .filter_map(|(y, x)| x.map(|x| (x, y)))
        .collect();
    pairs.sort_unstable();
    pairs
}

/// Runs the full two-stage matcher on a similarity graph.
pub fn match_algorithmic(graph: &BipartiteGraph, config: &MatchConfig) -> SchemaMap {
    let nx = graph.sources.len();
    let ny = graph.targets.len();
    let floor = config.floor_threshold;
    let attach = config.attach_threshold;

    // sources_of[y] — source indices feeding target y, in attachment order.
    let mut sources_of: Vec<Vec<usize>> = vec![Vec::new(); ny];
    for (x, y) in stable_pairs(graph, floor) {
        sources_of[y].push(x);
    }

    // Stage 2a: unmatched sources attach to their best target (n:1).
    let matched_sources: HashSet<usize> =
        sources_of.iter().flatten().copied().collect();
    for x in 0..nx {
        if matched_sources.contains(&x) {
            continue;
        }
        let best = (0..ny).max_by(|&a, &b| {
            graph.weights[x][a]
                .partial_cmp(&graph.weights[x][b])
                .unwrap()
                .then_with(|| graph.targets[b].0.cmp(&graph.targets[a].0))
        });
        if let Some(y) = best {
            if graph.weights[x][y] >= attach {
                sources_of[y].push(x);
            }
        }
    }

    // Stage 2b: still-unmatched targets claim their best source (1:n).
    for y in 0..ny {
        if !sources_of[y].is_empty() {
            continue;
        }
        let best = (0..nx).max_by(|&a, &b| {
            graph.weights[a][y]
                .partial_cmp(&graph.weights[b][y])
                .unwrap()
                .then_with(|| graph.sources[b].0.cmp(&graph.sources[a].0))
        });
        if let Some(x) = best {
            if graph.weights[x][y] >= attach {
                sources_of[y].push(x);
            }
        }
    }

    let correspondences: Vec<Correspondence> = (0..ny)
        .filter(|&y| !sources_of[y].is_empty())
        .map(|y| {
            let mut xs = sources_of[y].clone();
            // Present sources in source-schema order — downstream merge
            // inference concatenates in this order.
            xs.sort_unstable();
            Correspondence {
                sources: xs.iter().map(|&x| graph.sources[x].0.clone()).collect(),
                target: graph.targets[y].0.clone(),
            }
        })
        .collect();

    let mapped_sources: HashSet<usize> = sources_of.iter().flatten().copied().collect();
    SchemaMap {
        unmapped_sources: (0..nx)
            .filter(|x| !mapped_sources.contains(x))
            .map(|x| graph.sources[x].0.clone())
            .collect(),
        unmapped_targets: (0..ny)
            .filter(|&y| sources_of[y].is_empty())
            .map(|y| graph.targets[y].0.clone())
            .collect(),
        correspondences,
    }
}

/// Convenience: build the graph and match with the given thresholds.
pub fn match_schemas(
    source_schema: &ColumnSchema,
    target_schema: &ColumnSchema,
    config: &MatchConfig,
) -> Result<SchemaMap> {
    Ok(match_algorithmic(
        &build_bipartite(source_schema, target_schema)?,
        config,
    ))
}

// ---------------------------------------------------------------------------
// Validation and the provider path
// ---------------------------------------------------------------------------

/// Checks a schema map against the two schemas it claims to connect.
/// Returns human-readable violations; an empty list means the map is valid.
pub fn validate_schema_map(
    map: &SchemaMap,
    source_schema: &ColumnSchema,
    target_schema: &ColumnSchema,
) -> Vec<String> {
    let mut violations = Vec::new();
    let mut seen_targets = HashSet::new();

    for corr in &map.correspondences {
        if corr.sources.is_empty() {
            violations.push(format!(
                "correspondence for target {:?} has no sources",
                corr.target
            ));
        }
        for source in &corr.sources {
            if source_schema.get(source).is_none() {
                violations.push(format!("unknown source column {source:?}"));
            }
        }
        if target_schema.get(&corr.target).is_none() {
            violations.push(format!("unknown target column {:?}", corr.target));
        }
        if !seen_targets.insert(corr.target.as_str()) {
            violations.push(format!("target {:?} mapped twice", corr.target));
        }
    }

    for name in &map.unmapped_sources {
        if source_schema.get(name).is_none() {
            violations.push(format!("unknown unmapped source {name:?}"));
        }
    }
    for name in &map.unmapped_targets {
        if target_schema.get(name).is_none() {
            violations.push(format!("unknown unmapped target {name:?}"));
        }
    }

    // The unmapped lists must be exactly the columns not referenced by any
    // correspondence.
    let derived =
        SchemaMap::from_correspondences(map.correspondences.clone(), source_schema, target_schema);
    let as_set = |v: &[String]| -> BTreeSet<String> { v.iter().cloned().collect() };
    if as_set(&map.unmapped_sources) != as_set(&derived.unmapped_sources) {
        violations.push("unmapped source list does not match correspondences".to_string());
    }
    if as_set(&map.unmapped_targets) != as_set(&derived.unmapped_targets) {
        violations.push("unmapped target list does not match correspondences".to_string());
    }

    violations
}

/// A schema map together with how it was produced.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchOutcome {
    pub map: SchemaMap,
    pub provenance: Provenance,
    pub warnings: Vec<String>,
}

/// Asks the provider for a schema map; any transport error, parse error, or
/// validation failure falls back to the algorithmic matcher.
pub fn match_via_provider(
    source_schema: &ColumnSchema,
    target_schema: &ColumnSchema,
    provider: &dyn Provider,
    config: &MatchConfig,
) -> Result<MatchOutcome> {
    let request = MatchRequest {
        source_schema: source_schema.clone(),
        target_schema: target_schema.clone(),
        rules: DEFAULT_MATCH_RULES.iter().map(|r| r.to_string()).collect(),
    };

    let failure = match provider.match_schemas(&request) {
        Ok(response) => {
            let map = SchemaMap::from_correspondences(
                response.correspondences,
                source_schema,
                target_schema,
            );
            let violations = validate_schema_map(&map, source_schema, target_schema);
            if violations.is_empty() {
                return Ok(MatchOutcome {
                    map,
                    provenance: Provenance::Provider,
                    warnings: Vec::new(),
                });
            }
            format!("provider schema map rejected: {}", violations.join("; "))
        }
        Err(e) => format!("provider match call failed: {e}"),
    };

    log::warn!("{failure}; falling back to algorithmic matcher");
    let map = match_schemas(source_schema, target_schema, config)?;
    Ok(MatchOutcome {
        map,
        provenance: Provenance::Fallback,
        warnings: vec![failure],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use indexmap::IndexMap;
    use proptest::prelude::*;

    fn schema(cols: &[(&str, ColumnType)]) -> ColumnSchema {
        let mut map = IndexMap::new();
        for (name, ty) in cols {
            map.insert(name.to_string(), *ty);
        }
        ColumnSchema::new(map)
    }

    /// Independent reference edit distance (classic DP), for oracle checks.
    fn oracle_levenshtein(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut prev: Vec<usize> = (0..=b.len()).collect();
        for i in 1..=a.len() {
            let mut row = vec![i];
            for j in 1..=b.len() {
                let sub = prev[j - 1] + usize::from(a[i - 1] != b[j - 1]);
                row.push(sub.min(prev[j] + 1).min(row[j - 1] + 1));
            }
            prev = row;
        }
        prev[b.len()]
    }

    fn oracle_syntactic(a: &str, b: &str) -> f64 {
        let a = a.to_lowercase();
        let b = b.to_lowercase();
        let max = a.chars().count().max(b.chars().count());
        if max == 0 {
            return 1.0;
        }
        1.0 - oracle_levenshtein(&a, &b) as f64 / max as f64
    }

    #[test]
    fn tokenize_splits_cases_and_separators() {
        let t = |s: &str| -> Vec<String> { tokenize(s).into_iter().collect() };
        assert_eq!(t("first_name"), ["first", "name"]);
        assert_eq!(t("FirstName"), ["first", "name"]);
        assert_eq!(t("first name"), ["first", "name"]);
        assert_eq!(t("first-name.ext"), ["ext", "first", "name"]);
        assert_eq!(t("HTTPServer"), ["http", "server"]);
        assert_eq!(t("address1"), ["address1"]);
        assert_eq!(t("ID"), ["id"]);
    }

    #[test]
    fn identical_names_and_types_score_one() {
        assert_eq!(
            similarity("price", ColumnType::Number, "price", ColumnType::Number),
            1.0
        );
    }

    #[test]
    fn case_convention_changes_keep_semantic_at_one() {
        assert_eq!(semantic_similarity("first_name", "FirstName"), 1.0);
        assert!(syntactic_similarity("first_name", "FirstName") < 1.0);
    }

    #[test]
    fn synonym_entry_lifts_semantic_to_one() {
        assert_eq!(semantic_similarity("qty", "quantity"), 1.0);
        let expected_syntactic = oracle_syntactic("qty", "quantity");
        let got = similarity("qty", ColumnType::Number, "quantity", ColumnType::Number);
        assert!((got - (expected_syntactic + 1.0) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn incompatible_types_halve_the_weight() {
        let same = similarity("price", ColumnType::Number, "price", ColumnType::Number);
        let penalized = similarity("price", ColumnType::Number, "price", ColumnType::Complex);
        assert_eq!(penalized, same * 0.5);
        // Boolean/string and boolean/number are considered compatible.
        assert_eq!(
            similarity("flag", ColumnType::Boolean, "flag", ColumnType::String),
            1.0
        );
        assert_eq!(
            similarity("flag", ColumnType::Boolean, "flag", ColumnType::Number),
            1.0
        );
    }

    #[test]
    fn syntactic_component_matches_oracle() {
        for (a, b) in [
            ("first_name", "full_name"),
            ("qty", "quantity"),
            ("price", "cost"),
            ("x", "x"),
        ] {
            assert!(
                (syntactic_similarity(a, b) - oracle_syntactic(a, b)).abs() < 1e-12,
                "{a} vs {b}"
            );
        }
    }

    #[test]
    fn build_bipartite_is_complete_and_bounded() {
        let src = schema(&[("a", ColumnType::Number), ("b", ColumnType::String)]);
        let tgt = schema(&[("c", ColumnType::Number), ("d", ColumnType::String)]);
        let g = build_bipartite(&src, &tgt).unwrap();
        assert_eq!(g.sources().len(), 2);
        assert_eq!(g.targets().len(), 2);
        for x in 0..2 {
            for y in 0..2 {
                let w = g.weight(x, y);
                assert!((0.0..=1.0).contains(&w));
            }
        }
    }

    #[test]
    fn empty_schema_is_an_error() {
        let empty = ColumnSchema::new(IndexMap::new());
        let full = schema(&[("a", ColumnType::Number)]);
        assert!(build_bipartite(&empty, &full).is_err());
        assert!(build_bipartite(&full, &empty).is_err());
    }

    #[test]
    fn identical_schemas_have_dominant_diagonal() {
        let s = schema(&[
            ("id", ColumnType::Number),
            ("name", ColumnType::String),
            ("age", ColumnType::Number),
        ]);
        let g = build_bipartite(&s, &s).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert!(g.weight(x, x) >= g.weight(x, y));
            }
        }
    }

    #[test]
    fn identity_match_on_identical_schemas() {
        let s = schema(&[
            ("id", ColumnType::Number),
            ("name", ColumnType::String),
            ("age", ColumnType::Number),
        ]);
        let map = match_schemas(&s, &s, &MatchConfig::default()).unwrap();
        assert_eq!(map.correspondences.len(), 3);
        for corr in &map.correspondences {
            assert_eq!(corr.sources, [corr.target.clone()]);
        }
        assert!(map.unmapped_sources.is_empty());
        assert!(map.unmapped_targets.is_empty());
    }

    #[test]
    fn decomposition_first_last_into_full_name() {
        // Hand oracle for the two edge weights, computed independently.
        let w_first = (oracle_syntactic("first_name", "full_name")
            + 1.0 / 3.0) // tokens {first,name} vs {full,name}
            / 2.0;
        let w_last = (oracle_syntactic("last_name", "full_name") + 1.0 / 3.0) / 2.0;
        assert!(w_first > w_last, "stage 1 must prefer first_name");
        assert!(w_last >= DEFAULT_ATTACH_THRESHOLD);

        let src = schema(&[
            ("first_name", ColumnType::String),
            ("last_name", ColumnType::String),
        ]);
        let tgt = schema(&[("full_name", ColumnType::String)]);
        let g = build_bipartite(&src, &tgt).unwrap();
        assert!((g.weight(0, 0) - w_first).abs() < 1e-12);
        assert!((g.weight(1, 0) - w_last).abs() < 1e-12);

        let map = match_algorithmic(&g, &MatchConfig::default());
        assert_eq!(
            map.correspondences,
            vec![Correspondence {
                sources: vec!["first_name".into(), "last_name".into()],
                target: "full_name".into(),
            }]
        );
        assert!(map.unmapped_sources.is_empty());
    }

    #[test]
    fn replication_full_name_into_first_and_last() {
        let src = schema(&[("full_name", ColumnType::String)]);
        let tgt = schema(&[
            ("first_name", ColumnType::String),
            ("last_name", ColumnType::String),
        ]);
        let map = match_schemas(&src, &tgt, &MatchConfig::default()).unwrap();
        assert_eq!(map.correspondences.len(), 2);
        for corr in &map.correspondences {
            assert_eq!(corr.sources, ["full_name".to_string()]);
        }
        assert!(map.unmapped_targets.is_empty());
    }

    #[test]
    fn nonsense_names_below_floor_stay_unmapped() {
        let src = schema(&[("aaaa", ColumnType::String)]);
        let tgt = schema(&[("zzzz", ColumnType::Number)]);
        let map = match_schemas(&src, &tgt, &MatchConfig::default()).unwrap();
        assert!(map.correspondences.is_empty());
        assert_eq!(map.unmapped_sources, ["aaaa"]);
        assert_eq!(map.unmapped_targets, ["zzzz"]);
    }

    #[test]
    fn validate_flags_duplicate_targets_and_unknown_columns() {
        let src = schema(&[("a", ColumnType::Number)]);
        let tgt = schema(&[("b", ColumnType::Number)]);
        let map = SchemaMap {
            correspondences: vec![
                Correspondence {
                    sources: vec!["a".into()],
                    target: "b".into(),
                },
                Correspondence {
                    sources: vec!["ghost".into()],
                    target: "b".into(),
                },
            ],
            unmapped_sources: vec![],
            unmapped_targets: vec![],
        };
        let violations = validate_schema_map(&map, &src, &tgt);
        assert!(violations.iter().any(|v| v.contains("mapped twice")), "{violations:?}");
        assert!(
            violations.iter().any(|v| v.contains("unknown source")),
            "{violations:?}"
        );

        let good = SchemaMap::from_correspondences(
            vec![Correspondence {
                sources: vec!["a".into()],
                target: "b".into(),
            }],
            &src,
            &tgt,
        );
        assert!(validate_schema_map(&good, &src, &tgt).is_empty());
    }

    // ---- stability oracle on random weight graphs ----

    fn arb_graph() -> impl Strategy<Value = BipartiteGraph> {
        (1usize..6, 1usize..6).prop_flat_map(|(nx, ny)| {
            proptest::collection::vec(
                proptest::collection::vec(0.0f64..1.0, ny),
                nx,
            )
            .prop_map(move |weights| {
                let sources =
                    (0..nx).map(|i| (format!("s{i}"), ColumnType::String)).collect();
                let targets =
                    (0..ny).map(|i| (format!("t{i}"), ColumnType::String)).collect();
                BipartiteGraph::from_weights(sources, targets, weights)
            })
        })
    }

    /// True when (x, y) form a blocking pair under the total preference
    /// orders used by the matcher.
    fn is_blocking(
        g: &BipartiteGraph,
        pairs: &[(usize, usize)],
        x: usize,
        y: usize,
        floor: f64,
    ) -> bool {
        if g.weight(x, y) < floor {
            return false;
        }
        let partner_of_x = pairs.iter().find(|(px, _)| *px == x).map(|(_, py)| *py);
        let partner_of_y = pairs.iter().find(|(_, py)| *py == y).map(|(px, _)| *px);
        let x_prefers = match partner_of_x {
            None => true,
            Some(cur) => {
                g.weight(x, y) > g.weight(x, cur)
                    || (g.weight(x, y) == g.weight(x, cur)
                        && g.targets()[y].0 < g.targets()[cur].0)
            }
        };
        let y_prefers = match partner_of_y {
            None => true,
            Some(cur) => {
                g.weight(x, y) > g.weight(cur, y)
                    || (g.weight(x, y) == g.weight(cur, y)
                        && g.sources()[x].0 < g.sources()[cur].0)
            }
        };
        x_prefers && y_prefers
    }

    proptest! {
        #[test]
        fn stage_one_has_no_blocking_pairs(g in arb_graph()) {
            let floor = DEFAULT_FLOOR_THRESHOLD;
            let pairs = stable_pairs(&g, floor);
            for x in 0..g.sources().len() {
                for y in 0..g.targets().len() {
                    if pairs.contains(&(x, y)) {
                        continue;
                    }
                    prop_assert!(
                        !is_blocking(&g, &pairs, x, y, floor),
                        "blocking pair ({x}, {y})"
                    );
                }
            }
        }

        #[test]
        fn matcher_is_deterministic_and_self_validating(g in arb_graph()) {
            let config = MatchConfig::default();
            let map1 = match_algorithmic(&g, &config);
            let map2 = match_algorithmic(&g, &config);
            prop_assert_eq!(&map1, &map2);

            let src_schema = schema(
                &g.sources().iter().map(|(n, t)| (n.as_str(), *t)).collect::<Vec<_>>(),
            );
            let tgt_schema = schema(
                &g.targets().iter().map(|(n, t)| (n.as_str(), *t)).collect::<Vec<_>>(),
            );
            let violations = validate_schema_map(&map1, &src_schema, &tgt_schema);
            prop_assert!(violations.is_empty(), "{:?}", violations);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Reversing the column order of both schemas leaves the
        /// correspondence SET unchanged (order within the map may differ).
        #[test]
        fn column_order_reversal_preserves_pairs(
            n_src in 1usize..5,
            n_tgt in 1usize..5,
        ) {
            let names = ["id", "name", "age", "city", "price"];
            let src_cols: Vec<(&str, ColumnType)> = names[..n_src]
                .iter().map(|n| (*n, ColumnType::String)).collect();
            let tgt_cols: Vec<(&str, ColumnType)> = names[..n_tgt]
                .iter().map(|n| (*n, ColumnType::String)).collect();

            let forward = match_schemas(
                &schema(&src_cols), &schema(&tgt_cols), &MatchConfig::default(),
            ).unwrap();
            let mut rev_src = src_cols.clone();
            rev_src.reverse();
            let mut rev_tgt = tgt_cols.clone();
            rev_tgt.reverse();
            let reversed = match_schemas(
                &schema(&rev_src), &schema(&rev_tgt), &MatchConfig::default(),
            ).unwrap();

            let as_set = |m: &SchemaMap| -> BTreeSet<(Vec<String>, String)> {
                m.correspondences
                    .iter()
                    .map(|c| {
                        let mut s = c.sources.clone();
                        s.sort();
                        (s, c.target.clone())
                    })
                    .collect()
            };
            prop_assert_eq!(as_set(&forward), as_set(&reversed));
        }
    }
}
