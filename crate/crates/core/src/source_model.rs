//! Parsed source files, mutation sites and coverage-based site filtering.
//!
//! A [`SourceUnit`] owns the text of one file together with its syntax tree
//! and the list of methods found in it. [`discover_sites`] walks the usable
//! methods of a unit and asks each requested operator where it applies.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;
use tree_sitter::{Node, Parser, Tree};

use crate::operators::{self, OperatorConfig, OperatorId};
use crate::syntax;

#[derive(Debug, Error)]
pub enum SourceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path} is not valid UTF-8")]
    Encoding { path: PathBuf },
    #[error("{path}: no method could be extracted from a file with syntax errors")]
    FatalParse { path: PathBuf },
}

/// Source languages with a shipped grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Language {
    Java,
}

impl Language {
    pub fn from_path(path: &Path) -> Option<Language> {
        match path.extension()?.to_str()? {
            "java" => Some(Language::Java),
            _ => None,
        }
    }

    fn grammar(self) -> tree_sitter::Language {
        match self {
            Language::Java => tree_sitter_java::LANGUAGE.into(),
        }
    }
}

/// Half-open byte range `[start, end)` into a source text.
///
/// Serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 2]", into = "[usize; 2]")]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn of(node: Node<'_>) -> Span {
        Span::new(node.start_byte(), node.end_byte())
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.start == self.end
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.end
    }
}

impl From<[usize; 2]> for Span {
    fn from([start, end]: [usize; 2]) -> Span {
        Span { start, end }
    }
}

impl From<Span> for [usize; 2] {
    fn from(s: Span) -> [usize; 2] {
        [s.start, s.end]
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.start, self.end)
    }
}

/// A method or constructor declared directly in a named type.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodInfo {
    /// `pkg.Class.method(T1,T2)` with erased generics; constructors are
    /// named `<init>`.
    pub signature: String,
    pub span: Span,
    pub body: Option<Span>,
    /// False when the parser had to recover from errors inside the method.
    pub usable: bool,
}

/// One parsed source file. Immutable after construction.
pub struct SourceUnit {
    path: PathBuf,
    text: String,
    tree: Tree,
    language: Language,
    package: Option<String>,
    type_count: usize,
    methods: Vec<MethodInfo>,
    orphan_errors: Vec<Span>,
}

impl fmt::Debug for SourceUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SourceUnit")
            .field("path", &self.path)
            .field("language", &self.language)
            .field("len", &self.text.len())
            .field("methods", &self.methods.len())
            .finish()
    }
}

/// Reads and parses the file at `path`. The unit keeps `path` as given,
/// which feeds into site identities; prefer [`parse_unit_at`] for files
/// inside a project.
pub fn parse_unit(path: &Path) -> Result<SourceUnit, SourceError> {
    let bytes = std::fs::read(path).map_err(|source| SourceError::Io {
        path: path.to_owned(),
        source,
    })?;
    let text = String::from_utf8(bytes).map_err(|_| SourceError::Encoding {
        path: path.to_owned(),
    })?;
    SourceUnit::parse(path, text)
}

/// Parses `root/rel`, recording `rel` as the unit path.
pub fn parse_unit_at(root: &Path, rel: &Path) -> Result<SourceUnit, SourceError> {
    let mut unit = parse_unit(&root.join(rel))?;
    unit.path = rel.to_owned();
    Ok(unit)
}

impl SourceUnit {
    pub fn parse(path: impl Into<PathBuf>, text: String) -> Result<SourceUnit, SourceError> {
        let path = path.into();
        let language = Language::Java;
        let tree = parse_text(language, &text);
        let collected = collect_methods(tree.root_node(), &text);
        let root = tree.root_node();
        if root.has_error() && collected.methods.is_empty() && !text.trim().is_empty() {
            return Err(SourceError::FatalParse { path });
        }
        let orphan_errors = syntax::descendants(root)
            .into_iter()
            .filter(|n| n.is_error() || n.is_missing())
            .map(Span::of)
            .filter(|s| !collected.methods.iter().any(|m| m.span.contains(s)))
            .collect();
        Ok(SourceUnit {
            path,
            package: collected.package,
            type_count: collected.type_count,
            methods: collected.methods,
            orphan_errors,
            text,
            tree,
            language,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Unit path with `/` separators, as used in site ids and patches.
    pub fn path_str(&self) -> String {
        self.path
            .components()
            .map(|c| c.as_os_str().to_string_lossy())
            .collect::<Vec<_>>()
            .join("/")
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    pub fn tree(&self) -> &Tree {
        &self.tree
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn package(&self) -> Option<&str> {
        self.package.as_deref()
    }

    /// Number of top-level and nested named type declarations.
    pub fn type_count(&self) -> usize {
        self.type_count
    }

    pub fn methods(&self) -> &[MethodInfo] {
        &self.methods
    }

    /// Syntax errors the parser could not attribute to any method.
    pub fn orphan_errors(&self) -> &[Span] {
        &self.orphan_errors
    }

    /// The registered method whose declaration contains `span`.
    pub fn enclosing_method(&self, span: &Span) -> Option<&MethodInfo> {
        self.methods.iter().find(|m| m.span.contains(span))
    }

    /// Node with exactly `span` whose kind satisfies `pred`.
    pub(crate) fn node_at(&self, span: Span, pred: impl Fn(&str) -> bool) -> Option<Node<'_>> {
        let root = self.tree.root_node();
        if span.end > self.text.len() {
            return None;
        }
        // the smallest node covering the range; ancestors with the same span
        // are the only other candidates
        let mut node = root.descendant_for_byte_range(span.start, span.end)?;
        while Span::of(node) == span {
            if pred(node.kind()) {
                return Some(node);
            }
            node = node.parent()?;
        }
        None
    }

    pub(crate) fn method_node(&self, method: &MethodInfo) -> Option<Node<'_>> {
        self.node_at(method.span, syntax::is_method_like)
    }
}

pub(crate) fn parse_text(language: Language, text: &str) -> Tree {
    let mut parser = Parser::new();
    parser
        .set_language(&language.grammar())
        .expect("bundled grammar is ABI compatible");
    parser
        .parse(text, None)
        .expect("parser has a language and no timeout")
}

/// Count of error and missing nodes in a parse of `text`.
pub fn error_count(language: Language, text: &str) -> usize {
    let tree = parse_text(language, text);
    syntax::descendants(tree.root_node())
        .into_iter()
        .filter(|n| n.is_error() || n.is_missing())
        .count()
}

struct Collected {
    package: Option<String>,
    type_count: usize,
    methods: Vec<MethodInfo>,
}

fn collect_methods(root: Node<'_>, src: &str) -> Collected {
    let package = syntax::named_children(root)
        .into_iter()
        .find(|n| n.kind() == "package_declaration")
        .and_then(|p| {
            syntax::named_children(p)
                .into_iter()
                .find(|n| matches!(n.kind(), "scoped_identifier" | "identifier"))
        })
        .map(|n| syntax::text(n, src).split_whitespace().collect::<String>());
    let mut out = Collected {
        package,
        type_count: 0,
        methods: Vec::new(),
    };
    let prefix = out.package.clone().unwrap_or_default();
    visit_types(root, src, &prefix, &HashMap::new(), &mut out);
    out
}

fn visit_types(
    node: Node<'_>,
    src: &str,
    qualifier: &str,
    type_vars: &HashMap<String, String>,
    out: &mut Collected,
) {
    for child in syntax::named_children(node) {
        let kind = child.kind();
        if syntax::is_type_declaration(kind) {
            out.type_count += 1;
            let name = child
                .child_by_field_name("name")
                .map(|n| syntax::text(n, src))
                .unwrap_or("?");
            let qualified = if qualifier.is_empty() {
                name.to_string()
            } else {
                format!("{qualifier}.{name}")
            };
            let mut vars = type_vars.clone();
            if let Some(tp) = child.child_by_field_name("type_parameters") {
                add_type_vars(tp, src, &mut vars);
            }
            if let Some(body) = child.child_by_field_name("body") {
                visit_types(body, src, &qualified, &vars, out);
            }
        } else if syntax::is_type_body(kind) {
            visit_types(child, src, qualifier, type_vars, out);
        } else if syntax::is_method_like(kind) {
            out.methods
                .push(method_info(child, src, qualifier, type_vars));
        }
    }
}

fn add_type_vars(type_params: Node<'_>, src: &str, vars: &mut HashMap<String, String>) {
    for tp in syntax::named_children(type_params) {
        if tp.kind() != "type_parameter" {
            continue;
        }
        let kids = syntax::named_children(tp);
        let Some(name) = kids.iter().find(|n| n.kind() == "type_identifier") else {
            continue;
        };
        let bound = kids
            .iter()
            .find(|n| n.kind() == "type_bound")
            .and_then(|b| b.named_child(0))
            .map(|b| syntax::erased_type(b, src))
            .unwrap_or_else(|| "Object".to_string());
        vars.insert(syntax::text(*name, src).to_string(), bound);
    }
}

fn method_info(
    node: Node<'_>,
    src: &str,
    qualifier: &str,
    type_vars: &HashMap<String, String>,
) -> MethodInfo {
    let mut vars = type_vars.clone();
    if let Some(tp) = node.child_by_field_name("type_parameters") {
        add_type_vars(tp, src, &mut vars);
    }
    let name = if node.kind() == "method_declaration" {
        node.child_by_field_name("name")
            .map(|n| syntax::text(n, src))
            .unwrap_or("?")
    } else {
        "<init>"
    };
    let params: Vec<String> = node
        .child_by_field_name("parameters")
        .map(|ps| {
            syntax::named_children(ps)
                .into_iter()
                .filter_map(|p| param_type(p, src, &vars))
                .collect()
        })
        .unwrap_or_default();
    let signature = if qualifier.is_empty() {
        format!("{name}({})", params.join(","))
    } else {
        format!("{qualifier}.{name}({})", params.join(","))
    };
    MethodInfo {
        signature,
        span: Span::of(node),
        body: node.child_by_field_name("body").map(Span::of),
        usable: !node.has_error(),
    }
}

fn param_type(param: Node<'_>, src: &str, vars: &HashMap<String, String>) -> Option<String> {
    let (ty, extra_dims) = match param.kind() {
        "formal_parameter" => {
            let dims = param
                .child_by_field_name("dimensions")
                .map(|d| syntax::text(d, src).matches('[').count())
                .unwrap_or(0);
            (param.child_by_field_name("type")?, dims)
        }
        // `T... xs` erases to `T[]`
        "spread_parameter" => (
            syntax::named_children(param)
                .into_iter()
                .find(|n| !matches!(n.kind(), "modifiers" | "variable_declarator"))?,
            1,
        ),
        _ => return None,
    };
    let erased = syntax::erased_type(ty, src);
    let (elem, dims) = match erased.find('[') {
        Some(i) => (&erased[..i], &erased[i..]),
        None => (erased.as_str(), ""),
    };
    let elem = vars.get(elem).map(String::as_str).unwrap_or(elem);
    Some(format!("{elem}{dims}{}", "[]".repeat(extra_dims)))
}

/// Structural context in which a mutation is injected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ContextClass {
    LoopHeader,
    LoopBody,
    ConditionExpr,
    MethodEntry,
    Declaration,
    CollectionCtor,
    ThirdPartyCall,
    StatementBeforeLoop,
}

impl ContextClass {
    pub const ALL: [ContextClass; 8] = [
        ContextClass::LoopHeader,
        ContextClass::LoopBody,
        ContextClass::ConditionExpr,
        ContextClass::MethodEntry,
        ContextClass::Declaration,
        ContextClass::CollectionCtor,
        ContextClass::ThirdPartyCall,
        ContextClass::StatementBeforeLoop,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ContextClass::LoopHeader => "LoopHeader",
            ContextClass::LoopBody => "LoopBody",
            ContextClass::ConditionExpr => "ConditionExpr",
            ContextClass::MethodEntry => "MethodEntry",
            ContextClass::Declaration => "Declaration",
            ContextClass::CollectionCtor => "CollectionCtor",
            ContextClass::ThirdPartyCall => "ThirdPartyCall",
            ContextClass::StatementBeforeLoop => "StatementBeforeLoop",
        }
    }
}

impl fmt::Display for ContextClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Context class an operator injects into.
pub fn context_for(op: OperatorId) -> ContextClass {
    match op {
        OperatorId::Rcl | OperatorId::Efl => ContextClass::LoopHeader,
        OperatorId::Urv | OperatorId::Ptw | OperatorId::Sts => ContextClass::Declaration,
        OperatorId::Msl => ContextClass::StatementBeforeLoop,
        OperatorId::Soc => ContextClass::ConditionExpr,
        OperatorId::Hwo => ContextClass::ThirdPartyCall,
        OperatorId::Cso => ContextClass::MethodEntry,
        OperatorId::Msr => ContextClass::CollectionCtor,
    }
}

/// A location where one operator applies.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MutationSite {
    pub site_id: String,
    /// Unit path relative to the project root, `/`-separated.
    pub file: String,
    pub span: Span,
    pub operator: OperatorId,
    pub context: ContextClass,
    pub enclosing_method: String,
}

pub fn classify_context(site: &MutationSite) -> ContextClass {
    context_for(site.operator)
}

/// Stable identity of a site: derived from the unit path, operator, method
/// signature and the site's ordinal among that operator's sites in the
/// method, so edits elsewhere in the file leave it unchanged.
pub fn site_id(file: &str, op: OperatorId, method: &str, ordinal: usize) -> String {
    let mut h = Sha256::new();
    h.update(file.as_bytes());
    h.update([0]);
    h.update(op.code().as_bytes());
    h.update([0]);
    h.update(method.as_bytes());
    h.update([0]);
    h.update(ordinal.to_le_bytes());
    let digest = h.finalize();
    format!("{}-{}", op.code(), hex::encode(&digest[..8]))
}

/// All sites in `unit` for the requested operators, optionally restricted to
/// methods some benchmark covers. Ordered by (file, span start, operator,
/// span end).
pub fn discover_sites(
    unit: &SourceUnit,
    ops: &[OperatorId],
    coverage: Option<&CoverageMap>,
    cfg: &OperatorConfig,
) -> Vec<MutationSite> {
    let ops: BTreeSet<OperatorId> = ops.iter().copied().collect();
    let file = unit.path_str();
    let mut sites = Vec::new();
    for method in unit.methods.iter().filter(|m| m.usable) {
        if coverage.is_some_and(|c| !c.covers(&method.signature)) {
            continue;
        }
        let Some(node) = unit.method_node(method) else {
            continue;
        };
        for &op in &ops {
            let mut spans = operators::find_sites(op, unit, node, cfg);
            spans.sort();
            spans.dedup();
            for (ordinal, span) in spans.into_iter().enumerate() {
                sites.push(MutationSite {
                    site_id: site_id(&file, op, &method.signature, ordinal),
                    file: file.clone(),
                    span,
                    operator: op,
                    context: context_for(op),
                    enclosing_method: method.signature.clone(),
                });
            }
        }
    }
    sites.sort_by(|a, b| {
        (&a.file, a.span.start, a.operator, a.span.end).cmp(&(
            &b.file,
            b.span.start,
            b.operator,
            b.span.end,
        ))
    });
    sites
}

#[derive(Debug, Error)]
pub enum CoverageError {
    #[error("cannot read coverage file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed coverage JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("benchmark {bench}: invalid method signature {signature:?}")]
    BadSignature { bench: String, signature: String },
}

/// Methods executed by each benchmark.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageMap {
    #[serde(rename = "benchmarks")]
    entries: BTreeMap<String, BTreeSet<String>>,
}

impl CoverageMap {
    pub fn new() -> CoverageMap {
        CoverageMap::default()
    }

    pub fn load(path: &Path) -> Result<CoverageMap, CoverageError> {
        let text = std::fs::read_to_string(path).map_err(|source| CoverageError::Io {
            path: path.to_owned(),
            source,
        })?;
        CoverageMap::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<CoverageMap, CoverageError> {
        let map: CoverageMap = serde_json::from_str(text)?;
        for (bench, methods) in &map.entries {
            if let Some(bad) = methods.iter().find(|m| !is_valid_signature(m)) {
                return Err(CoverageError::BadSignature {
                    bench: bench.clone(),
                    signature: bad.clone(),
                });
            }
        }
        Ok(map)
    }

    pub fn insert(&mut self, bench: &str, method: &str) {
        self.entries
            .entry(bench.to_string())
            .or_default()
            .insert(method.to_string());
    }

    pub fn covers(&self, signature: &str) -> bool {
        self.entries.values().any(|ms| ms.contains(signature))
    }

    pub fn benchmarks_covering<'a>(&'a self, signature: &'a str) -> impl Iterator<Item = &'a str> {
        self.entries
            .iter()
            .filter(move |(_, ms)| ms.contains(signature))
            .map(|(b, _)| b.as_str())
    }

    pub fn entries(&self) -> &BTreeMap<String, BTreeSet<String>> {
        &self.entries
    }
}

fn is_java_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_' || c == '$')
        && chars.all(|c| c.is_alphanumeric() || c == '_' || c == '$')
}

fn is_type_name(s: &str) -> bool {
    let base = s.trim_end_matches("[]");
    !base.is_empty()
        && base.split('.').all(is_java_ident)
        && s[base.len()..].len().is_multiple_of(2)
}

/// Checks the `pkg.Class.method(T1,T2)` shape.
pub fn is_valid_signature(sig: &str) -> bool {
    let Some(open) = sig.find('(') else {
        return false;
    };
    if !sig.ends_with(')') {
        return false;
    }
    let (path, params) = (&sig[..open], &sig[open + 1..sig.len() - 1]);
    let Some((owner, name)) = path.rsplit_once('.') else {
        return false;
    };
    let owner_ok = owner.split('.').all(is_java_ident);
    let name_ok = name == "<init>" || is_java_ident(name);
    let params_ok = params.is_empty() || params.split(',').all(is_type_name);
    owner_ok && name_ok && params_ok
}
