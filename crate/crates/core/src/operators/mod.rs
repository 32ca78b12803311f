//! The ten performance mutation operators.
//!
//! Each operator is an applicability predicate over syntax nodes paired with
//! a transformation that yields one or more single-mutation variants, each a
//! list of non-overlapping [`TextEdit`]s against the original text. The
//! guards here are syntactic and conservative; semantic safety is left to
//! compiling and testing the mutant.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tree_sitter::Node;

use crate::source_model::{self, MutationSite, SourceUnit, Span};
use crate::syntax;

mod cso;
mod efl;
mod hwo;
mod msl;
mod msr;
mod ptw;
mod rcl;
mod soc;
mod sts;
mod urv;

pub use hwo::{helper_source as hwo_helper_source, HELPER_CLASS as HWO_HELPER_CLASS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum OperatorId {
    Rcl,
    Urv,
    Msl,
    Soc,
    Hwo,
    Cso,
    Msr,
    Ptw,
    Sts,
    Efl,
}

impl OperatorId {
    pub const ALL: [OperatorId; 10] = [
        OperatorId::Rcl,
        OperatorId::Urv,
        OperatorId::Msl,
        OperatorId::Soc,
        OperatorId::Hwo,
        OperatorId::Cso,
        OperatorId::Msr,
        OperatorId::Ptw,
        OperatorId::Sts,
        OperatorId::Efl,
    ];

    pub fn code(self) -> &'static str {
        match self {
            OperatorId::Rcl => "RCL",
            OperatorId::Urv => "URV",
            OperatorId::Msl => "MSL",
            OperatorId::Soc => "SOC",
            OperatorId::Hwo => "HWO",
            OperatorId::Cso => "CSO",
            OperatorId::Msr => "MSR",
            OperatorId::Ptw => "PTW",
            OperatorId::Sts => "STS",
            OperatorId::Efl => "EFL",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            OperatorId::Rcl => "Removal of Stop Condition in Loop",
            OperatorId::Urv => "Unnecessary Recalculation of Values",
            OperatorId::Msl => "Move/Copy Statement into Loop",
            OperatorId::Soc => "Swap of Operands in Condition",
            OperatorId::Hwo => "Simulation of Heavy-Weight Operation",
            OperatorId::Cso => "Creation of Short-lived Objects",
            OperatorId::Msr => "Memory Space Reservation",
            OperatorId::Ptw => "Primitive to Wrapper",
            OperatorId::Sts => "StringBuilder to StringBuffer",
            OperatorId::Efl => "Enhanced For Loops",
        }
    }
}

impl fmt::Display for OperatorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for OperatorId {
    type Err = UnknownOperator;

    fn from_str(s: &str) -> Result<OperatorId, UnknownOperator> {
        OperatorId::ALL
            .into_iter()
            .find(|op| op.code().eq_ignore_ascii_case(s))
            .ok_or_else(|| UnknownOperator(s.to_string()))
    }
}

#[derive(Debug, Error)]
#[error("unknown operator {0:?}")]
pub struct UnknownOperator(pub String);

/// Tunables for the operators. All numeric values must be positive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    pub hwo_delay_micros: u64,
    pub msr_shrink_capacity: u64,
    pub msr_expand_factor: u64,
    /// `None` means one variant per removable conjunct.
    pub rcl_max_variants_per_loop: Option<usize>,
    /// Packages under this prefix are the project's own; calls into any
    /// other package count as third-party for HWO. Defaults to the package
    /// of the file being mutated.
    pub project_package_prefix: Option<String>,
    /// Glob patterns (`*` wildcard) over `pkg.Type.method` or `Type.method`
    /// naming heavy-weight calls that HWO targets regardless of package.
    pub heavyweight_patterns: Vec<String>,
    /// Parameter types CSO may copy-construct.
    pub cso_allowlist: Vec<String>,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            hwo_delay_micros: 100,
            msr_shrink_capacity: 1,
            msr_expand_factor: 10,
            rcl_max_variants_per_loop: None,
            project_package_prefix: None,
            heavyweight_patterns: [
                "java.io.*",
                "java.nio.*",
                "java.net.*",
                "java.sql.*",
                "Files.*",
                "*Socket.*",
                "*Connection.*",
            ]
            .map(String::from)
            .to_vec(),
            cso_allowlist: [
                "ArrayList",
                "LinkedList",
                "HashMap",
                "LinkedHashMap",
                "TreeMap",
                "HashSet",
                "LinkedHashSet",
                "TreeSet",
                "ArrayDeque",
                "Vector",
                "PriorityQueue",
                "StringBuilder",
                "StringBuffer",
                "String",
            ]
            .map(String::from)
            .to_vec(),
        }
    }
}

impl OperatorConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.hwo_delay_micros < 1 {
            return Err("hwo_delay_micros must be >= 1".into());
        }
        if self.msr_shrink_capacity < 1 {
            return Err("msr_shrink_capacity must be >= 1".into());
        }
        if self.msr_expand_factor < 2 {
            return Err("msr_expand_factor must be >= 2".into());
        }
        if self.rcl_max_variants_per_loop == Some(0) {
            return Err("rcl_max_variants_per_loop must be >= 1".into());
        }
        Ok(())
    }
}

/// Replacement of the bytes in `span` of the original text. An empty span is
/// an insertion.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TextEdit {
    pub span: Span,
    pub replacement: String,
}

impl TextEdit {
    pub fn replace(span: Span, replacement: impl Into<String>) -> TextEdit {
        TextEdit {
            span,
            replacement: replacement.into(),
        }
    }

    pub fn insert(at: usize, text: impl Into<String>) -> TextEdit {
        TextEdit::replace(Span::new(at, at), text)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EditError {
    #[error("edit {0} lies outside the text")]
    OutOfBounds(Span),
    #[error("edit {0} does not fall on character boundaries")]
    NotCharBoundary(Span),
    #[error("edits {0} and {1} overlap")]
    Overlap(Span, Span),
}

/// Applies non-overlapping edits to `text`.
pub fn apply_edits(text: &str, edits: &[TextEdit]) -> Result<String, EditError> {
    let mut sorted: Vec<&TextEdit> = edits.iter().collect();
    sorted.sort_by_key(|e| (e.span.start, e.span.end));
    let mut out = String::with_capacity(text.len() + 64);
    let mut cursor = 0;
    let mut prev: Option<Span> = None;
    for edit in sorted {
        let span = edit.span;
        if span.start > span.end || span.end > text.len() {
            return Err(EditError::OutOfBounds(span));
        }
        if !text.is_char_boundary(span.start) || !text.is_char_boundary(span.end) {
            return Err(EditError::NotCharBoundary(span));
        }
        if let Some(p) = prev {
            // two insertions at one point have no defined order
            if p.end > span.start || (p.is_empty() && span.is_empty() && p.start == span.start) {
                return Err(EditError::Overlap(p, span));
            }
        }
        out.push_str(&text[cursor..span.start]);
        out.push_str(&edit.replacement);
        cursor = span.end;
        prev = Some(span);
    }
    out.push_str(&text[cursor..]);
    Ok(out)
}

#[derive(Debug, Error)]
pub enum OperatorError {
    #[error("{operator} does not apply at {file}:{span} (stale site?)")]
    InapplicableSite {
        operator: OperatorId,
        file: String,
        span: Span,
    },
    #[error("{operator} variant {variant} at {file}:{span} does not parse")]
    Unparseable {
        operator: OperatorId,
        file: String,
        span: Span,
        variant: usize,
    },
    #[error(transparent)]
    Edit(#[from] EditError),
}

/// Everything an operator may look at while inspecting one node.
pub(crate) struct Cx<'a> {
    pub unit: &'a SourceUnit,
    pub src: &'a str,
    pub cfg: &'a OperatorConfig,
    /// Declaration node of the enclosing method.
    pub method: Node<'a>,
}

pub(crate) trait MutationOperator: Sync {
    /// Node kinds this operator inspects; the site span is the node's span.
    fn targets(&self, kind: &str) -> bool;
    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool;
    /// One edit list per variant. Only called when `applies` holds.
    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>>;
}

fn operator(op: OperatorId) -> &'static dyn MutationOperator {
    match op {
        OperatorId::Rcl => &rcl::Rcl,
        OperatorId::Urv => &urv::Urv,
        OperatorId::Msl => &msl::Msl,
        OperatorId::Soc => &soc::Soc,
        OperatorId::Hwo => &hwo::Hwo,
        OperatorId::Cso => &cso::Cso,
        OperatorId::Msr => &msr::Msr,
        OperatorId::Ptw => &ptw::Ptw,
        OperatorId::Sts => &sts::Sts,
        OperatorId::Efl => &efl::Efl,
    }
}

/// Spans within `method` (a method or constructor declaration node) where
/// `op` applies.
pub(crate) fn find_sites(
    op: OperatorId,
    unit: &SourceUnit,
    method: Node<'_>,
    cfg: &OperatorConfig,
) -> Vec<Span> {
    let imp = operator(op);
    let cx = Cx {
        unit,
        src: unit.text(),
        cfg,
        method,
    };
    syntax::descendants(method)
        .into_iter()
        .filter(|n| imp.targets(n.kind()) && imp.applies(&cx, *n))
        .map(Span::of)
        .collect()
}

/// Re-checks `site` against `unit` and returns the edit list of every
/// variant. Each variant is verified to re-parse without new syntax errors.
pub fn apply(
    unit: &SourceUnit,
    site: &MutationSite,
    cfg: &OperatorConfig,
) -> Result<Vec<Vec<TextEdit>>, OperatorError> {
    let inapplicable = || OperatorError::InapplicableSite {
        operator: site.operator,
        file: site.file.clone(),
        span: site.span,
    };
    let imp = operator(site.operator);
    let node = unit
        .node_at(site.span, |k| imp.targets(k))
        .ok_or_else(inapplicable)?;
    let method = unit
        .enclosing_method(&site.span)
        .filter(|m| m.usable)
        .and_then(|m| unit.method_node(m))
        .ok_or_else(inapplicable)?;
    let cx = Cx {
        unit,
        src: unit.text(),
        cfg,
        method,
    };
    if !imp.applies(&cx, node) {
        return Err(inapplicable());
    }
    let variants = imp.variants(&cx, node);
    if variants.is_empty() {
        return Err(inapplicable());
    }
    let baseline_errors = syntax::descendants(unit.tree().root_node())
        .into_iter()
        .filter(|n| n.is_error() || n.is_missing())
        .count();
    for (i, edits) in variants.iter().enumerate() {
        let mutated = apply_edits(unit.text(), edits)?;
        debug_assert_ne!(mutated, unit.text(), "{} produced a no-op", site.operator);
        if source_model::error_count(unit.language(), &mutated) > baseline_errors {
            return Err(OperatorError::Unparseable {
                operator: site.operator,
                file: site.file.clone(),
                span: site.span,
                variant: i,
            });
        }
    }
    Ok(variants)
}

/// Declared type of a variable visible at `before`: the closest preceding
/// local, parameter or loop variable in the method, else a field anywhere in
/// the file.
pub(crate) struct DeclType<'t> {
    pub ty: Node<'t>,
    /// Array dimensions written on the declarator (`int a[]`).
    pub extra_dims: usize,
}

pub(crate) fn declared_type<'t>(cx: &Cx<'t>, name: &str, before: usize) -> Option<DeclType<'t>> {
    let src = cx.src;
    let dims = |n: Option<Node<'_>>| {
        n.map(|d| syntax::text(d, src).matches('[').count())
            .unwrap_or(0)
    };
    let mut best = None;
    for n in syntax::descendants(cx.method) {
        if n.start_byte() >= before {
            break;
        }
        match n.kind() {
            "formal_parameter" | "catch_formal_parameter" | "enhanced_for_statement" => {
                let named = n.child_by_field_name("name").map(|x| syntax::text(x, src));
                if named == Some(name) {
                    if let Some(ty) = n.child_by_field_name("type") {
                        best = Some(DeclType {
                            ty,
                            extra_dims: dims(n.child_by_field_name("dimensions")),
                        });
                    }
                }
            }
            "spread_parameter" => {
                let decl = syntax::named_children(n)
                    .into_iter()
                    .find(|c| c.kind() == "variable_declarator");
                let named = decl
                    .and_then(|d| d.child_by_field_name("name"))
                    .map(|x| syntax::text(x, src));
                if named == Some(name) {
                    if let Some(ty) = syntax::named_children(n)
                        .into_iter()
                        .find(|c| !matches!(c.kind(), "modifiers" | "variable_declarator"))
                    {
                        best = Some(DeclType { ty, extra_dims: 1 });
                    }
                }
            }
            "local_variable_declaration" => {
                if let Some(d) = declarator_type(n, name, src) {
                    best = Some(d);
                }
            }
            _ => {}
        }
    }
    if best.is_some() {
        return best;
    }
    syntax::descendants(cx.unit.tree().root_node())
        .into_iter()
        .filter(|n| n.kind() == "field_declaration")
        .find_map(|n| declarator_type(n, name, src))
}

fn declarator_type<'t>(decl: Node<'t>, name: &str, src: &str) -> Option<DeclType<'t>> {
    let ty = decl.child_by_field_name("type")?;
    for d in syntax::field_children(decl, "declarator") {
        if d.child_by_field_name("name").map(|x| syntax::text(x, src)) != Some(name) {
            continue;
        }
        let extra_dims = d
            .child_by_field_name("dimensions")
            .map(|x| syntax::text(x, src).matches('[').count())
            .unwrap_or(0);
        if syntax::text(ty, src) == "var" {
            let value = d.child_by_field_name("value").map(syntax::unparen)?;
            if value.kind() == "object_creation_expression" {
                return Some(DeclType {
                    ty: value.child_by_field_name("type")?,
                    extra_dims: 0,
                });
            }
            return None;
        }
        return Some(DeclType { ty, extra_dims });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn codes_round_trip() {
        for op in OperatorId::ALL {
            assert_eq!(op.code().parse::<OperatorId>().unwrap(), op);
            assert_eq!(
                serde_json::to_string(&op).unwrap(),
                format!("\"{}\"", op.code())
            );
        }
        assert!("XYZ".parse::<OperatorId>().is_err());
    }

    #[test]
    fn edits_apply_in_order() {
        let out = apply_edits(
            "abcdef",
            &[
                TextEdit::replace(Span::new(4, 6), "X"),
                TextEdit::insert(0, ">"),
                TextEdit::replace(Span::new(1, 2), ""),
            ],
        )
        .unwrap();
        assert_eq!(out, ">acdX");
    }

    #[test]
    fn overlapping_edits_rejected() {
        let err = apply_edits(
            "abcdef",
            &[
                TextEdit::replace(Span::new(0, 3), "x"),
                TextEdit::replace(Span::new(2, 4), "y"),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, EditError::Overlap(..)));
        let err = apply_edits("ab", &[TextEdit::insert(1, "x"), TextEdit::insert(1, "y")]);
        assert!(err.is_err());
        assert!(matches!(
            apply_edits("ab", &[TextEdit::insert(3, "x")]),
            Err(EditError::OutOfBounds(_))
        ));
        assert!(matches!(
            apply_edits("é", &[TextEdit::insert(1, "x")]),
            Err(EditError::NotCharBoundary(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(OperatorConfig::default().validate().is_ok());
        let cfg = OperatorConfig {
            msr_expand_factor: 1,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    proptest! {
        // bytes outside the edited spans survive untouched and in order
        #[test]
        fn edits_touch_only_their_spans(
            text in "[a-z]{0,40}",
            raw in proptest::collection::vec((0usize..40, 0usize..5, "[A-Z]{0,3}"), 0..5),
        ) {
            let mut edits = Vec::new();
            let mut last_end = 0usize;
            let mut sorted = raw.clone();
            sorted.sort();
            for (start, len, rep) in sorted {
                let start = start.min(text.len());
                if start < last_end || (start == last_end && last_end != 0 && len == 0) {
                    continue;
                }
                let end = (start + len).min(text.len());
                edits.push(TextEdit::replace(Span::new(start, end), rep));
                last_end = end.max(start + 1);
            }
            let out = apply_edits(&text, &edits).unwrap();
            let mut expect = String::new();
            let mut cur = 0;
            for e in &edits {
                expect.push_str(&text[cur..e.span.start]);
                expect.push_str(&e.replacement);
                cur = e.span.end;
            }
            expect.push_str(&text[cur..]);
            prop_assert_eq!(out, expect);
        }
    }
}
