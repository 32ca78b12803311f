//! CSO: rebind an object parameter to a fresh copy at method entry.

use tree_sitter::Node;

use super::{Cx, MutationOperator, TextEdit};
use crate::syntax;

pub(super) struct Cso;

impl MutationOperator for Cso {
    fn targets(&self, kind: &str) -> bool {
        kind == "formal_parameters"
    }

    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool {
        entry_point(node).is_some() && !copyable_params(cx, node).is_empty()
    }

    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>> {
        let Some(at) = entry_point(node) else {
            return Vec::new();
        };
        copyable_params(cx, node)
            .into_iter()
            .map(|(name, ctor)| {
                vec![TextEdit::insert(
                    at,
                    format!(" {name} = new {ctor}({name});"),
                )]
            })
            .collect()
    }
}

/// Byte offset where the copy statement goes: after the opening brace of
/// the body, or after an explicit `this(..)`/`super(..)` call.
fn entry_point(params: Node<'_>) -> Option<usize> {
    let decl = params.parent()?;
    if !matches!(
        decl.kind(),
        "method_declaration" | "constructor_declaration"
    ) {
        return None;
    }
    let body = decl.child_by_field_name("body")?;
    let first = body.named_child(0);
    match first {
        Some(stmt) if stmt.kind() == "explicit_constructor_invocation" => Some(stmt.end_byte()),
        _ => Some(body.start_byte() + 1),
    }
}

/// `(name, constructor)` for every non-final, allowlisted reference
/// parameter, in declaration order.
fn copyable_params(cx: &Cx<'_>, params: Node<'_>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for p in syntax::named_children(params) {
        if p.kind() != "formal_parameter" || p.child_by_field_name("dimensions").is_some() {
            continue;
        }
        let is_final = syntax::named_children(p)
            .into_iter()
            .filter(|c| c.kind() == "modifiers")
            .any(|m| {
                syntax::text(m, cx.src)
                    .split_whitespace()
                    .any(|w| w == "final")
            });
        if is_final {
            continue;
        }
        let (Some(ty), Some(name)) = (p.child_by_field_name("type"), p.child_by_field_name("name"))
        else {
            continue;
        };
        let simple = syntax::erased_type(ty, cx.src);
        if !cx.cfg.cso_allowlist.contains(&simple) {
            continue;
        }
        let ctor = if ty.kind() == "generic_type" {
            let raw = ty
                .named_child(0)
                .map(|r| syntax::text(r, cx.src))
                .unwrap_or_default();
            format!("{raw}<>")
        } else {
            syntax::text(ty, cx.src).to_string()
        };
        out.push((syntax::text(name, cx.src).to_string(), ctor));
    }
    out
}
