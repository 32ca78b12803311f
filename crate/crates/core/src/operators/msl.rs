//! MSL: move an object creation that precedes a loop into the loop body.

use tree_sitter::Node;

use super::{Cx, MutationOperator, TextEdit};
use crate::source_model::Span;
use crate::syntax;

pub(super) struct Msl;

impl MutationOperator for Msl {
    fn targets(&self, kind: &str) -> bool {
        kind == "local_variable_declaration"
    }

    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool {
        following_loop(cx, node).is_some()
    }

    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>> {
        let Some(lp) = following_loop(cx, node) else {
            return Vec::new();
        };
        let stmt = syntax::text(node, cx.src);
        let body = lp.child_by_field_name("body").expect("checked");
        let mut edits = vec![TextEdit::replace(
            Span::new(node.start_byte(), lp.start_byte()),
            "",
        )];
        if body.kind() == "block" {
            edits.push(TextEdit::insert(body.start_byte() + 1, format!(" {stmt}")));
        } else {
            edits.push(TextEdit::replace(
                Span::of(body),
                format!("{{ {stmt} {} }}", syntax::text(body, cx.src)),
            ));
        }
        vec![edits]
    }
}

/// The loop directly after `decl` when `decl` creates one object that the
/// loop body uses without reassigning, and nothing outside the body refers
/// to it.
fn following_loop<'t>(cx: &Cx<'_>, decl: Node<'t>) -> Option<Node<'t>> {
    let parent = decl.parent()?;
    if !matches!(
        parent.kind(),
        "block" | "constructor_body" | "switch_block_statement_group"
    ) {
        return None;
    }
    let declarators = syntax::field_children(decl, "declarator");
    let [declarator] = declarators.as_slice() else {
        return None;
    };
    let value = syntax::unparen(declarator.child_by_field_name("value")?);
    if value.kind() != "object_creation_expression" {
        return None;
    }
    let name = syntax::text(declarator.child_by_field_name("name")?, cx.src);

    let mut next = decl.next_named_sibling()?;
    while matches!(next.kind(), "line_comment" | "block_comment") {
        next = next.next_named_sibling()?;
    }
    if !syntax::is_loop(next.kind()) {
        return None;
    }
    let body = next.child_by_field_name("body")?;
    let in_body = syntax::variable_refs(body, name, cx.src);
    if in_body.is_empty() || in_body.iter().any(|r| syntax::is_write(*r)) {
        return None;
    }
    let in_loop = syntax::variable_refs(next, name, cx.src).len();
    if in_loop != in_body.len() {
        return None;
    }
    let mut after = next.next_named_sibling();
    while let Some(stmt) = after {
        if !syntax::variable_refs(stmt, name, cx.src).is_empty() {
            return None;
        }
        after = stmt.next_named_sibling();
    }
    Some(next)
}
