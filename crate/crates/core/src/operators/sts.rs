//! STS: use `StringBuffer` where a `StringBuilder` is declared or created.

use tree_sitter::Node;

use super::{Cx, MutationOperator, TextEdit};
use crate::source_model::Span;
use crate::syntax;

pub(super) struct Sts;

const FROM: &str = "StringBuilder";
const TO: &str = "StringBuffer";

impl MutationOperator for Sts {
    fn targets(&self, kind: &str) -> bool {
        matches!(
            kind,
            "local_variable_declaration" | "object_creation_expression"
        )
    }

    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool {
        !builder_tokens(cx, node).is_empty()
            && (node.kind() == "local_variable_declaration" || !inside_declaration_site(cx, node))
    }

    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>> {
        let edits = builder_tokens(cx, node)
            .into_iter()
            .map(|t| TextEdit::replace(Span::of(t), TO))
            .collect();
        vec![edits]
    }
}

fn is_builder(cx: &Cx<'_>, ty: Node<'_>) -> bool {
    syntax::erased_type(ty, cx.src) == FROM
}

/// The `StringBuilder` identifiers a mutation rewrites: in a declaration,
/// its type and the type of each declarator's direct `new`; in a bare
/// creation, its type.
fn builder_tokens<'t>(cx: &Cx<'_>, node: Node<'t>) -> Vec<Node<'t>> {
    let mut types = Vec::new();
    match node.kind() {
        "local_variable_declaration" => {
            if let Some(ty) = node
                .child_by_field_name("type")
                .filter(|t| is_builder(cx, *t))
            {
                types.push(ty);
            }
            for d in syntax::field_children(node, "declarator") {
                let created = d
                    .child_by_field_name("value")
                    .map(syntax::unparen)
                    .filter(|v| v.kind() == "object_creation_expression")
                    .and_then(|v| v.child_by_field_name("type"))
                    .filter(|t| is_builder(cx, *t));
                types.extend(created);
            }
        }
        _ => types.extend(
            node.child_by_field_name("type")
                .filter(|t| is_builder(cx, *t)),
        ),
    }
    types
        .into_iter()
        .flat_map(syntax::descendants)
        .filter(|n| n.kind() == "type_identifier" && syntax::text(*n, cx.src) == FROM)
        .collect()
}

/// A creation that is the direct initializer of a local declaration is
/// handled by the declaration's site.
fn inside_declaration_site(cx: &Cx<'_>, creation: Node<'_>) -> bool {
    let mut n = creation;
    while let Some(p) = n.parent() {
        if p.kind() != "parenthesized_expression" {
            break;
        }
        n = p;
    }
    let Some(declarator) = n.parent().filter(|p| p.kind() == "variable_declarator") else {
        return false;
    };
    declarator.child_by_field_name("value") == Some(n)
        && declarator.parent().is_some_and(|d| {
            d.kind() == "local_variable_declaration" && !builder_tokens(cx, d).is_empty()
        })
}
