//! MSR: shrink or expand the initial capacity of a collection.

use tree_sitter::Node;

use super::{declared_type, Cx, MutationOperator, TextEdit};
use crate::source_model::Span;
use crate::syntax;

pub(super) struct Msr;

const COLLECTIONS: &[&str] = &[
    "ArrayList",
    "Vector",
    "ArrayDeque",
    "PriorityQueue",
    "HashMap",
    "HashSet",
    "LinkedHashMap",
    "LinkedHashSet",
    "Hashtable",
    "WeakHashMap",
    "IdentityHashMap",
    "ConcurrentHashMap",
];

impl MutationOperator for Msr {
    fn targets(&self, kind: &str) -> bool {
        kind == "object_creation_expression"
    }

    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool {
        capacity_arg(cx, node).is_some()
    }

    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>> {
        let Some(arg) = capacity_arg(cx, node) else {
            return Vec::new();
        };
        let text = syntax::text(arg, cx.src);
        let shrink = cx.cfg.msr_shrink_capacity.to_string();
        let factor = cx.cfg.msr_expand_factor;
        let expanded =
            if is_primary(syntax::unparen(arg)) || arg.kind() == "parenthesized_expression" {
                format!("{text} * {factor}")
            } else {
                format!("({text}) * {factor}")
            };
        let mut out = Vec::new();
        if text.trim() != shrink {
            out.push(vec![TextEdit::replace(Span::of(arg), shrink)]);
        }
        out.push(vec![TextEdit::replace(Span::of(arg), expanded)]);
        out
    }
}

fn capacity_arg<'t>(cx: &Cx<'_>, node: Node<'t>) -> Option<Node<'t>> {
    if node.child_by_field_name("type").is_none()
        || syntax::named_children(node)
            .iter()
            .any(|c| c.kind() == "class_body")
    {
        return None;
    }
    let ty = syntax::erased_type(node.child_by_field_name("type")?, cx.src);
    if !COLLECTIONS.contains(&ty.as_str()) {
        return None;
    }
    let first = node.child_by_field_name("arguments")?.named_child(0)?;
    is_capacity(cx, first, node.start_byte()).then_some(first)
}

fn is_primary(n: Node<'_>) -> bool {
    matches!(
        n.kind(),
        "decimal_integer_literal"
            | "hex_integer_literal"
            | "octal_integer_literal"
            | "binary_integer_literal"
            | "identifier"
            | "method_invocation"
            | "field_access"
            | "array_access"
    )
}

/// Whether `arg` looks like an integral capacity rather than a source
/// collection to copy.
fn is_capacity(cx: &Cx<'_>, arg: Node<'_>, at: usize) -> bool {
    let arg = syntax::unparen(arg);
    match arg.kind() {
        "decimal_integer_literal"
        | "hex_integer_literal"
        | "octal_integer_literal"
        | "binary_integer_literal" => true,
        "binary_expression" => matches!(
            syntax::operator(arg, cx.src),
            Some("+" | "-" | "*" | "/" | "%" | "<<" | ">>" | ">>>")
        ),
        "unary_expression" => matches!(syntax::operator(arg, cx.src), Some("-" | "+")),
        "cast_expression" => arg
            .child_by_field_name("type")
            .is_some_and(|t| t.kind() == "integral_type"),
        "method_invocation" => arg
            .child_by_field_name("name")
            .is_some_and(|n| matches!(syntax::text(n, cx.src), "size" | "length")),
        "field_access" => arg
            .child_by_field_name("field")
            .is_some_and(|f| syntax::text(f, cx.src) == "length"),
        "identifier" => declared_type(cx, syntax::text(arg, cx.src), at).is_some_and(|d| {
            d.extra_dims == 0
                && matches!(
                    syntax::text(d.ty, cx.src),
                    "int" | "short" | "byte" | "char"
                )
        }),
        _ => false,
    }
}
