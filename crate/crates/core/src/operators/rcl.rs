//! RCL: drop one conjunct from a loop's stop condition.

use tree_sitter::Node;

use super::{Cx, MutationOperator, TextEdit};
use crate::source_model::Span;
use crate::syntax;

pub(super) struct Rcl;

impl MutationOperator for Rcl {
    fn targets(&self, kind: &str) -> bool {
        kind == "binary_expression"
    }

    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool {
        syntax::operator(node, cx.src) == Some("&&") && is_loop_condition(node)
    }

    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>> {
        let parts = conjuncts(node);
        let cap = cx.cfg.rcl_max_variants_per_loop.unwrap_or(parts.len());
        // leftmost conjunct removed first
        (0..parts.len().min(cap))
            .map(|drop| {
                let kept: Vec<&str> = parts
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, n)| syntax::text(*n, cx.src))
                    .collect();
                vec![TextEdit::replace(Span::of(node), kept.join(" && "))]
            })
            .collect()
    }
}

fn is_loop_condition(node: Node<'_>) -> bool {
    let Some(parent) = node.parent() else {
        return false;
    };
    match parent.kind() {
        "for_statement" => parent.child_by_field_name("condition") == Some(node),
        "parenthesized_expression" => parent.parent().is_some_and(|g| {
            matches!(g.kind(), "while_statement" | "do_statement")
                && g.child_by_field_name("condition") == Some(parent)
        }),
        _ => false,
    }
}

/// Operands of a left-associated `&&` chain, in source order.
fn conjuncts(node: Node<'_>) -> Vec<Node<'_>> {
    let src_op = node
        .child_by_field_name("operator")
        .map(|o| o.kind() == "&&")
        .unwrap_or(false);
    if node.kind() != "binary_expression" || !src_op {
        return vec![node];
    }
    let mut out = Vec::new();
    for side in ["left", "right"] {
        if let Some(child) = node.child_by_field_name(side) {
            out.extend(conjuncts(child));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use crate::operators::testing::*;
    use crate::operators::OperatorId;

    #[test]
    fn one_variant_per_conjunct() {
        let src =
            "class A { void f(int i, int n, boolean done) { while (i<n && !done) { i++; } } }";
        let out = mutate_all(src, OperatorId::Rcl);
        assert_eq!(
            out,
            [vec![
                "class A { void f(int i, int n, boolean done) { while (!done) { i++; } } }",
                "class A { void f(int i, int n, boolean done) { while (i<n) { i++; } } }",
            ]]
        );
    }

    #[test]
    fn single_clause_is_inapplicable() {
        let src = "class A { void f(int i, int n) { while (i<n) { i++; } } }";
        assert!(sites(src, OperatorId::Rcl).is_empty());
        assert_inapplicable(src, OperatorId::Rcl, "i<n");
    }

    #[test]
    fn three_conjuncts_three_variants() {
        let src = "class A { void f() { for (int i = 0; i < n && ok && i != k; i++) {} } }";
        let out = mutate_all(src, OperatorId::Rcl);
        assert_eq!(out[0].len(), 3);
        assert!(out[0][0].contains("for (int i = 0; ok && i != k; i++)"));
        assert!(out[0][1].contains("for (int i = 0; i < n && i != k; i++)"));
        assert!(out[0][2].contains("for (int i = 0; i < n && ok; i++)"));
    }

    #[test]
    fn cap_limits_variants() {
        let src = "class A { void f() { do { } while (a && b && c); } }";
        let cfg = crate::operators::OperatorConfig {
            rcl_max_variants_per_loop: Some(1),
            ..Default::default()
        };
        let out = mutate_all_with(src, OperatorId::Rcl, &cfg);
        assert_eq!(
            out,
            [vec!["class A { void f() { do { } while (b && c); } }"]]
        );
    }

    #[test]
    fn if_condition_is_not_a_loop() {
        assert!(sites("class A { void f() { if (a && b) {} } }", OperatorId::Rcl).is_empty());
    }
}
