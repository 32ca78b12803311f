//! SOC: swap the operands of `&&` / `||`.

use tree_sitter::Node;

use super::{Cx, MutationOperator, TextEdit};
use crate::source_model::Span;
use crate::syntax;

pub(super) struct Soc;

impl MutationOperator for Soc {
    fn targets(&self, kind: &str) -> bool {
        kind == "binary_expression"
    }

    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool {
        if !matches!(syntax::operator(node, cx.src), Some("&&" | "||")) {
            return false;
        }
        let (Some(left), Some(right)) = (
            node.child_by_field_name("left"),
            node.child_by_field_name("right"),
        ) else {
            return false;
        };
        !syntax::has_assignment(left)
            && !syntax::has_assignment(right)
            && syntax::text(left, cx.src) != syntax::text(right, cx.src)
    }

    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>> {
        let left = node.child_by_field_name("left").expect("checked");
        let right = node.child_by_field_name("right").expect("checked");
        vec![vec![
            TextEdit::replace(Span::of(left), syntax::text(right, cx.src)),
            TextEdit::replace(Span::of(right), syntax::text(left, cx.src)),
        ]]
    }
}
