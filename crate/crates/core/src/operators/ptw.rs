//! PTW: declare a primitive local with its wrapper class.

use tree_sitter::Node;

use super::{Cx, MutationOperator, TextEdit};
use crate::source_model::Span;
use crate::syntax;

pub(super) struct Ptw;

impl MutationOperator for Ptw {
    fn targets(&self, kind: &str) -> bool {
        kind == "local_variable_declaration"
    }

    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool {
        primitive(cx, node).is_some()
    }

    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>> {
        let Some((ty, prim)) = primitive(cx, node) else {
            return Vec::new();
        };
        let wrapper = syntax::wrapper_of(prim).expect("primitive");
        let mut edits = vec![TextEdit::replace(Span::of(ty), wrapper)];
        for d in syntax::field_children(node, "declarator") {
            if let Some(value) = d.child_by_field_name("value") {
                edits.extend(adjust_initializer(cx, prim, value));
            }
        }
        vec![edits]
    }
}

fn primitive<'t, 's>(cx: &Cx<'s>, decl: Node<'t>) -> Option<(Node<'t>, &'s str)> {
    let ty = decl.child_by_field_name("type")?;
    if !matches!(
        ty.kind(),
        "integral_type" | "floating_point_type" | "boolean_type"
    ) {
        return None;
    }
    let has_dims = syntax::field_children(decl, "declarator")
        .iter()
        .any(|d| d.child_by_field_name("dimensions").is_some());
    if has_dims {
        return None;
    }
    let prim = syntax::text(ty, cx.src);
    syntax::PRIMITIVES.contains(&prim).then_some((ty, prim))
}

/// Edits that keep the initializer assignable to the wrapper type: integer
/// literals get an `L`/`f`/`d` suffix, other expressions initializing a
/// `Long`/`Float`/`Double` get an explicit primitive cast.
fn adjust_initializer(cx: &Cx<'_>, prim: &str, value: Node<'_>) -> Vec<TextEdit> {
    let mut lit = syntax::unparen(value);
    if lit.kind() == "unary_expression" && matches!(syntax::operator(lit, cx.src), Some("-" | "+"))
    {
        if let Some(operand) = lit.child_by_field_name("operand") {
            lit = syntax::unparen(operand);
        }
    }
    let text = syntax::text(lit, cx.src);
    let int_literal = matches!(
        lit.kind(),
        "decimal_integer_literal"
            | "hex_integer_literal"
            | "octal_integer_literal"
            | "binary_integer_literal"
    );
    let has_suffix = |s: &[char]| text.ends_with(s);
    match (prim, lit.kind()) {
        ("long", _) if int_literal => {
            if has_suffix(&['l', 'L']) {
                vec![]
            } else {
                vec![TextEdit::insert(lit.end_byte(), "L")]
            }
        }
        ("float" | "double", "decimal_integer_literal") => {
            if has_suffix(&['l', 'L']) {
                vec![cast(cx, prim, value)]
            } else {
                let s = if prim == "float" { "f" } else { "d" };
                vec![TextEdit::insert(lit.end_byte(), s)]
            }
        }
        ("double", "decimal_floating_point_literal") if has_suffix(&['f', 'F']) => {
            vec![TextEdit::replace(
                Span::new(lit.end_byte() - 1, lit.end_byte()),
                "d",
            )]
        }
        ("float" | "double", "decimal_floating_point_literal") => vec![],
        ("long" | "float" | "double", _) => vec![cast(cx, prim, value)],
        _ => vec![],
    }
}

fn cast(cx: &Cx<'_>, prim: &str, value: Node<'_>) -> TextEdit {
    TextEdit::replace(
        Span::of(value),
        format!("({prim}) ({})", syntax::text(value, cx.src)),
    )
}

#[cfg(test)]
mod tests {
    use crate::operators::testing::*;
    use crate::operators::OperatorId;

    #[test]
    fn long_literal_gets_suffix() {
        let src = "class A { long f() { long acc = 0; return acc; } }";
        assert_eq!(
            mutate_all(src, OperatorId::Ptw),
            [vec!["class A { long f() { Long acc = 0L; return acc; } }"]]
        );
    }

    #[test]
    fn wrapper_declaration_is_inapplicable() {
        let src = "class A { void f() { Long acc = 0L; } }";
        assert!(sites(src, OperatorId::Ptw).is_empty());
        assert_inapplicable(src, OperatorId::Ptw, "Long acc = 0L;");
    }

    #[test]
    fn for_header_counter() {
        let src = "class A { void f(int n) { for (int i = 0; i < n; i++) { g(i); } } }";
        assert_eq!(
            mutate_all(src, OperatorId::Ptw),
            [vec![
                "class A { void f(int n) { for (Integer i = 0; i < n; i++) { g(i); } } }"
            ]]
        );
    }

    #[test]
    fn floating_and_casts() {
        let src = "class A { void f(int k) { double d = 1, e = -2, g = 1.5f; long w = k * 2; boolean b = true; } }";
        let out = mutate_all(src, OperatorId::Ptw);
        assert_eq!(
            out,
            [
                vec!["class A { void f(int k) { Double d = 1d, e = -2d, g = 1.5d; long w = k * 2; boolean b = true; } }"],
                vec!["class A { void f(int k) { double d = 1, e = -2, g = 1.5f; Long w = (long) (k * 2); boolean b = true; } }"],
                vec!["class A { void f(int k) { double d = 1, e = -2, g = 1.5f; long w = k * 2; Boolean b = true; } }"],
            ]
        );
    }

    #[test]
    fn arrays_are_skipped() {
        let src = "class A { void f() { int a[] = {1}; int[] b = {2}; } }";
        assert!(sites(src, OperatorId::Ptw).is_empty());
    }
}
