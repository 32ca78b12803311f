//! URV: replace reads of a cached invocation result with the invocation.

use tree_sitter::Node;

use super::{Cx, MutationOperator, TextEdit};
use crate::source_model::Span;
use crate::syntax;

pub(super) struct Urv;

const MIN_READS: usize = 2;

impl MutationOperator for Urv {
    fn targets(&self, kind: &str) -> bool {
        kind == "variable_declarator"
    }

    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool {
        reads(cx, node).is_some_and(|r| r.len() >= MIN_READS)
    }

    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>> {
        let init = node.child_by_field_name("value").expect("checked");
        let call = syntax::text(init, cx.src);
        let edits = reads(cx, node)
            .unwrap_or_default()
            .into_iter()
            .map(|r| TextEdit::replace(Span::of(r), call))
            .collect();
        vec![edits]
    }
}

/// Reads of the declared variable after its declaration, or `None` when the
/// declarator is not a local initialized from a side-effect-free-looking
/// invocation, or when the variable is ever written.
fn reads<'t>(cx: &Cx<'_>, declarator: Node<'t>) -> Option<Vec<Node<'t>>> {
    let decl = declarator.parent()?;
    if decl.kind() != "local_variable_declaration" {
        return None;
    }
    let init = declarator.child_by_field_name("value")?;
    if syntax::unparen(init).kind() != "method_invocation" || syntax::has_assignment(init) {
        return None;
    }
    let name = syntax::text(declarator.child_by_field_name("name")?, cx.src);
    let scope = decl.parent()?;
    let refs: Vec<Node<'t>> = syntax::variable_refs(scope, name, cx.src)
        .into_iter()
        .filter(|r| r.start_byte() >= declarator.end_byte())
        .collect();
    if refs.iter().any(|r| syntax::is_write(*r)) {
        return None;
    }
    Some(refs)
}

#[cfg(test)]
mod tests {
    use crate::operators::testing::*;
    use crate::operators::OperatorId;

    #[test]
    fn reads_become_invocations() {
        let src = "class A { void f() { int s = size(); use(s); use(s); } }";
        assert_eq!(
            mutate_all(src, OperatorId::Urv),
            [vec![
                "class A { void f() { int s = size(); use(size()); use(size()); } }"
            ]]
        );
    }

    #[test]
    fn single_read_is_inapplicable() {
        let src = "class A { void f() { int s = size(); use(s); } }";
        assert!(sites(src, OperatorId::Urv).is_empty());
        assert_inapplicable(src, OperatorId::Urv, "s = size()");
    }

    #[test]
    fn written_variable_is_skipped() {
        let src = "class A { void f() { int s = size(); use(s); s++; use(s); } }";
        assert!(sites(src, OperatorId::Urv).is_empty());
    }

    #[test]
    fn non_invocation_initializer_is_skipped() {
        let src = "class A { void f() { int s = n + 1; use(s); use(s); } }";
        assert!(sites(src, OperatorId::Urv).is_empty());
    }

    #[test]
    fn member_names_are_not_reads() {
        let src = "class A { void f() { String k = key(); m.put(k, k.length()); o.k(); } }";
        assert_eq!(
            mutate_all(src, OperatorId::Urv),
            [vec![
                "class A { void f() { String k = key(); m.put(key(), key().length()); o.k(); } }"
            ]]
        );
    }
}
