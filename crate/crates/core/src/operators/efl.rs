//! EFL: turn an indexed `for` over an array or list into a for-each loop.

use tree_sitter::Node;

use super::{declared_type, Cx, MutationOperator, TextEdit};
use crate::source_model::Span;
use crate::syntax;

pub(super) struct Efl;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Shape {
    Array,
    List,
}

struct Plan<'t> {
    open: Node<'t>,
    close: Node<'t>,
    source: Node<'t>,
    shape: Shape,
    /// `a[i]` or `a.get(i)` nodes in the body.
    accesses: Vec<Node<'t>>,
}

impl MutationOperator for Efl {
    fn targets(&self, kind: &str) -> bool {
        kind == "for_statement"
    }

    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool {
        plan(cx, node).is_some()
    }

    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>> {
        let Some(p) = plan(cx, node) else {
            return Vec::new();
        };
        let var = fresh_name(cx);
        let elem = element_type(cx, &p, node.start_byte());
        let header = format!("({elem} {var} : {})", syntax::text(p.source, cx.src));
        let mut edits = vec![TextEdit::replace(
            Span::new(p.open.start_byte(), p.close.end_byte()),
            header,
        )];
        edits.extend(
            p.accesses
                .iter()
                .map(|a| TextEdit::replace(Span::of(*a), var.clone())),
        );
        vec![edits]
    }
}

fn plan<'t>(cx: &Cx<'_>, node: Node<'t>) -> Option<Plan<'t>> {
    let src = cx.src;
    // int i = 0
    let inits = syntax::field_children(node, "init");
    let [init] = inits.as_slice() else {
        return None;
    };
    if init.kind() != "local_variable_declaration"
        || init
            .child_by_field_name("type")
            .map(|t| syntax::text(t, src))
            != Some("int")
    {
        return None;
    }
    let decls = syntax::field_children(*init, "declarator");
    let [decl] = decls.as_slice() else {
        return None;
    };
    let index = syntax::text(decl.child_by_field_name("name")?, src);
    if decl
        .child_by_field_name("value")
        .map(|v| syntax::text(v, src))
        != Some("0")
    {
        return None;
    }

    // i < xs.length | i < xs.size()
    let cond = node.child_by_field_name("condition")?;
    if cond.kind() != "binary_expression" || syntax::operator(cond, src) != Some("<") {
        return None;
    }
    let left = cond.child_by_field_name("left")?;
    if left.kind() != "identifier" || syntax::text(left, src) != index {
        return None;
    }
    let bound = cond.child_by_field_name("right")?;
    let (source, shape) = match bound.kind() {
        "field_access"
            if bound
                .child_by_field_name("field")
                .map(|f| syntax::text(f, src))
                == Some("length") =>
        {
            (bound.child_by_field_name("object")?, Shape::Array)
        }
        "method_invocation"
            if bound
                .child_by_field_name("name")
                .map(|f| syntax::text(f, src))
                == Some("size")
                && bound
                    .child_by_field_name("arguments")
                    .is_some_and(|a| a.named_child_count() == 0) =>
        {
            (bound.child_by_field_name("object")?, Shape::List)
        }
        _ => return None,
    };
    let source_name = match source.kind() {
        "identifier" => syntax::text(source, src),
        "field_access"
            if source.child_by_field_name("object").map(|o| o.kind()) == Some("this") =>
        {
            syntax::text(source.child_by_field_name("field")?, src)
        }
        _ => return None,
    };

    // i++ | ++i | i += 1
    let updates = syntax::field_children(node, "update");
    let [update] = updates.as_slice() else {
        return None;
    };
    let update_ok = match update.kind() {
        "update_expression" => {
            let t: String = syntax::text(*update, src).split_whitespace().collect();
            t == format!("{index}++") || t == format!("++{index}")
        }
        "assignment_expression" => {
            syntax::operator(*update, src) == Some("+=")
                && update
                    .child_by_field_name("left")
                    .map(|l| syntax::text(l, src))
                    == Some(index)
                && update
                    .child_by_field_name("right")
                    .map(|r| syntax::text(r, src))
                    == Some("1")
        }
        _ => false,
    };
    if !update_ok {
        return None;
    }

    // every use of i in the body is a read-only element access
    let body = node.child_by_field_name("body")?;
    let source_text = syntax::text(source, src);
    let mut accesses = Vec::new();
    for r in syntax::variable_refs(body, index, src) {
        let access = r.parent()?;
        let ok = match shape {
            Shape::Array => {
                access.kind() == "array_access"
                    && access.child_by_field_name("index") == Some(r)
                    && access
                        .child_by_field_name("array")
                        .is_some_and(|a| syntax::text(a, src) == source_text)
            }
            Shape::List => {
                let call = access.parent()?;
                access.kind() == "argument_list"
                    && access.named_child_count() == 1
                    && call.kind() == "method_invocation"
                    && call
                        .child_by_field_name("name")
                        .map(|n| syntax::text(n, src))
                        == Some("get")
                    && call
                        .child_by_field_name("object")
                        .is_some_and(|o| syntax::text(o, src) == source_text)
            }
        };
        if !ok {
            return None;
        }
        let access = if shape == Shape::List {
            access.parent()?
        } else {
            access
        };
        if shape == Shape::Array && syntax::is_write(access) {
            return None;
        }
        accesses.push(access);
    }

    // the source itself is only read
    for r in syntax::variable_refs(body, source_name, src) {
        if syntax::is_write(r) {
            return None;
        }
        if shape == Shape::List {
            let is_get_or_size = r.parent().is_some_and(|p| {
                p.kind() == "method_invocation"
                    && p.child_by_field_name("object") == Some(r)
                    && matches!(
                        p.child_by_field_name("name").map(|n| syntax::text(n, src)),
                        Some("get" | "size" | "contains" | "isEmpty")
                    )
            });
            if !is_get_or_size {
                return None;
            }
        }
    }

    let open = syntax::token(node, "(")?;
    let close = syntax::token(node, ")")?;
    Some(Plan {
        open,
        close,
        source,
        shape,
        accesses,
    })
}

/// Element type from the source's declaration, or `var` when it cannot be
/// read off the declaration.
fn element_type(cx: &Cx<'_>, p: &Plan<'_>, at: usize) -> String {
    let name = match p.source.kind() {
        "field_access" => p.source.child_by_field_name("field"),
        _ => Some(p.source),
    }
    .map(|n| syntax::text(n, cx.src))
    .unwrap_or_default();
    let Some(decl) = declared_type(cx, name, at) else {
        return "var".into();
    };
    match p.shape {
        Shape::Array => {
            if decl.extra_dims > 0 {
                let base = syntax::text(decl.ty, cx.src);
                return format!("{base}{}", "[]".repeat(decl.extra_dims - 1));
            }
            if decl.ty.kind() != "array_type" {
                return "var".into();
            }
            let elem = decl
                .ty
                .child_by_field_name("element")
                .map(|e| syntax::text(e, cx.src))
                .unwrap_or("var");
            let dims = decl
                .ty
                .child_by_field_name("dimensions")
                .map(|d| syntax::text(d, cx.src).matches('[').count())
                .unwrap_or(1);
            format!("{elem}{}", "[]".repeat(dims.saturating_sub(1)))
        }
        Shape::List => {
            if decl.ty.kind() != "generic_type" {
                return "var".into();
            }
            let args = syntax::named_children(decl.ty)
                .into_iter()
                .find(|c| c.kind() == "type_arguments");
            match args.map(syntax::named_children).as_deref() {
                Some([one]) if one.kind() != "wildcard" => syntax::text(*one, cx.src).to_string(),
                _ => "var".into(),
            }
        }
    }
}

/// `e`, `e1`, `e2`, ... whichever does not already occur as an identifier in
/// the method.
fn fresh_name(cx: &Cx<'_>) -> String {
    let taken: std::collections::HashSet<&str> = syntax::descendants(cx.method)
        .into_iter()
        .filter(|n| n.kind() == "identifier")
        .map(|n| syntax::text(n, cx.src))
        .collect();
    std::iter::once("e".to_string())
        .chain((1..).map(|i| format!("e{i}")))
        .find(|n| !taken.contains(n.as_str()))
        .expect("infinite candidates")
}
