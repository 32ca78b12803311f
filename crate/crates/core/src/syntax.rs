//! Small helpers over tree-sitter nodes shared by site discovery and the
//! operators.

use tree_sitter::Node;

pub(crate) fn text<'a>(node: Node<'_>, src: &'a str) -> &'a str {
    &src[node.byte_range()]
}

/// Pre-order list of `node` and all of its descendants.
pub(crate) fn descendants(node: Node<'_>) -> Vec<Node<'_>> {
    let mut out = Vec::new();
    let mut cursor = node.walk();
    'outer: loop {
        out.push(cursor.node());
        if cursor.goto_first_child() {
            continue;
        }
        loop {
            if cursor.node() == node {
                break 'outer;
            }
            if cursor.goto_next_sibling() {
                break;
            }
            if !cursor.goto_parent() {
                break 'outer;
            }
        }
    }
    out
}

pub(crate) fn named_children(node: Node<'_>) -> Vec<Node<'_>> {
    let mut cursor = node.walk();
    node.named_children(&mut cursor).collect()
}

pub(crate) fn children(node: Node<'_>) -> Vec<Node<'_>> {
    let mut cursor = node.walk();
    node.children(&mut cursor).collect()
}

/// Children of `node` attached under field `field`.
pub(crate) fn field_children<'t>(node: Node<'t>, field: &str) -> Vec<Node<'t>> {
    let mut cursor = node.walk();
    node.children_by_field_name(field, &mut cursor).collect()
}

/// Strips any number of enclosing parentheses.
pub(crate) fn unparen(mut node: Node<'_>) -> Node<'_> {
    while node.kind() == "parenthesized_expression" {
        match node.named_child(0) {
            Some(inner) => node = inner,
            None => break,
        }
    }
    node
}

/// Operator token of a `binary_expression`, `assignment_expression` or
/// `unary_expression`.
pub(crate) fn operator<'a>(node: Node<'_>, src: &'a str) -> Option<&'a str> {
    node.child_by_field_name("operator").map(|op| text(op, src))
}

/// First anonymous child token with the given text.
pub(crate) fn token<'t>(node: Node<'t>, tok: &str) -> Option<Node<'t>> {
    children(node)
        .into_iter()
        .find(|c| !c.is_named() && c.kind() == tok)
}

pub(crate) fn is_method_like(kind: &str) -> bool {
    matches!(
        kind,
        "method_declaration" | "constructor_declaration" | "compact_constructor_declaration"
    )
}

pub(crate) fn is_type_declaration(kind: &str) -> bool {
    matches!(
        kind,
        "class_declaration"
            | "interface_declaration"
            | "enum_declaration"
            | "record_declaration"
            | "annotation_type_declaration"
    )
}

pub(crate) fn is_type_body(kind: &str) -> bool {
    matches!(
        kind,
        "class_body"
            | "interface_body"
            | "enum_body"
            | "enum_body_declarations"
            | "annotation_type_body"
    )
}

pub(crate) fn is_loop(kind: &str) -> bool {
    matches!(
        kind,
        "for_statement" | "enhanced_for_statement" | "while_statement" | "do_statement"
    )
}

/// True when `node` contains an assignment, increment or decrement anywhere.
pub(crate) fn has_assignment(node: Node<'_>) -> bool {
    descendants(node)
        .into_iter()
        .any(|n| matches!(n.kind(), "assignment_expression" | "update_expression"))
}

/// Identifier nodes named `name` below `scope` that denote a variable
/// reference, as opposed to member names, method names, labels or
/// declarations.
pub(crate) fn variable_refs<'t>(scope: Node<'t>, name: &str, src: &str) -> Vec<Node<'t>> {
    descendants(scope)
        .into_iter()
        .filter(|n| n.kind() == "identifier" && text(*n, src) == name && is_variable_ref(*n))
        .collect()
}

fn is_variable_ref(ident: Node<'_>) -> bool {
    let Some(parent) = ident.parent() else {
        return false;
    };
    let field = field_of(ident);
    match parent.kind() {
        "field_access" => field.as_deref() != Some("field"),
        "method_invocation" => field.as_deref() != Some("name"),
        "variable_declarator" | "formal_parameter" | "catch_formal_parameter" => {
            field.as_deref() != Some("name")
        }
        "enhanced_for_statement" => field.as_deref() != Some("name"),
        "labeled_statement" | "break_statement" | "continue_statement" => false,
        "method_declaration" | "constructor_declaration" | "class_declaration" => false,
        "lambda_expression" => field.as_deref() != Some("parameters"),
        "inferred_parameters" | "method_reference" | "scoped_identifier" => false,
        _ => true,
    }
}

/// Field name under which `node` hangs off its parent.
pub(crate) fn field_of(node: Node<'_>) -> Option<String> {
    let parent = node.parent()?;
    let mut cursor = parent.walk();
    for (i, child) in parent.children(&mut cursor).enumerate() {
        if child == node {
            return parent.field_name_for_child(i as u32).map(str::to_owned);
        }
    }
    None
}

/// True when `ident` is written to: the left side of an assignment or the
/// operand of `++`/`--`.
pub(crate) fn is_write(ident: Node<'_>) -> bool {
    let mut node = ident;
    while let Some(parent) = node.parent() {
        match parent.kind() {
            "parenthesized_expression" => node = parent,
            "assignment_expression" => {
                return parent.child_by_field_name("left") == Some(node);
            }
            "update_expression" => return true,
            _ => return false,
        }
    }
    false
}

/// Erased simple name of a type node: generics dropped, qualified names
/// reduced to their last segment, array dimensions kept.
pub(crate) fn erased_type(node: Node<'_>, src: &str) -> String {
    match node.kind() {
        "generic_type" => node
            .named_child(0)
            .map(|n| erased_type(n, src))
            .unwrap_or_default(),
        "scoped_type_identifier" => named_children(node)
            .last()
            .map(|n| erased_type(*n, src))
            .unwrap_or_default(),
        "array_type" => {
            let elem = node
                .child_by_field_name("element")
                .map(|n| erased_type(n, src))
                .unwrap_or_default();
            let dims = node
                .child_by_field_name("dimensions")
                .map(|d| text(d, src).matches('[').count())
                .unwrap_or(1);
            format!("{elem}{}", "[]".repeat(dims))
        }
        "annotated_type" => named_children(node)
            .last()
            .map(|n| erased_type(*n, src))
            .unwrap_or_default(),
        _ => text(node, src).to_string(),
    }
}

pub(crate) const PRIMITIVES: [&str; 8] = [
    "byte", "short", "int", "long", "float", "double", "boolean", "char",
];

pub(crate) fn wrapper_of(primitive: &str) -> Option<&'static str> {
    Some(match primitive {
        "byte" => "Byte",
        "short" => "Short",
        "int" => "Integer",
        "long" => "Long",
        "float" => "Float",
        "double" => "Double",
        "boolean" => "Boolean",
        "char" => "Character",
        _ => return None,
    })
}
