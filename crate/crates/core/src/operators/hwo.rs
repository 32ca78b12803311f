//! HWO: inject a busy-wait delay after calls into third-party or
//! heavy-weight APIs.

use tree_sitter::Node;

use super::{declared_type, Cx, MutationOperator, TextEdit};
use crate::source_model::Span;
use crate::syntax;

pub(super) struct Hwo;

/// Class name of the delay helper injected next to the mutated file.
pub const HELPER_CLASS: &str = "PerfMutDelay";

/// Java source of the delay helper, declared in `package` when given.
pub fn helper_source(package: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(pkg) = package {
        out.push_str(&format!("package {pkg};\n\n"));
    }
    out.push_str(&format!(
        "/* Injected by perfmut for HWO mutants. */\n\
         final class {HELPER_CLASS} {{\n\
         \x20   private {HELPER_CLASS}() {{}}\n\
         \n\
         \x20   static void sleepMicros(long micros) {{\n\
         \x20       long until = System.nanoTime() + micros * 1000L;\n\
         \x20       while (System.nanoTime() < until) {{\n\
         \x20           Thread.onSpinWait();\n\
         \x20       }}\n\
         \x20   }}\n\
         }}\n"
    ));
    out
}

const JAVA_LANG: &[&str] = &[
    "Boolean",
    "Byte",
    "Character",
    "Class",
    "ClassLoader",
    "Double",
    "Float",
    "Integer",
    "Long",
    "Math",
    "Object",
    "Process",
    "ProcessBuilder",
    "Runtime",
    "Short",
    "StrictMath",
    "String",
    "StringBuffer",
    "StringBuilder",
    "System",
    "Thread",
    "ThreadLocal",
];

impl MutationOperator for Hwo {
    fn targets(&self, kind: &str) -> bool {
        kind == "expression_statement"
    }

    fn applies(&self, cx: &Cx<'_>, node: Node<'_>) -> bool {
        let Some(call) = node
            .named_child(0)
            .filter(|c| c.kind() == "method_invocation")
        else {
            return false;
        };
        let method = call
            .child_by_field_name("name")
            .map(|n| syntax::text(n, cx.src))
            .unwrap_or_default();
        let Some((pkg, ty)) = receiver_type(cx, call) else {
            return false;
        };
        let third_party = pkg.as_deref().is_some_and(|p| !is_own_package(cx, p));
        let qualified = pkg.as_ref().map(|p| format!("{p}.{ty}.{method}"));
        let simple = format!("{ty}.{method}");
        let heavy = cx.cfg.heavyweight_patterns.iter().any(|pat| {
            qualified.as_deref().is_some_and(|q| glob_match(pat, q)) || glob_match(pat, &simple)
        });
        third_party || heavy
    }

    fn variants(&self, cx: &Cx<'_>, node: Node<'_>) -> Vec<Vec<TextEdit>> {
        let delay = format!(
            "/*perfmut*/ {HELPER_CLASS}.sleepMicros({});",
            cx.cfg.hwo_delay_micros
        );
        let in_block = node.parent().is_some_and(|p| {
            matches!(
                p.kind(),
                "block" | "constructor_body" | "switch_block_statement_group"
            )
        });
        let edit = if in_block {
            TextEdit::insert(node.end_byte(), format!(" {delay}"))
        } else {
            TextEdit::replace(
                Span::of(node),
                format!("{{ {} {delay} }}", syntax::text(node, cx.src)),
            )
        };
        vec![vec![edit]]
    }
}

fn is_own_package(cx: &Cx<'_>, pkg: &str) -> bool {
    let prefix = cx
        .cfg
        .project_package_prefix
        .as_deref()
        .or(cx.unit.package())
        .unwrap_or("");
    if prefix.is_empty() {
        return pkg.is_empty();
    }
    pkg == prefix || pkg.starts_with(&format!("{prefix}."))
}

/// `(package, simple type)` of the receiver of `call`. The package is `None`
/// when it cannot be resolved from the file alone. Returns `None` for calls
/// on `this`/`super`, unqualified calls and receivers whose type is unknown.
fn receiver_type(cx: &Cx<'_>, call: Node<'_>) -> Option<(Option<String>, String)> {
    let object = call.child_by_field_name("object")?;

    // fully qualified static call: java.nio.file.Files.write(..)
    let dotted = syntax::text(object, cx.src);
    if object.kind() == "field_access"
        && dotted
            .split('.')
            .all(|s| !s.is_empty() && s.chars().all(|c| c.is_alphanumeric() || c == '_'))
    {
        let segs: Vec<&str> = dotted.split('.').collect();
        if let Some(i) = segs.iter().position(|s| s.starts_with(char::is_uppercase)) {
            if i > 0 && declared_type(cx, segs[0], call.start_byte()).is_none() {
                return Some((Some(segs[..i].join(".")), segs[i].to_string()));
            }
        }
    }

    let mut root = object;
    loop {
        match root.kind() {
            // an unqualified call heading a chain has no object
            "field_access" | "method_invocation" => root = root.child_by_field_name("object")?,
            "parenthesized_expression" => root = syntax::unparen(root),
            _ => break,
        }
    }
    let ty = match root.kind() {
        "identifier" => {
            let name = syntax::text(root, cx.src);
            match declared_type(cx, name, call.start_byte()) {
                Some(d) => syntax::erased_type(d.ty, cx.src),
                None if name.starts_with(char::is_uppercase) => name.to_string(),
                None => return None,
            }
        }
        "object_creation_expression" => {
            syntax::erased_type(root.child_by_field_name("type")?, cx.src)
        }
        _ => return None,
    };
    let ty = ty.trim_end_matches("[]").to_string();
    Some((resolve_package(cx, &ty), ty))
}

fn resolve_package(cx: &Cx<'_>, ty: &str) -> Option<String> {
    let root = cx.unit.tree().root_node();
    let declared_here = syntax::descendants(root).into_iter().any(|n| {
        syntax::is_type_declaration(n.kind())
            && n.child_by_field_name("name")
                .map(|x| syntax::text(x, cx.src))
                == Some(ty)
    });
    if declared_here {
        return Some(cx.unit.package().unwrap_or("").to_string());
    }
    for import in syntax::named_children(root)
        .into_iter()
        .filter(|n| n.kind() == "import_declaration")
    {
        let is_static = syntax::children(import)
            .iter()
            .any(|c| c.kind() == "static");
        let wildcard = syntax::named_children(import)
            .iter()
            .any(|c| c.kind() == "asterisk");
        if is_static || wildcard {
            continue;
        }
        let path: String = syntax::named_children(import)
            .into_iter()
            .find(|c| matches!(c.kind(), "scoped_identifier" | "identifier"))
            .map(|c| syntax::text(c, cx.src).split_whitespace().collect())
            .unwrap_or_default();
        if let Some((pkg, last)) = path.rsplit_once('.') {
            if last == ty {
                return Some(pkg.to_string());
            }
        }
    }
    if JAVA_LANG.contains(&ty) {
        return Some("java.lang".to_string());
    }
    None
}

/// `*` matches any run of characters; everything else is literal.
pub(crate) fn glob_match(pattern: &str, text: &str) -> bool {
    let parts: Vec<&str> = pattern.split('*').collect();
    if parts.len() == 1 {
        return pattern == text;
    }
    let (first, last) = (parts[0], parts[parts.len() - 1]);
    if !text.starts_with(first) || text.len() < first.len() + last.len() || !text.ends_with(last) {
        return false;
    }
    let mut rest = &text[first.len()..text.len() - last.len()];
    for mid in &parts[1..parts.len() - 1] {
        match rest.find(mid) {
            Some(i) => rest = &rest[i + mid.len()..],
            None => return false,
        }
    }
    true
}
