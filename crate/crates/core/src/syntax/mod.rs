//! Structural facts about Python source text: validity, identifiers, call
//! sites, with-statements and API definitions.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rustpython_parser::{ast, Parse};
use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};

pub mod lexical;
mod walk;

pub use lexical::{identifier_spans, identifiers, IdentSpan};

/// Syntactic facts about one function call.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallSiteInfo {
    /// Terminal identifier of the called expression: `dump` for `json.dump`.
    pub callee_name: String,
    /// Positional, keyword, `*` and `**` arguments, one each.
    pub total_arg_count: usize,
    pub keyword_names: BTreeSet<String>,
    /// The call is a with context expression or sits lexically in a with body.
    pub inside_with: bool,
    /// 0-based line of the call's first character.
    pub line_index: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeFacts {
    pub is_valid: bool,
    pub identifiers: Vec<String>,
    pub call_sites: Vec<CallSiteInfo>,
    pub has_with: bool,
    /// Module-level functions and classes, plus `Class.method` for methods
    /// of module-level classes. Includes underscore-prefixed names.
    pub definitions: BTreeSet<String>,
}

impl CodeFacts {
    /// Call sites whose callee is `name`.
    pub fn calls_to<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a CallSiteInfo> + 'a {
        self.call_sites.iter().filter(move |c| c.callee_name == name)
    }
}

fn parse_suite(code: &str) -> Option<Vec<ast::Stmt>> {
    ast::Suite::parse(code, "<input>").ok()
}

/// True iff `code` parses as a complete Python module.
pub fn check_syntax(code: &str) -> bool {
    extract_facts(code).is_valid
}

pub fn extract_facts(code: &str) -> CodeFacts {
    let identifiers = lexical::identifiers(code)
        .into_iter()
        .map(str::to_string)
        .collect();
    let Some(suite) = parse_suite(code) else {
        return CodeFacts {
            is_valid: false,
            identifiers,
            ..CodeFacts::default()
        };
    };
    let mut collector = walk::FactCollector::new(code);
    collector.run(suite);
    if collector.invalid {
        return CodeFacts {
            is_valid: false,
            identifiers,
            ..CodeFacts::default()
        };
    }
    let mut calls = collector.call_sites;
    calls.sort_by_key(|(start, _)| *start);
    CodeFacts {
        is_valid: true,
        identifiers,
        call_sites: calls.into_iter().map(|(_, c)| c).collect(),
        has_with: collector.has_with,
        definitions: collector.definitions,
    }
}

/// Whole-identifier occurrence of `token` in the lexical identifier stream.
pub fn contains_core_token(code: &str, token: &str) -> bool {
    lexical::identifier_spans(code).iter().any(|s| s.text == token)
}

/// Qualified API names defined under a source tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiDefinitions {
    pub names: BTreeSet<String>,
    /// `.py` files that parsed.
    pub parsed_files: usize,
    /// `.py` files that were unreadable or failed to parse.
    pub skipped_files: usize,
}

/// Dotted module path of a `.py` file relative to the tree root;
/// `pkg/__init__.py` names the package `pkg`.
fn module_path(relative: &Path) -> Vec<String> {
    let mut parts: Vec<String> = relative
        .with_extension("")
        .components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect();
    if parts.last().is_some_and(|p| p == "__init__") {
        parts.pop();
    }
    parts
}

/// Walks `root` for `.py` files and collects `package.module.func`,
/// `package.module.Class` and `package.module.Class.method` names. Names
/// whose last segment starts with `_` are excluded.
pub fn extract_api_definitions(root: &Path) -> Result<ApiDefinitions> {
    let meta = std::fs::metadata(root).map_err(|e| Error::io(root, e))?;
    if !meta.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotADirectory, "not a directory"),
        ));
    }
    let mut files: Vec<PathBuf> = Vec::new();
    for entry in WalkDir::new(root).sort_by_file_name() {
        let entry = entry.map_err(|e| {
            let path = e.path().unwrap_or(root).to_path_buf();
            Error::io(path, e.into())
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "py") {
            files.push(entry.into_path());
        }
    }

    let mut out = ApiDefinitions::default();
    for path in files {
        let Ok(source) = std::fs::read_to_string(&path) else {
            log::debug!("skipping unreadable file {}", path.display());
            out.skipped_files += 1;
            continue;
        };
        let facts = extract_facts(&source);
        if !facts.is_valid {
            log::debug!("skipping unparseable file {}", path.display());
            out.skipped_files += 1;
            continue;
        }
        out.parsed_files += 1;
        let relative = path.strip_prefix(root).unwrap_or(&path);
        let module = module_path(relative);
        for def in facts.definitions {
            if def.rsplit('.').next().is_some_and(|t| t.starts_with('_')) {
                continue;
            }
            let mut segments = module.clone();
            segments.push(def);
            out.names.insert(segments.join("."));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_examples() {
        assert!(check_syntax("x = 1\n"));
        assert!(!check_syntax("def f(:"));
        assert!(check_syntax("with open(p) as f:\n    f.read()\n"));
        assert!(check_syntax(""));
    }

    #[test]
    fn rejects_forms_cpython_rejects() {
        for bad in [
            "1 = x",
            "f() = 3",
            "del f()",
            "(a, b) += 1",
            "a + 1 = 2",
            "for f() in y: pass",
            "with a as f(): pass",
            "[a, 1] = x",
            "f(x for x in y, 1)",
            "del (a, 1)",
            "None = 1",
            "[x for f() in y]",
            "print 'x'",
        ] {
            assert!(!check_syntax(bad), "{bad:?} should be invalid");
        }
        for good in [
            "*a, b = c",
            "f(x for x in y)",
            "f((x for x in y), 1)",
            "x[1:2] = y",
            "a.b += 1",
            "(x): int = 1",
            "match x:\n    case [1, y]:\n        pass\n",
            "return 1",
            "async def f():\n    async with a as b:\n        await b\n",
        ] {
            assert!(check_syntax(good), "{good:?} should be valid");
        }
    }

    #[test]
    fn json_dump_call_site() {
        let facts = extract_facts("json.dump(obj, f, indent=2)");
        assert!(facts.is_valid);
        assert_eq!(facts.call_sites.len(), 1);
        let call = &facts.call_sites[0];
        assert_eq!(call.callee_name, "dump");
        assert_eq!(call.total_arg_count, 3);
        assert_eq!(call.keyword_names, BTreeSet::from(["indent".to_string()]));
        assert!(!call.inside_with);
        assert_eq!(call.line_index, 0);
    }

    #[test]
    fn with_context_expression_is_inside_with() {
        let facts = extract_facts("with open(p) as f:\n    pass\n");
        assert!(facts.has_with);
        assert_eq!(facts.call_sites.len(), 1);
        assert_eq!(facts.call_sites[0].callee_name, "open");
        assert!(facts.call_sites[0].inside_with);
    }

    #[test]
    fn empty_module() {
        let facts = extract_facts("");
        assert!(facts.is_valid);
        assert!(facts.identifiers.is_empty());
        assert!(facts.call_sites.is_empty());
        assert!(!facts.has_with);
        assert!(facts.definitions.is_empty());
    }

    #[test]
    fn invalid_code_keeps_lexical_identifiers() {
        let facts = extract_facts("df.explode('A'");
        assert!(!facts.is_valid);
        assert_eq!(facts.identifiers, vec!["df", "explode"]);
        assert!(facts.call_sites.is_empty());
    }

    #[test]
    fn star_arguments_count_once() {
        let facts = extract_facts("f(a, *b, c=1, **d)");
        let call = &facts.call_sites[0];
        assert_eq!(call.total_arg_count, 4);
        assert_eq!(call.keyword_names.len(), 1);
    }

    #[test]
    fn calls_in_nested_positions_are_found() {
        let code = "\
def g(x=default()):
    with lock:
        return [h(i) for i in items(k=1)]
y = lambda: z(1)
";
        let facts = extract_facts(code);
        let names: Vec<_> = facts.call_sites.iter().map(|c| c.callee_name.as_str()).collect();
        assert_eq!(names, vec!["default", "h", "items", "z"]);
        let inside: Vec<_> = facts.call_sites.iter().map(|c| c.inside_with).collect();
        assert_eq!(inside, vec![false, true, true, false]);
        assert_eq!(facts.call_sites[3].line_index, 3);
    }

    #[test]
    fn definitions() {
        let code = "\
def f(): pass
class C:
    def m(self): pass
    class Inner:
        def deep(self): pass
    def _p(self): pass
try:
    def g(): pass
except ImportError:
    pass
def outer():
    def inner(): pass
";
        let facts = extract_facts(code);
        let defs: Vec<_> = facts.definitions.iter().map(String::as_str).collect();
        assert_eq!(defs, vec!["C", "C._p", "C.m", "f", "g", "outer"]);
    }

    #[test]
    fn core_token_is_identifier_bounded() {
        assert!(contains_core_token("df.explode('A')", "explode"));
        assert!(!contains_core_token("exploded = transform(x)", "explode"));
        assert!(contains_core_token("explode(explode(x))", "explode"));
        assert!(!contains_core_token("s = 'explode'", "explode"));
        assert!(contains_core_token("explode(", "explode"));
    }

    fn write(root: &Path, rel: &str, body: &str) {
        let path = root.join(rel);
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(path, body).unwrap();
    }

    #[test]
    fn api_definitions_from_tree() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "pkg/a.py", "def f(): ...\n");
        let defs = extract_api_definitions(dir.path()).unwrap();
        assert_eq!(defs.names, BTreeSet::from(["pkg.a.f".to_string()]));

        write(dir.path(), "pkg/a.py", "def f(): ...\nclass C:\n  def m(self): ...\n");
        write(dir.path(), "pkg/b.py", "def _helper(): ...\n");
        write(dir.path(), "pkg/__init__.py", "def top(): ...\n");
        write(dir.path(), "pkg/broken.py", "def (:\n");
        write(dir.path(), "pkg/notes.txt", "def g(): ...\n");
        let defs = extract_api_definitions(dir.path()).unwrap();
        let names: Vec<_> = defs.names.iter().map(String::as_str).collect();
        assert_eq!(names, vec!["pkg.a.C", "pkg.a.C.m", "pkg.a.f", "pkg.top"]);
        assert_eq!(defs.skipped_files, 1);
        assert_eq!(defs.parsed_files, 3);
    }

    #[test]
    fn api_definitions_missing_root() {
        let err = extract_api_definitions(Path::new("/nonexistent/tree")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }
}
