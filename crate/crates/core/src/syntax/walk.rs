use std::collections::BTreeSet;

use rustpython_ast::{self as ast, Expr, Stmt, Visitor};

use super::lexical::is_fully_parenthesized;
use super::CallSiteInfo;

#[derive(Debug, Clone, PartialEq, Eq)]
enum Scope {
    Module,
    Class(String),
    Function,
}

/// Collects call sites, with-statements and definitions in one pass, and
/// flags the target forms that CPython's parser rejects but the grammar
/// below it accepts (assignment to literals, calls and operators, and
/// unparenthesized generator arguments next to other arguments).
pub(super) struct FactCollector<'src> {
    source: &'src str,
    line_starts: Vec<usize>,
    with_depth: usize,
    scopes: Vec<Scope>,
    pub call_sites: Vec<(usize, CallSiteInfo)>,
    pub has_with: bool,
    pub definitions: BTreeSet<String>,
    pub invalid: bool,
}

impl<'src> FactCollector<'src> {
    pub fn new(source: &'src str) -> Self {
        let line_starts = std::iter::once(0)
            .chain(source.match_indices('\n').map(|(i, _)| i + 1))
            .collect();
        Self {
            source,
            line_starts,
            with_depth: 0,
            scopes: vec![Scope::Module],
            call_sites: Vec::new(),
            has_with: false,
            definitions: BTreeSet::new(),
            invalid: false,
        }
    }

    pub fn run(&mut self, suite: Vec<Stmt>) {
        for stmt in suite {
            self.visit_stmt(stmt);
        }
    }

    fn line_of(&self, offset: usize) -> usize {
        self.line_starts.partition_point(|&s| s <= offset) - 1
    }

    fn slice(&self, range: ast::text_size::TextRange) -> &'src str {
        &self.source[range.start().to_usize()..range.end().to_usize()]
    }

    fn check_store_target(&mut self, target: &Expr) {
        match target {
            Expr::Name(_) | Expr::Attribute(_) | Expr::Subscript(_) => {}
            Expr::Starred(s) => self.check_store_target(&s.value),
            Expr::Tuple(t) => t.elts.iter().for_each(|e| self.check_store_target(e)),
            Expr::List(l) => l.elts.iter().for_each(|e| self.check_store_target(e)),
            _ => self.invalid = true,
        }
    }

    fn check_single_target(&mut self, target: &Expr) {
        if !matches!(target, Expr::Name(_) | Expr::Attribute(_) | Expr::Subscript(_)) {
            self.invalid = true;
        }
    }

    fn check_del_target(&mut self, target: &Expr) {
        match target {
            Expr::Name(_) | Expr::Attribute(_) | Expr::Subscript(_) => {}
            Expr::Tuple(t) => t.elts.iter().for_each(|e| self.check_del_target(e)),
            Expr::List(l) => l.elts.iter().for_each(|e| self.check_del_target(e)),
            _ => self.invalid = true,
        }
    }

    /// Module-level functions and classes; methods of module-level classes.
    fn record_definition(&mut self, name: &str, is_function: bool) {
        match self.scopes.as_slice() {
            [Scope::Module] => {
                self.definitions.insert(name.to_string());
            }
            [Scope::Module, Scope::Class(class)] if is_function => {
                self.definitions.insert(format!("{class}.{name}"));
            }
            _ => {}
        }
    }

    fn visit_arg_with_default(&mut self, arg: ast::ArgWithDefault) {
        if let Some(annotation) = arg.def.annotation {
            self.visit_expr(*annotation);
        }
        if let Some(default) = arg.default {
            self.visit_expr(*default);
        }
    }

    fn visit_plain_arg(&mut self, arg: ast::Arg) {
        if let Some(annotation) = arg.annotation {
            self.visit_expr(*annotation);
        }
    }

    fn enter_with(&mut self, items: Vec<ast::WithItem>, body: Vec<Stmt>) {
        self.has_with = true;
        self.with_depth += 1;
        for item in items {
            self.visit_withitem(item);
        }
        for stmt in body {
            self.visit_stmt(stmt);
        }
        self.with_depth -= 1;
    }
}

fn terminal_name(func: &Expr) -> Option<&str> {
    match func {
        Expr::Name(n) => Some(n.id.as_str()),
        Expr::Attribute(a) => Some(a.attr.as_str()),
        _ => None,
    }
}

impl Visitor for FactCollector<'_> {
    fn visit_stmt_assign(&mut self, node: ast::StmtAssign) {
        node.targets.iter().for_each(|t| self.check_store_target(t));
        self.generic_visit_stmt_assign(node)
    }

    fn visit_stmt_aug_assign(&mut self, node: ast::StmtAugAssign) {
        self.check_single_target(&node.target);
        self.generic_visit_stmt_aug_assign(node)
    }

    fn visit_stmt_ann_assign(&mut self, node: ast::StmtAnnAssign) {
        self.check_single_target(&node.target);
        self.generic_visit_stmt_ann_assign(node)
    }

    fn visit_stmt_for(&mut self, node: ast::StmtFor) {
        self.check_store_target(&node.target);
        self.generic_visit_stmt_for(node)
    }

    fn visit_stmt_async_for(&mut self, node: ast::StmtAsyncFor) {
        self.check_store_target(&node.target);
        self.generic_visit_stmt_async_for(node)
    }

    fn visit_stmt_delete(&mut self, node: ast::StmtDelete) {
        node.targets.iter().for_each(|t| self.check_del_target(t));
        self.generic_visit_stmt_delete(node)
    }

    fn visit_stmt_with(&mut self, node: ast::StmtWith) {
        self.enter_with(node.items, node.body);
    }

    fn visit_stmt_async_with(&mut self, node: ast::StmtAsyncWith) {
        self.enter_with(node.items, node.body);
    }

    fn visit_stmt_function_def(&mut self, node: ast::StmtFunctionDef) {
        self.record_definition(node.name.as_str(), true);
        self.scopes.push(Scope::Function);
        self.generic_visit_stmt_function_def(node);
        self.scopes.pop();
    }

    fn visit_stmt_async_function_def(&mut self, node: ast::StmtAsyncFunctionDef) {
        self.record_definition(node.name.as_str(), true);
        self.scopes.push(Scope::Function);
        self.generic_visit_stmt_async_function_def(node);
        self.scopes.pop();
    }

    fn visit_stmt_class_def(&mut self, node: ast::StmtClassDef) {
        self.record_definition(node.name.as_str(), false);
        self.scopes.push(Scope::Class(node.name.to_string()));
        self.generic_visit_stmt_class_def(node);
        self.scopes.pop();
    }

    fn visit_expr_call(&mut self, node: ast::ExprCall) {
        let total = node.args.len() + node.keywords.len();
        if total > 1 {
            for arg in &node.args {
                if let Expr::GeneratorExp(g) = arg {
                    if !is_fully_parenthesized(self.slice(g.range)) {
                        self.invalid = true;
                    }
                }
            }
        }
        if let Some(callee) = terminal_name(&node.func) {
            let start = node.range.start().to_usize();
            let info = CallSiteInfo {
                callee_name: callee.to_string(),
                total_arg_count: total,
                keyword_names: node
                    .keywords
                    .iter()
                    .filter_map(|k| k.arg.as_ref().map(|a| a.to_string()))
                    .collect(),
                inside_with: self.with_depth > 0,
                line_index: self.line_of(start),
            };
            self.call_sites.push((start, info));
        }
        self.generic_visit_expr_call(node)
    }

    fn visit_expr_named_expr(&mut self, node: ast::ExprNamedExpr) {
        self.check_single_target(&node.target);
        self.generic_visit_expr_named_expr(node)
    }

    fn visit_keyword(&mut self, node: ast::Keyword) {
        self.visit_expr(node.value);
    }

    fn visit_withitem(&mut self, node: ast::WithItem) {
        if let Some(vars) = &node.optional_vars {
            self.check_store_target(vars);
        }
        self.visit_expr(node.context_expr);
        if let Some(vars) = node.optional_vars {
            self.visit_expr(*vars);
        }
    }

    fn visit_comprehension(&mut self, node: ast::Comprehension) {
        self.check_store_target(&node.target);
        self.visit_expr(node.target);
        self.visit_expr(node.iter);
        for cond in node.ifs {
            self.visit_expr(cond);
        }
    }

    fn visit_arguments(&mut self, node: ast::Arguments) {
        for arg in node.posonlyargs.into_iter().chain(node.args).chain(node.kwonlyargs) {
            self.visit_arg_with_default(arg);
        }
        if let Some(arg) = node.vararg {
            self.visit_plain_arg(*arg);
        }
        if let Some(arg) = node.kwarg {
            self.visit_plain_arg(*arg);
        }
    }

    fn visit_match_case(&mut self, node: ast::MatchCase) {
        self.visit_pattern(node.pattern);
        if let Some(guard) = node.guard {
            self.visit_expr(*guard);
        }
        for stmt in node.body {
            self.visit_stmt(stmt);
        }
    }
}
