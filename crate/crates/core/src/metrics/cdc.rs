//! Critical Diff Check: five static rules comparing generated code with
//! the reference around the core token.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::syntax::{contains_core_token, extract_facts, CodeFacts};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleOutcome {
    Pass,
    Fail,
    NotApplicable,
}

impl RuleOutcome {
    fn from_bool(ok: bool) -> Self {
        if ok {
            RuleOutcome::Pass
        } else {
            RuleOutcome::Fail
        }
    }

    pub fn is_fail(self) -> bool {
        self == RuleOutcome::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CdcVerdict {
    pub rule1_core_token: RuleOutcome,
    pub rule2_valid: RuleOutcome,
    pub rule3_arg_count: RuleOutcome,
    pub rule4_with: RuleOutcome,
    pub rule5_keywords: RuleOutcome,
    pub overall: bool,
}

impl CdcVerdict {
    pub fn rules(&self) -> [RuleOutcome; 5] {
        [
            self.rule1_core_token,
            self.rule2_valid,
            self.rule3_arg_count,
            self.rule4_with,
            self.rule5_keywords,
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CdcOptions {
    /// Rule 4 compares with-enclosure of core-token calls instead of the
    /// presence of any with-statement in the snippet.
    pub scoped_with: bool,
}

/// Checks `generated` against a syntactically valid `reference`.
pub fn cdc_check(generated: &str, reference: &str, core_token: &str) -> Result<CdcVerdict> {
    cdc_check_with(generated, reference, core_token, CdcOptions::default())
}

pub fn cdc_check_with(
    generated: &str,
    reference: &str,
    core_token: &str,
    options: CdcOptions,
) -> Result<CdcVerdict> {
    cdc_check_in_context(generated, generated, reference, core_token, options)
}

/// Rule 1 is judged on `completion` alone; rules 2 to 5 compare the
/// completed program with the reference program. Used when the masked
/// span is a fragment that only parses inside its surrounding code.
pub fn cdc_check_in_context(
    completion: &str,
    generated_program: &str,
    reference_program: &str,
    core_token: &str,
    options: CdcOptions,
) -> Result<CdcVerdict> {
    let reference = extract_facts(reference_program);
    if !reference.is_valid {
        return Err(Error::InvalidReference);
    }
    let generated = extract_facts(generated_program);
    Ok(evaluate(
        contains_core_token(completion, core_token),
        &generated,
        &reference,
        core_token,
        options,
    ))
}

fn evaluate(
    has_core_token: bool,
    generated: &CodeFacts,
    reference: &CodeFacts,
    token: &str,
    options: CdcOptions,
) -> CdcVerdict {
    let rule1 = RuleOutcome::from_bool(has_core_token);
    let rule2 = RuleOutcome::from_bool(generated.is_valid);

    let ref_counts: BTreeSet<usize> = reference.calls_to(token).map(|c| c.total_arg_count).collect();
    let ref_keywords: BTreeSet<&str> = reference
        .calls_to(token)
        .flat_map(|c| c.keyword_names.iter().map(String::as_str))
        .collect();
    let with_applicable = if options.scoped_with {
        reference.calls_to(token).any(|c| c.inside_with)
    } else {
        reference.has_with
    };

    // An unparseable generation fails every structural rule the reference
    // makes applicable.
    let structural = |applicable: bool, check: &dyn Fn() -> bool| {
        if !applicable {
            RuleOutcome::NotApplicable
        } else if !generated.is_valid {
            RuleOutcome::Fail
        } else {
            RuleOutcome::from_bool(check())
        }
    };

    let rule3 = structural(!ref_counts.is_empty(), &|| {
        generated
            .calls_to(token)
            .any(|c| ref_counts.contains(&c.total_arg_count))
    });
    let rule4 = structural(with_applicable, &|| {
        if options.scoped_with {
            generated.calls_to(token).any(|c| c.inside_with)
        } else {
            generated.has_with
        }
    });
    let rule5 = structural(!ref_keywords.is_empty(), &|| {
        generated.calls_to(token).any(|c| {
            ref_keywords
                .iter()
                .all(|k| c.keyword_names.contains(*k))
        })
    });

    let overall = ![rule1, rule2, rule3, rule4, rule5].iter().any(|r| r.is_fail());
    CdcVerdict {
        rule1_core_token: rule1,
        rule2_valid: rule2,
        rule3_arg_count: rule3,
        rule4_with: rule4,
        rule5_keywords: rule5,
        overall,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use RuleOutcome::*;

    #[test]
    fn identical_code_passes_everything() {
        let code = "with open(p) as f:\n    json.dump(obj, f, indent=2)\n";
        let v = cdc_check(code, code, "dump").unwrap();
        assert_eq!(v.rules(), [Pass, Pass, Pass, Pass, Pass]);
        assert!(v.overall);
    }

    #[test]
    fn missing_argument_and_keyword() {
        let v = cdc_check("json.dump(obj, f)", "json.dump(obj, f, indent=2)", "dump").unwrap();
        assert_eq!(v.rule1_core_token, Pass);
        assert_eq!(v.rule2_valid, Pass);
        assert_eq!(v.rule3_arg_count, Fail);
        assert_eq!(v.rule4_with, NotApplicable);
        assert_eq!(v.rule5_keywords, Fail);
        assert!(!v.overall);
    }

    #[test]
    fn missing_with_statement() {
        let v = cdc_check(
            "f = open(p)\nf.read()\n",
            "with open(p) as f:\n    f.read()\n",
            "open",
        )
        .unwrap();
        assert_eq!(v.rule4_with, Fail);
        assert_eq!(v.rule3_arg_count, Pass);
        assert!(!v.overall);
    }

    #[test]
    fn invalid_generation_fails_applicable_structural_rules() {
        let v = cdc_check("json.dump(obj, f", "json.dump(obj, f, indent=2)", "dump").unwrap();
        assert_eq!(v.rules(), [Pass, Fail, Fail, NotApplicable, Fail]);
        let v = cdc_check("x = (to_numpy", "to_numpy", "to_numpy").unwrap();
        assert_eq!(v.rules(), [Pass, Fail, NotApplicable, NotApplicable, NotApplicable]);
        assert!(!v.overall);
    }

    #[test]
    fn invalid_reference_is_an_error() {
        assert!(matches!(cdc_check("x", "def (:", "x"), Err(Error::InvalidReference)));
    }

    #[test]
    fn scoped_with_requires_enclosed_call() {
        let reference = "with open(p) as f:\n    data = json.load(f)\n";
        let generated = "with lock:\n    pass\ndata = json.load(open(p))\n";
        let literal = cdc_check(generated, reference, "load").unwrap();
        assert_eq!(literal.rule4_with, Pass);
        let scoped = cdc_check_with(generated, reference, "load", CdcOptions { scoped_with: true }).unwrap();
        assert_eq!(scoped.rule4_with, Fail);
    }

    #[test]
    fn context_mode_judges_rule1_on_completion() {
        let reference_program = "x = df.to_numpy()\ny = df.to_numpy()\n";
        let generated_program = "x = df.values\ny = df.to_numpy()\n";
        let v = cdc_check_in_context("values", generated_program, reference_program, "to_numpy", CdcOptions::default())
            .unwrap();
        assert_eq!(v.rule1_core_token, Fail);
        assert_eq!(v.rule3_arg_count, Pass);
        assert!(!v.overall);
    }
}
