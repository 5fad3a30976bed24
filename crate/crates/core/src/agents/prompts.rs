use std::collections::BTreeMap;
use std::path::Path;

use regex::Regex;

use super::AgentRole;

/// Template file stem for the planning role when the combinations and
/// constraints split is disabled.
pub const PLANNING_UNSPLIT: &str = "planning_unsplit";

/// Template file stem for the Direct baseline, which answers the query in a
/// single call.
pub const DIRECT: &str = "direct";

const EMBEDDED: [(&str, &str); 14] = [
    ("planning", include_str!("../../prompts/planning.txt")),
    (PLANNING_UNSPLIT, include_str!("../../prompts/planning_unsplit.txt")),
    ("solution", include_str!("../../prompts/solution.txt")),
    ("opt_filter_params", include_str!("../../prompts/opt_filter_params.txt")),
    ("opt_constraints_to_combos", include_str!("../../prompts/opt_constraints_to_combos.txt")),
    ("opt_expand", include_str!("../../prompts/opt_expand.txt")),
    ("gen_combination", include_str!("../../prompts/gen_combination.txt")),
    ("gen_filter", include_str!("../../prompts/gen_filter.txt")),
    ("gen_deliver", include_str!("../../prompts/gen_deliver.txt")),
    ("reflect_combination", include_str!("../../prompts/reflect_combination.txt")),
    ("reflect_filter", include_str!("../../prompts/reflect_filter.txt")),
    ("reflect_deliver", include_str!("../../prompts/reflect_deliver.txt")),
    ("input", include_str!("../../prompts/input.txt")),
    (DIRECT, include_str!("../../prompts/direct.txt")),
];

#[derive(Debug, thiserror::Error)]
pub enum PromptError {
    #[error("template `{template}` leaves <{placeholder}> unbound")]
    Unbound { template: String, placeholder: String },
    #[error("no template named `{0}`")]
    UnknownTemplate(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// Prompt templates keyed by file stem.
///
/// A placeholder is `<name>` with a lowercase identifier; `<start_of_..>` and
/// `<end_of_..>` block tags are literal text. Substitution is a single pass,
/// so bound values may contain anything.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptSet {
    templates: BTreeMap<String, String>,
}

impl Default for PromptSet {
    fn default() -> Self {
        PromptSet {
            templates: EMBEDDED
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        }
    }
}

fn placeholder_re() -> Regex {
    Regex::new(r"<([a-z][a-z0-9_]*)>").expect("valid regex")
}

fn is_block_tag(name: &str) -> bool {
    name.starts_with("start_of_") || name.starts_with("end_of_")
}

impl PromptSet {
    /// The built-in templates, overridden by any `<stem>.txt` in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, PromptError> {
        let mut set = PromptSet::default();
        for stem in EMBEDDED.map(|(k, _)| k) {
            let path = dir.join(format!("{stem}.txt"));
            if path.is_file() {
                let text = std::fs::read_to_string(&path).map_err(|source| PromptError::Io {
                    path: path.display().to_string(),
                    source,
                })?;
                set.templates.insert(stem.to_string(), text);
            }
        }
        Ok(set)
    }

    pub fn template(&self, stem: &str) -> Result<&str, PromptError> {
        self.templates
            .get(stem)
            .map(String::as_str)
            .ok_or_else(|| PromptError::UnknownTemplate(stem.to_string()))
    }

    pub fn template_for(&self, role: AgentRole) -> Result<&str, PromptError> {
        self.template(role.name())
    }

    /// Placeholder names of a template, in first-appearance order.
    pub fn placeholders(&self, stem: &str) -> Result<Vec<String>, PromptError> {
        let mut out: Vec<String> = Vec::new();
        for m in placeholder_re().captures_iter(self.template(stem)?) {
            let name = &m[1];
            if !is_block_tag(name) && !out.iter().any(|n| n == name) {
                out.push(name.to_string());
            }
        }
        Ok(out)
    }

    /// Fills every placeholder of the template; unknown placeholders are an
    /// error, unused bindings are ignored.
    pub fn render(&self, stem: &str, bindings: &BTreeMap<&str, String>) -> Result<String, PromptError> {
        let template = self.template(stem)?;
        let mut out = String::with_capacity(template.len());
        let mut last = 0;
        for m in placeholder_re().captures_iter(template) {
            let whole = m.get(0).expect("match");
            let name = &m[1];
            if is_block_tag(name) {
                continue;
            }
            let value = bindings.get(name).ok_or_else(|| PromptError::Unbound {
                template: stem.to_string(),
                placeholder: name.to_string(),
            })?;
            out.push_str(&template[last..whole.start()]);
            out.push_str(value);
            last = whole.end();
        }
        out.push_str(&template[last..]);
        Ok(out)
    }

    pub fn stems(&self) -> impl Iterator<Item = &str> {
        self.templates.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_role_has_a_template() {
        let set = PromptSet::default();
        for role in AgentRole::ALL {
            assert!(set.template_for(role).is_ok(), "{}", role.name());
        }
        assert!(set.template(PLANNING_UNSPLIT).is_ok());
    }

    #[test]
    fn render_is_single_pass_and_strict() {
        let set = PromptSet::default();
        let b: BTreeMap<&str, String> = [
            ("example_query", "Q <example_answer>".to_string()),
            ("example_answer", "A".to_string()),
        ]
        .into();
        let out = set.render("solution", &b).unwrap();
        assert!(out.contains("Q <example_answer>"));
        assert!(out.contains("<start_of_structured_output>"));
        let missing: BTreeMap<&str, String> = [("example_query", String::new())].into();
        assert!(matches!(
            set.render("solution", &missing),
            Err(PromptError::Unbound { placeholder, .. }) if placeholder == "example_answer"
        ));
    }

    #[test]
    fn block_tags_are_not_placeholders() {
        let set = PromptSet::default();
        let names = set.placeholders("input").unwrap();
        assert!(names.contains(&"test_query".to_string()));
        assert!(!names.iter().any(|n| n.contains("start_of")));
    }
}
