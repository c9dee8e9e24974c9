//! Versioned prompt templates, shipped in `prompts/` and compiled in.
//!
//! A template file starts with a `# lark-prompt <name> v<version>` header,
//! followed by `[system]` and `[user]` sections. Placeholders are `{name}`;
//! unknown braces are left untouched so templates can show JSON examples.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::util::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemplateKind {
    Seed,
    Plasticity,
    Maturation,
    Rank,
    Judge,
}

impl TemplateKind {
    pub const ALL: [TemplateKind; 5] = [
        TemplateKind::Seed,
        TemplateKind::Plasticity,
        TemplateKind::Maturation,
        TemplateKind::Rank,
        TemplateKind::Judge,
    ];

    fn source(self) -> &'static str {
        match self {
            TemplateKind::Seed => include_str!("../../prompts/seed.txt"),
            TemplateKind::Plasticity => include_str!("../../prompts/plasticity.txt"),
            TemplateKind::Maturation => include_str!("../../prompts/maturation.txt"),
            TemplateKind::Rank => include_str!("../../prompts/rank.txt"),
            TemplateKind::Judge => include_str!("../../prompts/judge.txt"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TemplateKind::Seed => "seed",
            TemplateKind::Plasticity => "plasticity",
            TemplateKind::Maturation => "maturation",
            TemplateKind::Rank => "rank",
            TemplateKind::Judge => "judge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prompt {
    pub system: String,
    pub user: String,
}

#[derive(Debug, Clone)]
pub struct PromptTemplate {
    pub kind: TemplateKind,
    pub version: u32,
    system: &'static str,
    user: &'static str,
    hash: String,
}

impl PromptTemplate {
    pub fn load(kind: TemplateKind) -> Self {
        let src = kind.source();
        let (header, body) = src.split_once('\n').expect("template has a header line");
        let version = header
            .rsplit_once(" v")
            .and_then(|(_, v)| v.trim().parse().ok())
            .expect("template header carries a version");
        let body = body
            .strip_prefix("[system]\n")
            .expect("template starts with [system]");
        let (system, user) = body
            .split_once("\n[user]\n")
            .expect("template has a [user] section");
        PromptTemplate {
            kind,
            version,
            system: system.trim_end(),
            user: user.trim_end(),
            hash: sha256_hex(src),
        }
    }

    /// SHA-256 of the template source, stamped into traces and records.
    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn render(&self, vars: &[(&str, &str)]) -> Prompt {
        Prompt {
            system: substitute(self.system, vars),
            user: substitute(self.user, vars),
        }
    }
}

fn substitute(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (key, value) in vars {
        out = out.replace(&format!("{{{key}}}"), value);
    }
    out
}

/// Template name → version and hash, for trace headers.
pub fn template_stamps() -> BTreeMap<String, String> {
    TemplateKind::ALL
        .iter()
        .map(|&k| {
            let t = PromptTemplate::load(k);
            (format!("{}@v{}", k.name(), t.version), t.hash().to_owned())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_template_parses() {
        for kind in TemplateKind::ALL {
            let t = PromptTemplate::load(kind);
            assert_eq!(t.version, 1);
            assert_eq!(t.hash().len(), 64);
            assert!(!t.system.is_empty() && !t.user.is_empty());
        }
    }

    #[test]
    fn rendering_fills_known_placeholders_only() {
        let t = PromptTemplate::load(TemplateKind::Judge);
        let p = t.render(&[("context", "CTX"), ("objectives", "OBJ"), ("responses", "R")]);
        assert!(p.user.contains("CTX"));
        assert!(!p.user.contains("{context}"));
        assert!(p.user.contains("{\"scores\""));
    }

    #[test]
    fn plasticity_prompt_carries_the_four_constraints() {
        let p = PromptTemplate::load(TemplateKind::Plasticity).render(&[]);
        for needle in [
            "fits this context poorly",
            "Change only what is needed",
            "Keep its overall shape",
            "Keep edits small",
        ] {
            assert!(p.user.contains(needle), "{needle}");
        }
    }

    #[test]
    fn maturation_prompt_carries_the_four_constraints() {
        let p = PromptTemplate::load(TemplateKind::Maturation).render(&[]);
        for needle in [
            "one stakeholder group or one objective",
            "serves that group or objective first",
            "concrete measures that the parent does not contain",
            "workable under the scenario's constraints",
        ] {
            assert!(p.user.contains(needle), "{needle}");
        }
    }

    #[test]
    fn stamps_cover_all_templates() {
        let s = template_stamps();
        assert_eq!(s.len(), 5);
        assert!(s.contains_key("judge@v1"));
    }
}
