//! Prompt templates with a single color-label slot.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::palette::{ColorTerm, Palette};

/// Slot marker in template text.
pub const SLOT: &str = "{}";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub text: String,
    /// Experiments (1–5) the template is used in; empty for custom templates.
    pub experiments: Vec<u8>,
}

impl PromptTemplate {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        experiments: Vec<u8>,
    ) -> Result<Self> {
        let text = text.into();
        let slots = text.matches(SLOT).count();
        if slots != 1 {
            return Err(Error::Prompt(format!(
                "template {text:?} has {slots} slots, expected exactly one `{SLOT}`"
            )));
        }
        Ok(PromptTemplate {
            id: id.into(),
            text,
            experiments,
        })
    }

    /// Replaces the slot with the label's palette spelling.
    pub fn instantiate(&self, label: ColorTerm, palette: &Palette) -> String {
        self.text.replacen(SLOT, palette.label(label), 1)
    }

    /// Like [`instantiate`](Self::instantiate) but for a free-form label,
    /// which must name a vocabulary term.
    pub fn instantiate_label(&self, label: &str, palette: &Palette) -> Result<String> {
        let term = palette
            .term_for_label(label)
            .ok_or_else(|| Error::Prompt(format!("unknown color label {label:?}")))?;
        Ok(self.instantiate(term, palette))
    }

    /// The 11 prompts of this template in vocabulary order.
    pub fn prompts(&self, palette: &Palette) -> Vec<String> {
        ColorTerm::ALL
            .iter()
            .map(|&t| self.instantiate(t, palette))
            .collect()
    }
}

/// The six built-in templates.
pub fn builtin_templates() -> Vec<PromptTemplate> {
    let t = |id: &str, text: &str, exps: &[u8]| PromptTemplate {
        id: id.to_string(),
        text: text.to_string(),
        experiments: exps.to_vec(),
    };
    vec![
        t("label", "{}", &[1, 3]),
        t("object-color", "The color of the object is {}", &[2]),
        t(
            "background-color",
            "The color of the background is {}",
            &[2, 3],
        ),
        t(
            "written-in-font",
            "The word is written in {} font",
            &[3, 4, 5],
        ),
        t("text-says", "The text says {}", &[3]),
        t(
            "favorite-word",
            "My favorite word, written in the color {}",
            &[3],
        ),
    ]
}

/// Parses a template file: one template per line, blank lines and `#`
/// comments skipped. Ids are `custom-<line number>`.
pub fn parse_template_file(text: &str) -> Result<Vec<PromptTemplate>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.trim_start().starts_with('#') {
            continue;
        }
        out.push(
            PromptTemplate::new(format!("custom-{}", i + 1), line.trim(), Vec::new())
                .map_err(|e| Error::Prompt(format!("line {}: {e}", i + 1)))?,
        );
    }
    if out.is_empty() {
        return Err(Error::Prompt("template file contains no templates".into()));
    }
    Ok(out)
}

pub fn load_template_file(path: &Path) -> Result<Vec<PromptTemplate>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_template_file(&text)
}

/// Looks a template up by id among `templates`.
pub fn find_template<'a>(templates: &'a [PromptTemplate], id: &str) -> Result<&'a PromptTemplate> {
    templates.iter().find(|t| t.id == id).ok_or_else(|| {
        let ids: Vec<&str> = templates.iter().map(|t| t.id.as_str()).collect();
        Error::Prompt(format!(
            "unknown template id {id:?}; known: {}",
            ids.join(", ")
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_contain_the_probe_sentences() {
        let ts = builtin_templates();
        assert_eq!(ts.len(), 6);
        let texts: Vec<&str> = ts.iter().map(|t| t.text.as_str()).collect();
        assert!(texts.contains(&"The color of the object is {}"));
        assert!(texts.contains(&"The word is written in {} font"));
        assert!(texts.contains(&"The text says {}"));
        assert!(texts.contains(&"{}"));
        let mut ids: Vec<&str> = ts.iter().map(|t| t.id.as_str()).collect();
        ids.dedup();
        assert_eq!(ids.len(), 6);
        for t in &ts {
            PromptTemplate::new(&t.id, &t.text, t.experiments.clone()).unwrap();
        }
    }

    #[test]
    fn instantiate_examples() {
        let p = Palette::default();
        let ts = builtin_templates();
        assert_eq!(
            find_template(&ts, "label")
                .unwrap()
                .instantiate(ColorTerm::Blue, &p),
            "blue"
        );
        assert_eq!(
            find_template(&ts, "text-says")
                .unwrap()
                .instantiate(ColorTerm::Gray, &p),
            "The text says gray"
        );
        assert!(find_template(&ts, "label")
            .unwrap()
            .instantiate_label("teal", &p)
            .is_err());
    }

    #[test]
    fn red_appears_exactly_once() {
        let p = Palette::default();
        for t in builtin_templates() {
            assert_eq!(
                t.instantiate(ColorTerm::Red, &p).matches("red").count(),
                1,
                "{}",
                t.id
            );
        }
    }

    #[test]
    fn instantiations_differ_only_in_the_label() {
        let p = Palette::default();
        for t in builtin_templates() {
            let (prefix, suffix) = t.text.split_once(SLOT).unwrap();
            let prompts = t.prompts(&p);
            let mut unique = prompts.clone();
            unique.sort();
            unique.dedup();
            assert_eq!(unique.len(), 11);
            for (term, s) in ColorTerm::ALL.iter().zip(&prompts) {
                assert_eq!(s, &format!("{prefix}{}{suffix}", term.name()));
            }
        }
    }

    #[test]
    fn grey_spelling_follows_palette() {
        let p = Palette::from_override_text("gray.label = grey").unwrap();
        let t = &builtin_templates()[4];
        assert_eq!(t.instantiate(ColorTerm::Gray, &p), "The text says grey");
    }

    #[test]
    fn template_file_parsing() {
        let ts = parse_template_file("# mine\nA {} thing\n\nIt is {}.\n").unwrap();
        assert_eq!(ts.len(), 2);
        assert_eq!(ts[0].id, "custom-2");
        assert_eq!(ts[1].id, "custom-4");
        assert!(parse_template_file("no slot here").is_err());
        assert!(parse_template_file("{} and {}").is_err());
        assert!(parse_template_file("\n# only comments\n").is_err());
    }
}
