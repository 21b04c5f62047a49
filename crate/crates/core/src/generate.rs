//! Answer generation on the deep tier: context assembly, the draft/refine
//! conversation, and the two no-retrieval baselines.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::SiteContext;
use crate::llm::{render, ChatMessage, Gateway, LlmError, ModelTier, TemplateId};
use crate::model::{BaselineMode, TranscriptEntry, UserQuery};

const BUNDLED_EXAMPLES: &str = include_str!("../data/few_shot_examples.json");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FewShotExample {
    pub question: String,
    pub answer: String,
}

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("few-shot examples: {0}")]
    Examples(String),
    #[error("no web content to generate from")]
    NoSources,
    #[error("generation failed: {0}")]
    Model(#[from] LlmError),
}

/// Parses and checks a few-shot examples file: exactly three non-empty pairs.
pub fn parse_examples(json: &str) -> Result<Vec<FewShotExample>, GenerateError> {
    let examples: Vec<FewShotExample> =
        serde_json::from_str(json).map_err(|e| GenerateError::Examples(e.to_string()))?;
    if examples.len() != 3 {
        return Err(GenerateError::Examples(format!(
            "expected exactly 3 examples, found {}",
            examples.len()
        )));
    }
    if let Some(i) = examples
        .iter()
        .position(|e| e.question.trim().is_empty() || e.answer.trim().is_empty())
    {
        return Err(GenerateError::Examples(format!("example {} has an empty field", i + 1)));
    }
    Ok(examples)
}

pub fn load_examples(path: Option<&Path>) -> Result<Vec<FewShotExample>, GenerateError> {
    match path {
        None => parse_examples(BUNDLED_EXAMPLES),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| GenerateError::Examples(format!("{}: {e}", p.display())))?;
            parse_examples(&text)
        }
    }
}

pub fn format_examples(examples: &[FewShotExample]) -> String {
    examples
        .iter()
        .map(|e| format!("Question: {}\nAnswer: {}", e.question.trim(), e.answer.trim()))
        .collect::<Vec<_>>()
        .join("\n\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WebContent {
    pub text: String,
    /// Source number (1-based, as printed in `text`) to site URL.
    pub sources: BTreeMap<usize, String>,
}

/// Serializes sites as numbered blocks. Sites without kept sections are
/// skipped and numbering stays gapless.
pub fn assemble_web_content(sites: &[SiteContext]) -> WebContent {
    let mut blocks = Vec::new();
    let mut sources = BTreeMap::new();
    for site in sites.iter().filter(|s| !s.kept_sections.is_empty()) {
        let n = sources.len() + 1;
        let mut block = format!("[{n}] {}\n{}\n{}\n", site.title, site.url, site.preview);
        for section in &site.kept_sections {
            block.push_str(&format!("## {}\n{}\n", section.heading_label(), section.content));
        }
        blocks.push(block);
        sources.insert(n, site.url.clone());
    }
    WebContent {
        text: blocks.join("\n"),
        sources,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerDraft {
    pub text: String,
    /// Full conversation; always ends with the model message equal to `text`.
    pub transcript: Vec<ChatMessage>,
}

fn draft_prompt(question: &UserQuery, web: Option<&WebContent>) -> String {
    match web {
        Some(web) => render(
            TemplateId::Draft,
            &[("USER_QUESTION", &question.text), ("WEB_CONTENT", &web.text)],
        ),
        None => render(TemplateId::DraftNoSearch, &[("USER_QUESTION", &question.text)]),
    }
    .expect("draft bindings are complete")
}

/// Turn 1 always; turn 2 (style refinement) when `examples` is given.
/// `web = None` drafts from the question alone.
pub fn generate_answer(
    gateway: &Gateway,
    question: &UserQuery,
    web: Option<&WebContent>,
    examples: Option<&[FewShotExample]>,
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<AnswerDraft, GenerateError> {
    let mut conversation = vec![ChatMessage::user(draft_prompt(question, web))];
    let draft = gateway.converse("draft", ModelTier::Deep, &conversation, transcript)?;
    conversation.push(ChatMessage::model(draft.clone()));

    let Some(examples) = examples else {
        return Ok(AnswerDraft {
            text: draft,
            transcript: conversation,
        });
    };
    let refine = render(TemplateId::Refine, &[("VAL_EXAMPLES", &format_examples(examples))])
        .expect("refine bindings are complete");
    conversation.push(ChatMessage::user(refine));
    let text = gateway.converse("refine", ModelTier::Deep, &conversation, transcript)?;
    conversation.push(ChatMessage::model(text.clone()));
    Ok(AnswerDraft {
        text,
        transcript: conversation,
    })
}

pub fn generate_two_turn(
    gateway: &Gateway,
    question: &UserQuery,
    sites: &[SiteContext],
    examples: &[FewShotExample],
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<(AnswerDraft, WebContent), GenerateError> {
    let web = assemble_web_content(sites);
    if web.sources.is_empty() {
        return Err(GenerateError::NoSources);
    }
    let answer = generate_answer(gateway, question, Some(&web), Some(examples), transcript)?;
    Ok((answer, web))
}

pub fn generate_baseline(
    gateway: &Gateway,
    question: &UserQuery,
    mode: BaselineMode,
    transcript: &mut Vec<TranscriptEntry>,
) -> Result<AnswerDraft, GenerateError> {
    let prompt = match mode {
        BaselineMode::RawQuery => render(TemplateId::BaselineQ, &[("USER_QUESTION", &question.text)])
            .expect("baseline bindings are complete"),
        BaselineMode::PromptOnly => draft_prompt(question, None),
        BaselineMode::None => {
            return Err(GenerateError::Model(LlmError::InvalidRequest(
                "generate_baseline called without a baseline mode".into(),
            )))
        }
    };
    let mut conversation = vec![ChatMessage::user(prompt)];
    let text = gateway.converse("baseline", ModelTier::Deep, &conversation, transcript)?;
    conversation.push(ChatMessage::model(text.clone()));
    Ok(AnswerDraft {
        text,
        transcript: conversation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::Section;

    fn site(url: &str, sections: usize) -> SiteContext {
        SiteContext {
            title: format!("Title {url}"),
            url: url.to_string(),
            preview: "pv".into(),
            kept_sections: (0..sections)
                .map(|i| Section::new(i, vec!["A".into(), format!("S{i}")], 2, format!("c{i}"), 200))
                .collect(),
        }
    }

    #[test]
    fn numbered_blocks() {
        let web = assemble_web_content(&[site("https://a.com", 1), site("https://b.com", 2)]);
        assert_eq!(
            web.text,
            "[1] Title https://a.com\nhttps://a.com\npv\n## A > S0\nc0\n\n\
             [2] Title https://b.com\nhttps://b.com\npv\n## A > S0\nc0\n## A > S1\nc1\n"
        );
        assert_eq!(web.sources[&1], "https://a.com");
        assert_eq!(web.sources[&2], "https://b.com");
    }

    #[test]
    fn empty_sites_skipped_without_gaps() {
        let sites = [site("https://a.com", 0), site("https://b.com", 1), site("https://c.com", 1)];
        let web = assemble_web_content(&sites);
        assert_eq!(web.sources.keys().copied().collect::<Vec<_>>(), [1, 2]);
        assert_eq!(web.sources[&1], "https://b.com");
        assert!(web.text.starts_with("[1] Title https://b.com"));
        assert_eq!(assemble_web_content(&sites), web);
    }

    #[test]
    fn bundled_examples_load() {
        let ex = load_examples(None).unwrap();
        assert_eq!(ex.len(), 3);
        assert!(format_examples(&ex).starts_with("Question: how do i change a flat tire"));
    }

    #[test]
    fn example_count_enforced() {
        assert!(parse_examples(r#"[{"question":"q","answer":"a"}]"#).is_err());
        assert!(parse_examples(
            r#"[{"question":"q","answer":"a"},{"question":"q","answer":""},{"question":"q","answer":"a"}]"#
        )
        .is_err());
    }
}
