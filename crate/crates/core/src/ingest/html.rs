//! HTML to header-grouped sections.
//!
//! Block text is collected in document order and grouped under the nearest
//! `h1`–`h4`. Text before the first heading forms a level-0 preamble, `h5` and
//! `h6` become bold lines inside the current section, and boilerplate
//! containers are dropped before any text is collected.

use scraper::{ElementRef, Html, Node, Selector};

use super::{IngestError, PageDocument, PageKind, Section};

/// Elements whose subtree never contributes text.
pub const STRIPPED_ELEMENTS: &[&str] = &[
    "script", "style", "nav", "footer", "aside", "noscript", "template", "head", "svg", "iframe",
    "object", "canvas",
];

const BLOCK_ELEMENTS: &[&str] = &[
    "address", "article", "blockquote", "body", "caption", "dd", "details", "dialog", "div", "dl",
    "dt", "fieldset", "figcaption", "figure", "form", "header", "hgroup", "hr", "html", "legend",
    "main", "menu", "ol", "p", "section", "summary", "table", "tbody", "tfoot", "thead", "tr",
    "ul",
];

pub(crate) fn heading_level(name: &str) -> Option<u8> {
    match name {
        "h1" => Some(1),
        "h2" => Some(2),
        "h3" => Some(3),
        "h4" => Some(4),
        _ => None,
    }
}

struct SectionBuilder {
    heading_path: Vec<String>,
    level: u8,
    blocks: Vec<String>,
}

struct Walker {
    snippet_chars: usize,
    sections: Vec<Section>,
    stack: Vec<(u8, String)>,
    current: SectionBuilder,
    inline: String,
    pending_prefix: Option<&'static str>,
    first_h1: Option<String>,
}

impl Walker {
    fn new(snippet_chars: usize) -> Self {
        Self {
            snippet_chars,
            sections: Vec::new(),
            stack: Vec::new(),
            current: SectionBuilder {
                heading_path: Vec::new(),
                level: 0,
                blocks: Vec::new(),
            },
            inline: String::new(),
            pending_prefix: None,
            first_h1: None,
        }
    }

    fn flush_block(&mut self) {
        let text = collapse_whitespace(&self.inline);
        self.inline.clear();
        if text.is_empty() {
            return;
        }
        let block = match self.pending_prefix.take() {
            Some(prefix) => format!("{prefix}{text}"),
            None => text,
        };
        self.current.blocks.push(block);
    }

    fn finish_section(&mut self) {
        self.flush_block();
        if self.current.blocks.is_empty() {
            return;
        }
        let content = std::mem::take(&mut self.current.blocks).join("\n\n");
        self.sections.push(Section::new(
            self.sections.len(),
            self.current.heading_path.clone(),
            self.current.level,
            content,
            self.snippet_chars,
        ));
    }

    fn open_heading(&mut self, level: u8, text: String) {
        self.finish_section();
        if level == 1 && self.first_h1.is_none() {
            self.first_h1 = Some(text.clone());
        }
        while self.stack.last().is_some_and(|(l, _)| *l >= level) {
            self.stack.pop();
        }
        self.stack.push((level, text));
        self.current = SectionBuilder {
            heading_path: self.stack.iter().map(|(_, t)| t.clone()).collect(),
            level,
            blocks: Vec::new(),
        };
    }

    fn walk(&mut self, el: ElementRef<'_>) {
        let name = el.value().name();
        if STRIPPED_ELEMENTS.contains(&name) {
            return;
        }
        if let Some(level) = heading_level(name) {
            let text = collapse_whitespace(&retained_text(el));
            if !text.is_empty() {
                self.open_heading(level, text);
            }
            return;
        }
        match name {
            "h5" | "h6" => {
                self.flush_block();
                let text = collapse_whitespace(&retained_text(el));
                if !text.is_empty() {
                    self.current.blocks.push(format!("**{text}**"));
                }
            }
            "li" => {
                self.flush_block();
                self.pending_prefix = Some("- ");
                self.walk_children(el);
                self.flush_block();
                self.pending_prefix = None;
            }
            "pre" => {
                self.flush_block();
                let raw = retained_text(el);
                let text = raw.trim_matches('\n').trim_end();
                if !text.trim().is_empty() {
                    self.current.blocks.push(text.to_string());
                }
            }
            "br" => self.inline.push('\n'),
            "td" | "th" => {
                self.inline.push(' ');
                self.walk_children(el);
                self.inline.push(' ');
            }
            _ if BLOCK_ELEMENTS.contains(&name) => {
                self.flush_block();
                self.walk_children(el);
                self.flush_block();
            }
            _ => self.walk_children(el),
        }
    }

    fn walk_children(&mut self, el: ElementRef<'_>) {
        for child in el.children() {
            match child.value() {
                Node::Text(t) => self.inline.push_str(t),
                Node::Element(_) => {
                    if let Some(child_el) = ElementRef::wrap(child) {
                        self.walk(child_el);
                    }
                }
                _ => {}
            }
        }
    }
}

/// Text of `el`'s subtree minus stripped elements.
fn retained_text(el: ElementRef<'_>) -> String {
    let mut out = String::new();
    for child in el.children() {
        match child.value() {
            Node::Text(t) => out.push_str(t),
            Node::Element(e) if !STRIPPED_ELEMENTS.contains(&e.name()) => {
                if let Some(child_el) = ElementRef::wrap(child) {
                    if e.name() == "br" {
                        out.push('\n');
                    }
                    out.push_str(&retained_text(child_el));
                }
            }
            _ => {}
        }
    }
    out
}

pub(crate) fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn parse_hierarchical(html: &str, url: &str, snippet_chars: usize) -> Result<PageDocument, IngestError> {
    let doc = Html::parse_document(html);
    let mut walker = Walker::new(snippet_chars);
    let root = doc.root_element();
    // <head> is stripped, but the root itself must be walked.
    walker.walk_children(root);
    walker.finish_section();

    if walker.sections.is_empty() {
        return Err(IngestError::EmptyDocument(url.to_string()));
    }

    let title_sel = Selector::parse("title").expect("static selector");
    let title = doc
        .select(&title_sel)
        .next()
        .map(|t| collapse_whitespace(&t.text().collect::<String>()))
        .filter(|t| !t.is_empty())
        .or(walker.first_h1)
        .unwrap_or_default();
    let preview = page_preview(&title, &walker.sections[0].content, snippet_chars);

    Ok(PageDocument {
        url: url.to_string(),
        title,
        preview,
        sections: walker.sections,
        kind: PageKind::Web,
    })
}

pub(crate) fn page_preview(title: &str, first_content: &str, chars: usize) -> String {
    let lead: String = first_content.chars().take(chars).collect();
    if title.is_empty() {
        lead
    } else {
        format!("{title}\n{lead}")
    }
}
