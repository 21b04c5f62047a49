//! Independent reference implementations used to check the library.

use std::fs;
use std::path::PathBuf;

use hifi_rag::ingest::{parse_hierarchical, PageDocument, RedditComment, RedditThread};
use scraper::{Html, Node};
use serde::Deserialize;

/// LCS by brute force: the longest subsequence of `a` (over all 2^|a|
/// index subsets) that is also a subsequence of `b`.
pub fn lcs_exhaustive<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    assert!(a.len() <= 16, "exhaustive oracle is exponential");
    let mut best = 0;
    for mask in 0u32..(1 << a.len()) {
        let picked: Vec<&T> = (0..a.len()).filter(|i| mask & (1 << i) != 0).map(|i| &a[i]).collect();
        if picked.len() > best && is_subsequence(&picked, b) {
            best = picked.len();
        }
    }
    best
}

fn is_subsequence<T: PartialEq>(needle: &[&T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|n| it.any(|h| h == *n))
}

pub fn html_fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/html")
}

pub fn html_fixture_names() -> Vec<String> {
    let mut names: Vec<String> = fs::read_dir(html_fixture_dir())
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension()? == "html").then(|| p.file_stem().unwrap().to_string_lossy().into_owned())
        })
        .collect();
    names.sort();
    names
}

#[derive(Debug, Deserialize)]
struct ExpectedSection {
    path: Vec<String>,
    level: u8,
    content: String,
}

#[derive(Debug, Deserialize)]
struct Expected {
    title: String,
    sections: Vec<ExpectedSection>,
}

const DROPPED: &[&str] = &[
    "script", "style", "nav", "footer", "aside", "noscript", "template", "head", "svg", "iframe", "object", "canvas",
];
const HEADINGS: &[&str] = &["h1", "h2", "h3", "h4"];

/// Non-heading text nodes outside dropped containers, in document order.
pub fn retained_text_nodes(html: &str) -> Vec<String> {
    let doc = Html::parse_document(html);
    let mut out = Vec::new();
    for node in doc.tree.root().descendants() {
        let Node::Text(text) = node.value() else { continue };
        let skip = node.ancestors().any(|a| match a.value() {
            Node::Element(e) => DROPPED.contains(&e.name()) || HEADINGS.contains(&e.name()),
            _ => false,
        });
        if !skip && !text.trim().is_empty() {
            out.push(text.to_string());
        }
    }
    out
}

fn squeeze(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).collect()
}

/// Section text with list and minor-heading markers removed.
fn unmarked(doc: &PageDocument) -> String {
    let mut out = String::new();
    for section in &doc.sections {
        for block in section.content.split("\n\n") {
            let block = block.strip_prefix("- ").unwrap_or(block);
            let block = block
                .strip_prefix("**")
                .and_then(|b| b.strip_suffix("**"))
                .unwrap_or(block);
            out.push_str(block);
        }
    }
    out
}

/// Every retained text node appears exactly once, in order, in the
/// concatenated section contents.
pub fn check_coverage(html: &str, doc: &PageDocument) -> Result<(), String> {
    let expected = squeeze(&retained_text_nodes(html).concat());
    let actual = squeeze(&unmarked(doc));
    if expected == actual {
        Ok(())
    } else {
        Err(format!("coverage mismatch:\n  text nodes: {expected}\n  sections:   {actual}"))
    }
}

pub fn check_html_fixture(name: &str) -> Result<(), String> {
    let dir = html_fixture_dir();
    let html = fs::read_to_string(dir.join(format!("{name}.html"))).unwrap();
    let expected: Expected =
        serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.json"))).unwrap()).unwrap();
    let doc = parse_hierarchical(&html, "https://fixture.example/page", 200).map_err(|e| e.to_string())?;
    if doc.title != expected.title {
        return Err(format!("{name}: title {:?} != {:?}", doc.title, expected.title));
    }
    let got: Vec<(Vec<String>, u8, String)> = doc
        .sections
        .iter()
        .map(|s| (s.heading_path.clone(), s.heading_level, s.content.clone()))
        .collect();
    let want: Vec<(Vec<String>, u8, String)> = expected
        .sections
        .into_iter()
        .map(|s| (s.path, s.level, s.content))
        .collect();
    if got != want {
        return Err(format!("{name}: sections differ\n  got:  {got:?}\n  want: {want:?}"));
    }
    for (i, s) in doc.sections.iter().enumerate() {
        if s.index != i {
            return Err(format!("{name}: section {i} has index {}", s.index));
        }
    }
    check_coverage(&html, &doc).map_err(|e| format!("{name}: {e}"))
}

/// A thread with `top` top-level comments, `replies` replies each and `sub`
/// sub-replies per reply, plus one more level below that. Scores are
/// distinct and deliberately not monotone in position.
pub fn synthetic_thread(top: usize, replies: usize, sub: usize) -> RedditThread {
    fn score(seed: usize) -> i64 {
        ((seed * 7919 + 13) % 1000) as i64
    }
    let mut n = 0;
    let mut next = || {
        n += 1;
        n
    };
    let mut comments = Vec::new();
    for i in 0..top {
        let mut level1 = Vec::new();
        for j in 0..replies {
            let mut level2 = Vec::new();
            for k in 0..sub {
                let id = next();
                let deeper = vec![RedditComment {
                    id: format!("d{id}"),
                    score: 1,
                    author: "deep".into(),
                    body: "too deep".into(),
                    created_at: id as i64,
                    replies: vec![],
                }];
                level2.push(RedditComment {
                    id: format!("c{i}_{j}_{k}"),
                    score: score(id),
                    author: format!("u{id}"),
                    body: format!("sub-reply {i}.{j}.{k}"),
                    created_at: id as i64,
                    replies: deeper,
                });
            }
            let id = next();
            level1.push(RedditComment {
                id: format!("c{i}_{j}"),
                score: score(id),
                author: format!("u{id}"),
                body: format!("reply {i}.{j}"),
                created_at: id as i64,
                replies: level2,
            });
        }
        let id = next();
        comments.push(RedditComment {
            id: format!("c{i}"),
            score: score(id),
            author: format!("u{id}"),
            body: format!("top {i}"),
            created_at: id as i64,
            replies: level1,
        });
    }
    RedditThread {
        title: "Synthetic thread".into(),
        selftext: "Body of the submission.".into(),
        author: "op".into(),
        comments,
    }
}

/// `(depth, score)` for every rendered comment line of a thread section.
pub fn parse_comment_lines(content: &str) -> Vec<(usize, i64)> {
    content
        .lines()
        .map(|line| {
            let trimmed = line.trim_start_matches(' ');
            let depth = (line.len() - trimmed.len()) / 2;
            let score = trimmed
                .strip_prefix('[')
                .and_then(|r| r.split_once(']'))
                .and_then(|(s, _)| s.parse().ok())
                .unwrap_or_else(|| panic!("bad comment line {line:?}"));
            (depth, score)
        })
        .collect()
}

/// Highest scores among `comments`, computed independently of the library.
fn top_scores(comments: &[RedditComment], n: usize) -> Vec<i64> {
    let mut s: Vec<i64> = comments.iter().map(|c| c.score).collect();
    s.sort_unstable_by(|a, b| b.cmp(a));
    s.truncate(n);
    s
}

/// Checks the rendered thread against `thread`: exactly `min(k, n)` comment
/// sections, at most `m1`/`m2` children per level, nothing deeper, sibling
/// scores non-increasing and equal to the true top scores.
pub fn check_reddit_truncation(
    doc: &PageDocument,
    thread: &RedditThread,
    k: usize,
    m1: usize,
    m2: usize,
) -> Result<String, String> {
    let comment_sections: Vec<_> = doc.sections.iter().filter(|s| s.heading_level == 1).collect();
    let want_top = k.min(thread.comments.len());
    if comment_sections.len() != want_top {
        return Err(format!("{} top-level comments, want {want_top}", comment_sections.len()));
    }
    let mut tops = Vec::new();
    let mut max_l1 = 0;
    let mut max_l2 = 0;
    for section in &comment_sections {
        let lines = parse_comment_lines(&section.content);
        if lines[0].0 != 0 || lines.iter().skip(1).any(|(d, _)| *d == 0) {
            return Err("each comment section must hold exactly one top-level comment".into());
        }
        if lines.iter().any(|(d, _)| *d > 2) {
            return Err("comment deeper than two reply levels".into());
        }
        tops.push(lines[0].1);
        let top = thread
            .comments
            .iter()
            .find(|c| c.score == lines[0].1)
            .ok_or("unknown top-level comment")?;
        let l1: Vec<(usize, usize)> = lines
            .iter()
            .enumerate()
            .filter(|(_, (d, _))| *d == 1)
            .map(|(i, _)| (i, 0))
            .collect();
        if l1.len() > m1 {
            return Err(format!("{} replies under one comment, max {m1}", l1.len()));
        }
        let l1_scores: Vec<i64> = l1.iter().map(|(i, _)| lines[*i].1).collect();
        if l1_scores != top_scores(&top.replies, m1) {
            return Err(format!("reply scores {l1_scores:?} are not the top {m1}"));
        }
        max_l1 = max_l1.max(l1.len());
        for (pos, (start, _)) in l1.iter().enumerate() {
            let end = l1.get(pos + 1).map_or(lines.len(), |(i, _)| *i);
            let l2: Vec<i64> = lines[start + 1..end].iter().map(|(_, s)| *s).collect();
            if l2.len() > m2 {
                return Err(format!("{} sub-replies under one reply, max {m2}", l2.len()));
            }
            let reply = top.replies.iter().find(|r| r.score == lines[*start].1).ok_or("unknown reply")?;
            if l2 != top_scores(&reply.replies, m2) {
                return Err(format!("sub-reply scores {l2:?} are not the top {m2}"));
            }
            max_l2 = max_l2.max(l2.len());
        }
    }
    if tops != top_scores(&thread.comments, k) {
        return Err(format!("top-level scores {tops:?} are not the top {k}"));
    }
    Ok(format!("{} top-level / max {max_l1} replies / max {max_l2} sub-replies", tops.len()))
}
