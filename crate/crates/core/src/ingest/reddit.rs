//! Reddit threads: listing parsing, top-k comment tree truncation, and the
//! live OAuth client.

use std::cmp::Ordering;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::html::page_preview;
use super::{IngestError, PageDocument, PageKind, Section};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedditComment {
    pub id: String,
    pub score: i64,
    pub author: String,
    pub body: String,
    /// Unix seconds.
    pub created_at: i64,
    #[serde(default)]
    pub replies: Vec<RedditComment>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedditThread {
    pub title: String,
    pub selftext: String,
    pub author: String,
    pub comments: Vec<RedditComment>,
}

pub fn is_reddit_url(url: &str) -> bool {
    let Ok(u) = url::Url::parse(url) else {
        return false;
    };
    let host = u.host_str().unwrap_or_default().to_ascii_lowercase();
    host == "reddit.com" || host.ends_with(".reddit.com") || host == "redd.it"
}

/// Parses the two-listing JSON returned by `/comments/<id>` endpoints.
pub fn parse_thread_listing(body: &str) -> Result<RedditThread, IngestError> {
    let bad = |msg: &str| IngestError::Malformed(format!("reddit listing: {msg}"));
    let v: Value = serde_json::from_str(body).map_err(|e| bad(&e.to_string()))?;
    let listings = v.as_array().ok_or_else(|| bad("expected a two-element array"))?;
    let post = listings
        .first()
        .and_then(|l| l.pointer("/data/children/0/data"))
        .ok_or_else(|| bad("missing submission"))?;
    let str_field = |v: &Value, k: &str| v.get(k).and_then(Value::as_str).unwrap_or_default().to_string();

    let title = str_field(post, "title");
    let selftext = str_field(post, "selftext");
    let author = str_field(post, "author");
    if is_deleted_submission(post, &author, &selftext) {
        return Err(IngestError::ThreadDeleted);
    }
    let comments = listings
        .get(1)
        .map(parse_children)
        .unwrap_or_default();
    Ok(RedditThread {
        title,
        selftext,
        author,
        comments,
    })
}

fn is_deleted_submission(post: &Value, author: &str, selftext: &str) -> bool {
    let removed = post
        .get("removed_by_category")
        .is_some_and(|v| !v.is_null());
    let gone = |s: &str| s == "[deleted]" || s == "[removed]";
    removed || (gone(author) && gone(selftext))
}

fn parse_children(listing: &Value) -> Vec<RedditComment> {
    let Some(children) = listing.pointer("/data/children").and_then(Value::as_array) else {
        return Vec::new();
    };
    children
        .iter()
        .filter(|c| c.get("kind").and_then(Value::as_str) == Some("t1"))
        .filter_map(|c| c.get("data"))
        .map(|d| RedditComment {
            id: d.get("id").and_then(Value::as_str).unwrap_or_default().to_string(),
            score: d.get("score").and_then(Value::as_i64).unwrap_or(0),
            author: d.get("author").and_then(Value::as_str).unwrap_or("[deleted]").to_string(),
            body: d.get("body").and_then(Value::as_str).unwrap_or_default().to_string(),
            created_at: d
                .get("created_utc")
                .and_then(Value::as_f64)
                .map(|t| t as i64)
                .unwrap_or(0),
            // `replies` is "" when empty, otherwise a nested listing.
            replies: d.get("replies").map(parse_children).unwrap_or_default(),
        })
        .collect()
}

/// Higher score first; equal scores keep the earlier comment first.
fn top_order(a: &RedditComment, b: &RedditComment) -> Ordering {
    b.score
        .cmp(&a.score)
        .then(a.created_at.cmp(&b.created_at))
        .then_with(|| a.id.cmp(&b.id))
}

fn top_n(comments: &[RedditComment], n: usize) -> Vec<RedditComment> {
    let mut sorted = comments.to_vec();
    sorted.sort_by(top_order);
    sorted.truncate(n);
    sorted
}

/// Keeps the top `k` top-level comments, the top `m1` replies of each and
/// the top `m2` replies of those; anything deeper is dropped.
pub fn select_top_comments(comments: &[RedditComment], k: usize, m1: usize, m2: usize) -> Vec<RedditComment> {
    top_n(comments, k)
        .into_iter()
        .map(|mut top| {
            top.replies = top_n(&top.replies, m1)
                .into_iter()
                .map(|mut reply| {
                    reply.replies = top_n(&reply.replies, m2)
                        .into_iter()
                        .map(|mut leaf| {
                            leaf.replies.clear();
                            leaf
                        })
                        .collect();
                    reply
                })
                .collect();
            top
        })
        .collect()
}

fn render_comment(c: &RedditComment, depth: usize, out: &mut Vec<String>) {
    let body = c.body.split_whitespace().collect::<Vec<_>>().join(" ");
    out.push(format!("{}[{}] {}: {}", "  ".repeat(depth), c.score, c.author, body));
    for r in &c.replies {
        render_comment(r, depth + 1, out);
    }
}

pub fn reconstruct_reddit_tree(
    thread: &RedditThread,
    url: &str,
    k: usize,
    m1: usize,
    m2: usize,
    snippet_chars: usize,
) -> PageDocument {
    let title = thread.title.trim().to_string();
    let selftext = thread.selftext.trim();
    let submission = if selftext.is_empty() {
        title.clone()
    } else if title.is_empty() {
        selftext.to_string()
    } else {
        format!("{title}\n\n{selftext}")
    };

    let mut sections = Vec::new();
    if !submission.is_empty() {
        sections.push(Section::new(0, vec![title.clone()], 0, submission, snippet_chars));
    }
    for (i, comment) in select_top_comments(&thread.comments, k, m1, m2).iter().enumerate() {
        let mut lines = Vec::new();
        render_comment(comment, 0, &mut lines);
        sections.push(Section::new(
            sections.len(),
            vec![title.clone(), format!("comment {}", i + 1)],
            1,
            lines.join("\n"),
            snippet_chars,
        ));
    }
    let preview = if selftext.is_empty() {
        title.clone()
    } else {
        page_preview(&title, selftext, snippet_chars)
    };
    PageDocument {
        url: url.to_string(),
        title,
        preview,
        sections,
        kind: PageKind::Reddit,
    }
}

/// Reddit API client using the application-only OAuth flow.
pub struct RedditClient {
    client_id: String,
    secret: String,
    agent: ureq::Agent,
    token: Mutex<Option<(String, Instant)>>,
}

const USER_AGENT: &str = "hifi-rag/0.1 (retrieval pipeline)";

impl RedditClient {
    pub fn new(client_id: String, secret: String, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .user_agent(USER_AGENT)
            .build()
            .into();
        Self {
            client_id,
            secret,
            agent,
            token: Mutex::new(None),
        }
    }

    pub fn from_env(timeout: Duration) -> Option<Self> {
        let id = std::env::var("HIFI_REDDIT_CLIENT_ID").ok().filter(|v| !v.is_empty())?;
        let secret = std::env::var("HIFI_REDDIT_SECRET").ok().filter(|v| !v.is_empty())?;
        Some(Self::new(id, secret, timeout))
    }

    fn token(&self) -> Result<String, IngestError> {
        let mut guard = self.token.lock().unwrap();
        if let Some((tok, expires)) = guard.as_ref() {
            if Instant::now() < *expires {
                return Ok(tok.clone());
            }
        }
        let basic = base64::engine::general_purpose::STANDARD
            .encode(format!("{}:{}", self.client_id, self.secret));
        let mut resp = self
            .agent
            .post("https://www.reddit.com/api/v1/access_token")
            .header("Authorization", &format!("Basic {basic}"))
            .send_form([("grant_type", "client_credentials")])
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        if status != 200 {
            return Err(IngestError::Http { status, url: "reddit token".into() });
        }
        let v: Value = serde_json::from_str(&text).map_err(|e| IngestError::Malformed(e.to_string()))?;
        let tok = v
            .get("access_token")
            .and_then(Value::as_str)
            .ok_or_else(|| IngestError::Malformed("token response without access_token".into()))?
            .to_string();
        let ttl = v.get("expires_in").and_then(Value::as_u64).unwrap_or(3600);
        *guard = Some((tok.clone(), Instant::now() + Duration::from_secs(ttl.saturating_sub(60))));
        Ok(tok)
    }
}

/// Extracts the submission id from a thread URL (`/comments/<id>/…` or a
/// `redd.it/<id>` short link).
pub fn thread_id(url: &str) -> Option<String> {
    let u = url::Url::parse(url).ok()?;
    let segments: Vec<&str> = u.path_segments()?.filter(|s| !s.is_empty()).collect();
    if u.host_str()? == "redd.it" {
        return segments.first().map(|s| s.to_string());
    }
    let pos = segments.iter().position(|s| *s == "comments")?;
    segments.get(pos + 1).map(|s| s.to_string())
}

impl super::ThreadBackend for RedditClient {
    fn fetch_thread(&self, url: &str) -> Result<String, IngestError> {
        let id = thread_id(url).ok_or_else(|| IngestError::NotAThread(url.to_string()))?;
        let token = self.token()?;
        let mut resp = self
            .agent
            .get(&format!("https://oauth.reddit.com/comments/{id}"))
            .header("Authorization", &format!("Bearer {token}"))
            .query("sort", "top")
            .query("limit", "500")
            .query("depth", "4")
            .query("raw_json", "1")
            .call()
            .map_err(|e| IngestError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        match status {
            200 => resp
                .body_mut()
                .read_to_string()
                .map_err(|e| IngestError::Transport(e.to_string())),
            404 | 410 => Err(IngestError::ThreadDeleted),
            _ => Err(IngestError::Http { status, url: url.to_string() }),
        }
    }

    fn name(&self) -> &str {
        "reddit"
    }
}
