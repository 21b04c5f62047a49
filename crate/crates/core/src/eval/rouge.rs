//! ROUGE-L F1 over lowercase alphanumeric tokens. No stemming, no stopword
//! removal.

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Longest common subsequence length, O(|a|·|b|) time and O(|b|) space.
pub fn lcs_length<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RougeL {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn rouge_l(candidate: &str, reference: &str) -> RougeL {
    let cand = tokenize(candidate);
    let reference = tokenize(reference);
    let lcs = lcs_length(&cand, &reference) as f64;
    let precision = if cand.is_empty() { 0.0 } else { lcs / cand.len() as f64 };
    let recall = if reference.is_empty() { 0.0 } else { lcs / reference.len() as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    RougeL {
        precision,
        recall,
        f1,
    }
}

pub fn rouge_l_f1(candidate: &str, reference: &str) -> f64 {
    rouge_l(candidate, reference).f1
}
