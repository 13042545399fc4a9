//! Naive reference implementations used as test oracles.
//!
//! Everything here works on explicit joined-string n-gram sets and plain f64
//! arithmetic so it shares no code path with the fingerprint index.

#![allow(dead_code)]

use std::collections::HashSet;

use contamkit::corpus_io::TokenizedDocument;
use rand::seq::IndexedRandom;
use rand::Rng;

const SEP: char = '\u{1f}';

pub fn gram_set<S: AsRef<str>>(sequences: &[Vec<S>], n: usize) -> HashSet<String> {
    let mut set = HashSet::new();
    for seq in sequences {
        if seq.len() < n {
            continue;
        }
        for w in seq.windows(n) {
            set.insert(join(w));
        }
    }
    set
}

pub fn join<S: AsRef<str>>(w: &[S]) -> String {
    let mut s = String::new();
    for (i, t) in w.iter().enumerate() {
        if i > 0 {
            s.push(SEP);
        }
        s.push_str(t.as_ref());
    }
    s
}

pub fn window_hits(tokens: &[String], set: &HashSet<String>, n: usize) -> Vec<bool> {
    if tokens.len() < n {
        return Vec::new();
    }
    tokens.windows(n).map(|w| set.contains(&join(w))).collect()
}

/// Positions covered by some hitting window.
pub fn marked(tokens: &[String], set: &HashSet<String>, n: usize) -> Vec<bool> {
    let mut m = vec![false; tokens.len()];
    for (i, hit) in window_hits(tokens, set, n).into_iter().enumerate() {
        if hit {
            m[i..i + n].iter_mut().for_each(|x| *x = true);
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveVerdict {
    pub contaminated: bool,
    pub contaminated_tokens: usize,
}

pub fn direct(doc: &TokenizedDocument, set: &HashSet<String>, n: usize) -> NaiveVerdict {
    let mut tokens = 0;
    for r in &doc.sentences {
        let s = &doc.tokens[r.clone()];
        if window_hits(s, set, n).iter().any(|&h| h) {
            tokens += s.len();
        }
    }
    NaiveVerdict {
        contaminated: tokens > 0,
        contaminated_tokens: tokens,
    }
}

pub fn palm_train(
    doc: &TokenizedDocument,
    set: &HashSet<String>,
    n: usize,
    lambda: f64,
) -> NaiveVerdict {
    let mut tokens = 0;
    let mut any = false;
    for r in &doc.sentences {
        let s = &doc.tokens[r.clone()];
        let hits = window_hits(s, set, n);
        let h = hits.iter().filter(|&&x| x).count();
        if !hits.is_empty() && h as f64 / hits.len() as f64 > lambda {
            any = true;
            tokens += s.len();
        }
    }
    NaiveVerdict {
        contaminated: any,
        contaminated_tokens: tokens,
    }
}

pub fn llama2_doc(
    doc: &TokenizedDocument,
    set: &HashSet<String>,
    l: usize,
    lambda: f64,
) -> NaiveVerdict {
    let m = marked(&doc.tokens, set, l).iter().filter(|&&x| x).count();
    let contaminated = m > 0 && m as f64 / doc.tokens.len() as f64 >= lambda;
    NaiveVerdict {
        contaminated,
        contaminated_tokens: if contaminated { m } else { 0 },
    }
}

/// (hits, windows, contaminated) for the eval-side PaLM rule.
pub fn palm_eval(
    tokens: &[String],
    set: &HashSet<String>,
    n: usize,
    lambda: f64,
) -> (usize, usize, bool) {
    let hits = window_hits(tokens, set, n);
    let h = hits.iter().filter(|&&x| x).count();
    let c = h > 0 && h as f64 / hits.len() as f64 >= lambda;
    (h, hits.len(), c)
}

/// Marks tokens by enumerating every shared run directly: for each pair of
/// start positions, extend the match as far as it goes and mark it if long
/// enough. Quadratic and obviously correct.
pub fn brute_force_runs(sample: &[String], corpus: &[Vec<String>], l: usize) -> Vec<bool> {
    let mut m = vec![false; sample.len()];
    for doc in corpus {
        for i in 0..sample.len() {
            for j in 0..doc.len() {
                let mut k = 0;
                while i + k < sample.len() && j + k < doc.len() && sample[i + k] == doc[j + k] {
                    k += 1;
                }
                if k >= l {
                    m[i..i + k].iter_mut().for_each(|x| *x = true);
                }
            }
        }
    }
    m
}

pub fn vocab(size: usize) -> Vec<String> {
    (0..size).map(|i| format!("w{i}")).collect()
}

/// Random document text over `vocab` with occasional sentence terminators.
pub fn random_text<R: Rng>(rng: &mut R, vocab: &[String], len: usize) -> String {
    let mut s = String::new();
    for i in 0..len {
        if i > 0 {
            s.push_str(if rng.random_bool(0.06) { ". " } else { " " });
        }
        s.push_str(vocab.choose(rng).unwrap());
    }
    s
}

/// Text that copies a random slice of `source` (so overlaps actually occur)
/// padded with random tokens.
pub fn text_with_copy<R: Rng>(
    rng: &mut R,
    vocab: &[String],
    source: &[String],
    len: usize,
) -> String {
    let mut toks: Vec<String> = (0..len)
        .map(|_| vocab.choose(rng).unwrap().clone())
        .collect();
    if !source.is_empty() && len > 0 {
        let run = rng.random_range(1..=source.len().min(len));
        let from = rng.random_range(0..=source.len() - run);
        let to = rng.random_range(0..=len - run);
        toks[to..to + run].clone_from_slice(&source[from..from + run]);
    }
    let mut s = String::new();
    for (i, t) in toks.iter().enumerate() {
        if i > 0 {
            s.push_str(if rng.random_bool(0.04) { "! " } else { " " });
        }
        s.push_str(t);
    }
    s
}
