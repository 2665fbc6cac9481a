//! Deterministic translators for offline runs and tests.
//!
//! Every mock is a pure function of (kind, seed, input text), so results do
//! not depend on batch composition, retries or completion order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{BackendError, Translator};
use crate::spanmark::DelimiterPair;

#[derive(Debug, Clone, PartialEq)]
pub enum MockKind {
    Identity,
    /// Reverses the order of whitespace-separated words.
    ReverseWords,
    /// Word-by-word substitution through a small built-in English/Portuguese
    /// dictionary; `seed` picks among alternative renderings.
    DictionarySwap { seed: u64 },
    /// Identity, except each delimiter token occurrence is removed
    /// independently with probability `p`.
    DelimiterDropper { p: f64, seed: u64 },
}

impl MockKind {
    /// Parses the part after `mock:`, e.g. `identity`, `dictionary-swap:1`,
    /// `delimiter-dropper:0.1:7`.
    pub fn parse(spec: &str) -> Result<Self, BackendError> {
        let mut parts = spec.split(':');
        let kind = parts.next().unwrap_or_default();
        let params: Vec<&str> = parts.collect();
        let bad = |what: &str| BackendError::Config(format!("mock:{spec}: {what}"));
        let seed_at = |i: usize| -> Result<u64, BackendError> {
            params.get(i).map_or(Ok(0), |s| s.parse().map_err(|_| bad("seed must be an integer")))
        };
        let kind = match kind {
            "identity" => MockKind::Identity,
            "reverse-words" => MockKind::ReverseWords,
            "dictionary-swap" => MockKind::DictionarySwap { seed: seed_at(0)? },
            "delimiter-dropper" => {
                let p: f64 = params
                    .first()
                    .ok_or_else(|| bad("missing drop probability"))?
                    .parse()
                    .map_err(|_| bad("drop probability must be a number"))?;
                if !(0.0..=1.0).contains(&p) {
                    return Err(bad("drop probability must be in [0, 1]"));
                }
                MockKind::DelimiterDropper { p, seed: seed_at(1)? }
            }
            _ => return Err(bad("unknown mock kind")),
        };
        Ok(kind)
    }
}

pub struct MockTranslator {
    kind: MockKind,
    delimiters: DelimiterPair,
}

impl MockTranslator {
    pub fn new(kind: MockKind, delimiters: DelimiterPair) -> Self {
        Self { kind, delimiters }
    }

    pub fn translate_one(&self, text: &str) -> String {
        match &self.kind {
            MockKind::Identity => text.to_string(),
            MockKind::ReverseWords => text.split_whitespace().rev().collect::<Vec<_>>().join(" "),
            MockKind::DictionarySwap { seed } => dictionary_swap(text, *seed, &self.delimiters),
            MockKind::DelimiterDropper { p, seed } => drop_delimiters(text, *p, *seed, &self.delimiters),
        }
    }
}

impl Translator for MockTranslator {
    fn translate(&self, texts: &[String]) -> Result<Vec<String>, BackendError> {
        Ok(texts.iter().map(|t| self.translate_one(t)).collect())
    }

    fn describe(&self) -> String {
        match &self.kind {
            MockKind::Identity => "mock:identity".into(),
            MockKind::ReverseWords => "mock:reverse-words".into(),
            MockKind::DictionarySwap { seed } => format!("mock:dictionary-swap:{seed}"),
            MockKind::DelimiterDropper { p, seed } => format!(
                "mock:delimiter-dropper:{p}:{seed} [{} {}]",
                self.delimiters.start(),
                self.delimiters.end()
            ),
        }
    }
}

/// FNV-1a, so mock randomness is stable across platforms and releases.
fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(*b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn rng_for(text: &str, seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(fnv1a(text.as_bytes()) ^ seed.rotate_left(17))
}

fn drop_delimiters(text: &str, p: f64, seed: u64, delims: &DelimiterPair) -> String {
    let mut rng = rng_for(text, seed);
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    loop {
        let next = [delims.start(), delims.end()]
            .into_iter()
            .filter_map(|tok| rest.find(tok).map(|at| (at, tok)))
            .min_by_key(|(at, _)| *at);
        let Some((at, tok)) = next else {
            out.push_str(rest);
            return out;
        };
        out.push_str(&rest[..at]);
        if !rng.gen_bool(p) {
            out.push_str(tok);
        }
        rest = &rest[at + tok.len()..];
    }
}

const DICTIONARY: &[(&str, &[&str])] = &[
    ("the", &["o", "a"]),
    ("a", &["um", "uma"]),
    ("of", &["de", "do"]),
    ("and", &["e"]),
    ("in", &["em", "no"]),
    ("is", &["é", "está"]),
    ("was", &["foi", "era"]),
    ("has", &["tem", "possui"]),
    ("have", &["têm"]),
    ("country", &["país"]),
    ("city", &["cidade"]),
    ("capital", &["capital"]),
    ("states", &["estados"]),
    ("state", &["estado"]),
    ("year", &["ano"]),
    ("years", &["anos"]),
    ("river", &["rio"]),
    ("largest", &["maior"]),
    ("people", &["pessoas", "gente"]),
    ("university", &["universidade"]),
    ("what", &["o que", "qual"]),
    ("who", &["quem"]),
    ("where", &["onde"]),
    ("when", &["quando"]),
    ("how", &["como"]),
    ("many", &["muitos"]),
    ("first", &["primeiro"]),
    ("new", &["novo", "nova"]),
    ("world", &["mundo"]),
    ("water", &["água"]),
    ("brazil", &["brasil"]),
    ("portuguese", &["português"]),
    ("language", &["língua", "idioma"]),
    ("book", &["livro"]),
    ("house", &["casa"]),
];

fn dictionary_swap(text: &str, seed: u64, delims: &DelimiterPair) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        if !word.is_empty() {
            out.push_str(&swap_token(word, seed, delims));
            word.clear();
        }
    };
    for ch in text.chars() {
        if ch.is_whitespace() {
            flush(&mut word, &mut out);
            out.push(ch);
        } else {
            word.push(ch);
        }
    }
    flush(&mut word, &mut out);
    out
}

/// Swaps the alphabetic core of a token, keeping delimiters and punctuation
/// attached around it.
fn swap_token(token: &str, seed: u64, delims: &DelimiterPair) -> String {
    let mut prefix = String::new();
    let mut core = token;
    loop {
        if let Some(rest) = core.strip_prefix(delims.start()).or_else(|| core.strip_prefix(delims.end())) {
            prefix.push_str(&core[..core.len() - rest.len()]);
            core = rest;
        } else if let Some(c) = core.chars().next().filter(|c| !c.is_alphanumeric()) {
            prefix.push(c);
            core = &core[c.len_utf8()..];
        } else {
            break;
        }
    }
    let mut suffix_start = core.len();
    loop {
        let head = &core[..suffix_start];
        if let Some(rest) = head.strip_suffix(delims.start()).or_else(|| head.strip_suffix(delims.end())) {
            suffix_start = rest.len();
        } else if let Some(c) = head.chars().last().filter(|c| !c.is_alphanumeric()) {
            suffix_start -= c.len_utf8();
        } else {
            break;
        }
    }
    let (word, suffix) = core.split_at(suffix_start);
    let lower = word.to_lowercase();
    let Some((_, choices)) = DICTIONARY.iter().find(|(w, _)| *w == lower) else {
        return token.to_string();
    };
    let pick = choices[(fnv1a(lower.as_bytes()) ^ seed) as usize % choices.len()];
    let rendered = if word.chars().next().is_some_and(char::is_uppercase) {
        let mut cs = pick.chars();
        cs.next()
            .map(|f| f.to_uppercase().chain(cs).collect())
            .unwrap_or_default()
    } else {
        pick.to_string()
    };
    format!("{prefix}{rendered}{suffix}")
}
