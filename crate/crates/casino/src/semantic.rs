//! Lexicon/rule sentiment scoring, part-of-speech presence flags, and title
//! novelty.
//!
//! The sentiment scorer is a simplified lexicon-and-rules design with the
//! usual output contract (negative/neutral/positive shares summing to 1).
//! The lexicon ships as a data file and can be swapped out via config.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const DEFAULT_LEXICON: &str = include_str!("../data/lexicon.tsv");
const DEFAULT_POS_TAGS: &str = include_str!("../data/pos_tags.tsv");

/// Valence flip applied when a negation appears shortly before a token.
const NEGATION_FLIP: f64 = -0.74;
/// Tokens looked back at for negations and boosters.
const RULE_WINDOW: usize = 3;

/// Lowercases, splits on whitespace, and emits punctuation marks as
/// separate single-character tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    for c in text.to_lowercase().chars() {
        if c.is_whitespace() {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
        } else if c.is_alphanumeric() {
            word.push(c);
        } else {
            if !word.is_empty() {
                out.push(std::mem::take(&mut word));
            }
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

/// Token valences plus negation and booster rule sets.
#[derive(Debug, Clone)]
pub struct SentimentLexicon {
    valence: HashMap<String, f64>,
    negations: HashSet<String>,
    boosters: HashMap<String, f64>,
}

fn default_negations() -> HashSet<String> {
    [
        "not", "no", "never", "none", "neither", "nor", "nothing", "without", "cannot", "cant",
        "dont", "doesnt", "didnt", "isnt", "wasnt", "wont", "hardly", "barely", "rarely",
        "seldom", "lack", "lacking",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn default_boosters() -> HashMap<String, f64> {
    [
        ("very", 1.293),
        ("really", 1.267),
        ("extremely", 1.34),
        ("absolutely", 1.31),
        ("incredibly", 1.31),
        ("so", 1.2),
        ("totally", 1.25),
        ("super", 1.28),
        ("completely", 1.27),
        ("slightly", 0.78),
        ("somewhat", 0.82),
        ("kinda", 0.85),
        ("kind", 0.9),
        ("marginally", 0.77),
        ("barely", 0.7),
    ]
    .iter()
    .map(|(s, v)| (s.to_string(), *v))
    .collect()
}

impl SentimentLexicon {
    /// Parses "token<TAB>valence" lines; '#' lines and blanks are skipped.
    /// Negations and boosters keep their built-in defaults.
    pub fn parse(body: &str, source: &str) -> Result<SentimentLexicon> {
        let mut valence = HashMap::new();
        for (i, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let token = parts.next().unwrap_or_default().trim().to_lowercase();
            let value: f64 = parts
                .next()
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| Error::Parse {
                    path: source.to_string(),
                    line: i + 1,
                    message: "expected `token<TAB>valence`".into(),
                })?;
            valence.insert(token, value);
        }
        Ok(SentimentLexicon {
            valence,
            negations: default_negations(),
            boosters: default_boosters(),
        })
    }

    pub fn from_file(path: &Path) -> Result<SentimentLexicon> {
        let body = std::fs::read_to_string(path)?;
        Self::parse(&body, &path.display().to_string())
    }

    pub fn valence(&self, token: &str) -> f64 {
        self.valence.get(token).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.valence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valence.is_empty()
    }

    /// Test hook: flips the sign of every valence entry.
    pub fn flipped(&self) -> SentimentLexicon {
        SentimentLexicon {
            valence: self.valence.iter().map(|(k, v)| (k.clone(), -v)).collect(),
            negations: self.negations.clone(),
            boosters: self.boosters.clone(),
        }
    }
}

impl Default for SentimentLexicon {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON, "builtin-lexicon").expect("builtin lexicon parses")
    }
}

/// Negative / neutral / positive shares of the text's valence mass.
///
/// Each lexicon hit is adjusted by boosters and flipped by a negation within
/// the preceding three tokens; tokens without valence count toward the
/// neutral mass. The returned triple sums to 1 (neutral 1.0 for empty or
/// fully out-of-lexicon text).
pub fn sentiment_scores(text: &str, lex: &SentimentLexicon) -> (f64, f64, f64) {
    let tokens = tokenize(text);
    let mut pos_mass = 0.0;
    let mut neg_mass = 0.0;
    let mut neu_mass = 0.0;
    for (i, tok) in tokens.iter().enumerate() {
        let base = lex.valence(tok);
        if base == 0.0 {
            neu_mass += 1.0;
            continue;
        }
        let window_start = i.saturating_sub(RULE_WINDOW);
        let mut v = base;
        for prior in &tokens[window_start..i] {
            if let Some(&m) = lex.boosters.get(prior.as_str()) {
                v *= m;
            }
        }
        if tokens[window_start..i]
            .iter()
            .any(|p| lex.negations.contains(p.as_str()))
        {
            v *= NEGATION_FLIP;
        }
        if v > 0.0 {
            pos_mass += v;
        } else {
            neg_mass += -v;
        }
    }
    let total = pos_mass + neg_mass + neu_mass;
    if total == 0.0 {
        return (0.0, 1.0, 0.0);
    }
    (neg_mass / total, neu_mass / total, pos_mass / total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PosTag {
    Adjective,
    Adposition,
    Adverb,
    Conjunction,
    Determiner,
    Noun,
    Numeral,
    Particle,
    Pronoun,
    Verb,
    Punctuation,
}

impl PosTag {
    pub const ALL: [PosTag; 11] = [
        PosTag::Adjective,
        PosTag::Adposition,
        PosTag::Adverb,
        PosTag::Conjunction,
        PosTag::Determiner,
        PosTag::Noun,
        PosTag::Numeral,
        PosTag::Particle,
        PosTag::Pronoun,
        PosTag::Verb,
        PosTag::Punctuation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PosTag::Adjective => "adjective",
            PosTag::Adposition => "adposition",
            PosTag::Adverb => "adverb",
            PosTag::Conjunction => "conjunction",
            PosTag::Determiner => "determiner",
            PosTag::Noun => "noun",
            PosTag::Numeral => "numeral",
            PosTag::Particle => "particle",
            PosTag::Pronoun => "pronoun",
            PosTag::Verb => "verb",
            PosTag::Punctuation => "punctuation",
        }
    }

    pub fn index(&self) -> usize {
        PosTag::ALL.iter().position(|t| t == self).unwrap()
    }

    fn parse(s: &str) -> Option<PosTag> {
        PosTag::ALL.iter().copied().find(|t| t.name() == s)
    }
}

/// Dictionary-plus-suffix-rule tagger over the eleven-tag set; every token
/// receives exactly one tag, defaulting to noun.
#[derive(Debug, Clone)]
pub struct PosTagger {
    dict: HashMap<String, PosTag>,
    suffix_rules: Vec<(&'static str, PosTag)>,
}

fn default_suffix_rules() -> Vec<(&'static str, PosTag)> {
    vec![
        ("ly", PosTag::Adverb),
        ("ing", PosTag::Verb),
        ("ed", PosTag::Verb),
        ("ize", PosTag::Verb),
        ("ise", PosTag::Verb),
        ("ous", PosTag::Adjective),
        ("ful", PosTag::Adjective),
        ("ive", PosTag::Adjective),
        ("able", PosTag::Adjective),
        ("ible", PosTag::Adjective),
        ("al", PosTag::Adjective),
        ("ic", PosTag::Adjective),
        ("less", PosTag::Adjective),
        ("est", PosTag::Adjective),
        ("ness", PosTag::Noun),
        ("ment", PosTag::Noun),
        ("tion", PosTag::Noun),
        ("sion", PosTag::Noun),
        ("ship", PosTag::Noun),
        ("ers", PosTag::Noun),
        ("er", PosTag::Noun),
    ]
}

impl PosTagger {
    pub fn parse(body: &str, source: &str) -> Result<PosTagger> {
        let mut dict = HashMap::new();
        for (i, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut parts = line.splitn(2, '\t');
            let token = parts.next().unwrap_or_default().trim().to_lowercase();
            let tag = parts
                .next()
                .map(str::trim)
                .and_then(PosTag::parse)
                .ok_or_else(|| Error::Parse {
                    path: source.to_string(),
                    line: i + 1,
                    message: "expected `token<TAB>tag`".into(),
                })?;
            dict.insert(token, tag);
        }
        Ok(PosTagger {
            dict,
            suffix_rules: default_suffix_rules(),
        })
    }

    pub fn from_file(path: &Path) -> Result<PosTagger> {
        let body = std::fs::read_to_string(path)?;
        Self::parse(&body, &path.display().to_string())
    }

    pub fn tag(&self, token: &str) -> PosTag {
        if token.chars().all(|c| !c.is_alphanumeric()) && !token.is_empty() {
            return PosTag::Punctuation;
        }
        if token.chars().all(|c| c.is_ascii_digit()) && !token.is_empty() {
            return PosTag::Numeral;
        }
        if let Some(&t) = self.dict.get(token) {
            return t;
        }
        for (suffix, tag) in &self.suffix_rules {
            if token.len() > suffix.len() + 1 && token.ends_with(suffix) {
                return *tag;
            }
        }
        PosTag::Noun
    }
}

impl Default for PosTagger {
    fn default() -> Self {
        Self::parse(DEFAULT_POS_TAGS, "builtin-pos-tags").expect("builtin tag table parses")
    }
}

/// One binary flag per tag: set iff at least one title token carries it.
pub fn pos_presence(title: &str, tagger: &PosTagger) -> [bool; 11] {
    let mut flags = [false; 11];
    for tok in tokenize(title) {
        flags[tagger.tag(&tok).index()] = true;
    }
    flags
}

fn token_set(text: &str) -> HashSet<String> {
    tokenize(text).into_iter().collect()
}

fn set_jaccard(a: &HashSet<String>, b: &HashSet<String>) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(b).count() as f64;
    let union = a.union(b).count() as f64;
    inter / union
}

/// 1 minus the largest token-set Jaccard similarity against any prior title;
/// 1.0 when there are no priors.
pub fn title_novelty(title: &str, prior_titles: &[&str]) -> f64 {
    if prior_titles.is_empty() {
        return 1.0;
    }
    let mine = token_set(title);
    let best = prior_titles
        .iter()
        .map(|p| set_jaccard(&mine, &token_set(p)))
        .fold(0.0f64, f64::max);
    1.0 - best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenize_rules() {
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Run, hike!"), vec!["run", ",", "hike", "!"]);
        let toks = tokenize("Don't Panic: 3 tips & tricks!!");
        assert_eq!(
            toks,
            vec!["don", "'", "t", "panic", ":", "3", "tips", "&", "tricks", "!", "!"]
        );
    }

    #[test]
    fn tokenize_idempotent() {
        for text in ["Run, hike!", "A (very) odd-title...", "hello world"] {
            let t1 = tokenize(text);
            let t2 = tokenize(&t1.join(" "));
            assert_eq!(t1, t2);
        }
    }

    fn fixture_lexicon() -> SentimentLexicon {
        SentimentLexicon::parse("good\t1.9\nbad\t-1.5\ngreat\t2.1\n", "fixture").unwrap()
    }

    #[test]
    fn neutral_guards() {
        let lex = fixture_lexicon();
        assert_eq!(sentiment_scores("", &lex), (0.0, 1.0, 0.0));
        assert_eq!(sentiment_scores("zzz qqq xxx", &lex), (0.0, 1.0, 0.0));
    }

    #[test]
    fn positive_only_text() {
        let lex = fixture_lexicon();
        let (neg, _neu, pos) = sentiment_scores("good great good", &lex);
        assert_eq!(neg, 0.0);
        assert!(pos > 0.0);
    }

    #[test]
    fn negation_flips() {
        let lex = fixture_lexicon();
        let (neg, _neu, pos) = sentiment_scores("not good", &lex);
        assert!(neg > 0.0, "negated positive should carry negative mass");
        assert_eq!(pos, 0.0);
        // flipped mass is 1.9 * 0.74 = 1.406 against one neutral token
        assert!((neg - 1.406 / 2.406).abs() < 1e-9);
    }

    #[test]
    fn booster_amplifies() {
        let lex = fixture_lexicon();
        let (_, _, plain) = sentiment_scores("good", &lex);
        let (_, _, boosted) = sentiment_scores("very good", &lex);
        // boosted valence 1.9 * 1.293 vs one extra neutral token
        assert!(boosted > 0.0 && plain > 0.0);
        let expect = 1.9 * 1.293 / (1.9 * 1.293 + 1.0);
        assert!((boosted - expect).abs() < 1e-9);
    }

    #[test]
    fn shares_sum_to_one_and_swap() {
        let lex = SentimentLexicon::default();
        let texts = [
            "a great fun evening, not boring at all!",
            "terrible venue but amazing people",
            "hike the beautiful trail",
        ];
        for t in texts {
            let (neg, neu, pos) = sentiment_scores(t, &lex);
            assert!((neg + neu + pos - 1.0).abs() < 1e-9);
            let (neg2, neu2, pos2) = sentiment_scores(t, &lex.flipped());
            assert_eq!(neg, pos2);
            assert_eq!(pos, neg2);
            assert_eq!(neu, neu2);
        }
    }

    #[test]
    fn pos_presence_fixture() {
        let tagger = PosTagger::parse("hike\tverb\n", "fixture").unwrap();
        let flags = pos_presence("Hike!", &tagger);
        assert!(flags[PosTag::Verb.index()]);
        assert!(flags[PosTag::Punctuation.index()]);
        let set: usize = flags.iter().filter(|&&f| f).count();
        assert_eq!(set, 2);
        assert_eq!(pos_presence("", &tagger), [false; 11]);
        // unknown token defaults to noun
        let flags = pos_presence("zzzqx", &tagger);
        assert!(flags[PosTag::Noun.index()]);
        assert_eq!(flags.iter().filter(|&&f| f).count(), 1);
    }

    #[test]
    fn pos_presence_order_invariant() {
        let tagger = PosTagger::default();
        let a = pos_presence("run the great trail", &tagger);
        let b = pos_presence("trail great the run run", &tagger);
        assert_eq!(a, b);
    }

    #[test]
    fn numerals_and_suffixes() {
        let tagger = PosTagger::default();
        assert_eq!(tagger.tag("42"), PosTag::Numeral);
        assert_eq!(tagger.tag("quickly"), PosTag::Adverb);
        assert_eq!(tagger.tag("climbing"), PosTag::Verb);
        assert_eq!(tagger.tag(","), PosTag::Punctuation);
    }

    #[test]
    fn novelty_values() {
        assert_eq!(title_novelty("weekly hike", &[]), 1.0);
        assert_eq!(title_novelty("weekly hike", &["weekly hike"]), 0.0);
        let n = title_novelty("a b", &["b c", "x y"]);
        assert!((n - (1.0 - 1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn novelty_nonincreasing_in_priors() {
        let title = "jazz night downtown";
        let mut priors: Vec<&str> = Vec::new();
        let candidates = ["open mic", "jazz brunch", "night market", "jazz night uptown"];
        let mut last = title_novelty(title, &priors);
        for c in candidates {
            priors.push(c);
            let n = title_novelty(title, &priors);
            assert!(n <= last);
            last = n;
        }
    }

    #[test]
    fn default_tables_load() {
        let lex = SentimentLexicon::default();
        assert!(lex.len() > 100);
        assert!(lex.valence("great") > 0.0);
        assert!(lex.valence("terrible") < 0.0);
        let tagger = PosTagger::default();
        assert_eq!(tagger.tag("the"), PosTag::Determiner);
    }
}
