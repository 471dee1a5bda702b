//! Problems, reasoning chains, step segmentation, answer extraction, and
//! grading.
//!
//! Everything here is an immutable value after construction and safe to share
//! across worker threads.

use std::sync::LazyLock;

use num_rational::BigRational;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{format_rational, parse_rational};

/// One problem instance: an id, the question text, and the graded answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub id: String,
    pub question: String,
    pub gold_answer: Answer,
}

impl Problem {
    pub fn new(id: impl Into<String>, question: impl Into<String>, gold: &str) -> Result<Self> {
        let gold = gold.trim();
        if gold.is_empty() {
            return Err(Error::Config("gold_answer must be non-empty".into()));
        }
        Ok(Self {
            id: id.into(),
            question: question.into(),
            gold_answer: Answer::parse(gold),
        })
    }
}

/// A final answer: the raw text plus its exact numeric value when the text
/// normalizes to a number.
#[derive(Debug, Clone)]
pub struct Answer {
    pub raw: String,
    pub numeric: Option<BigRational>,
}

impl Answer {
    /// Builds an answer from raw text, normalizing commas, currency symbols,
    /// and surrounding whitespace before attempting an exact numeric parse.
    pub fn parse(raw: &str) -> Self {
        let raw = raw.trim().to_string();
        let numeric = parse_rational(&raw);
        Answer { raw, numeric }
    }

    /// Normalized string form used as the non-numeric comparison fallback.
    pub fn normalized(&self) -> String {
        normalize_answer_text(&self.raw)
    }
}

impl PartialEq for Answer {
    fn eq(&self, other: &Self) -> bool {
        grade(self, other)
    }
}

impl Serialize for Answer {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut s = ser.serialize_struct("Answer", 2)?;
        s.serialize_field("raw", &self.raw)?;
        s.serialize_field("numeric", &self.numeric.as_ref().map(format_rational))?;
        s.end()
    }
}

impl<'de> Deserialize<'de> for Answer {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            raw: String,
            #[serde(default)]
            numeric: Option<String>,
        }
        let repr = Repr::deserialize(de)?;
        let numeric = repr.numeric.as_deref().and_then(parse_rational);
        Ok(Answer {
            raw: repr.raw,
            numeric,
        })
    }
}

/// Grades a predicted answer against gold: exact rational equality when both
/// sides are numeric, otherwise normalized string equality.
pub fn grade(pred: &Answer, gold: &Answer) -> bool {
    match (&pred.numeric, &gold.numeric) {
        (Some(p), Some(g)) => p == g,
        _ => pred.normalized() == gold.normalized(),
    }
}

fn normalize_answer_text(raw: &str) -> String {
    let mut s: String = raw
        .trim()
        .trim_start_matches(['$', '€', '£', '¥'])
        .chars()
        .filter(|c| *c != ',')
        .collect();
    if s.ends_with('.') {
        s.pop();
    }
    s.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// One reasoning step: 1-based index, trimmed text, and the tokenized view.
///
/// Tokens are produced by a fixed whitespace-and-punctuation tokenizer so
/// token counts are reproducible without any model; concatenating the tokens
/// recovers the text up to whitespace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningStep {
    pub index: usize,
    pub text: String,
    pub tokens: Vec<String>,
}

impl ReasoningStep {
    pub fn new(index: usize, text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = tokenize(&text);
        ReasoningStep {
            index,
            text,
            tokens,
        }
    }

    /// Rebuilds a step from surviving tokens after pruning; the text is the
    /// space-joined token list, which retokenizes to the same tokens.
    pub fn from_tokens(index: usize, tokens: Vec<String>) -> Self {
        let text = tokens.join(" ");
        ReasoningStep {
            index,
            text,
            tokens,
        }
    }

    pub fn token_count(&self) -> usize {
        self.tokens.len()
    }
}

/// An ordered chain of reasoning steps attached to a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningChain {
    pub problem: Problem,
    pub steps: Vec<ReasoningStep>,
    pub final_answer: Option<Answer>,
}

impl ReasoningChain {
    /// Assembles a chain, re-indexing steps 1..K.
    pub fn new(problem: Problem, step_texts: Vec<String>) -> Result<Self> {
        if step_texts.is_empty() {
            return Err(Error::EmptyChain);
        }
        let steps = step_texts
            .into_iter()
            .enumerate()
            .map(|(i, t)| ReasoningStep::new(i + 1, t))
            .collect();
        Ok(ReasoningChain {
            problem,
            steps,
            final_answer: None,
        })
    }

    /// Segments raw chain-of-thought text and builds the chain.
    pub fn from_text(problem: Problem, raw_text: &str) -> Result<Self> {
        Self::new(problem, segment_chain(raw_text)?)
    }

    pub fn total_steps(&self) -> usize {
        self.steps.len()
    }

    /// Joins the steps back into one text block (blank-line separated).
    pub fn joined_text(&self) -> String {
        self.steps
            .iter()
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    /// Total token count across all steps.
    pub fn token_count(&self) -> usize {
        self.steps.iter().map(ReasoningStep::token_count).sum()
    }

    /// Extracts and records the final answer from the chain's own text.
    pub fn with_extracted_answer(mut self, kind: DatasetKind) -> Self {
        self.final_answer = extract_final_answer(&self.joined_text(), kind).ok();
        self
    }
}

/// Which extraction convention applies to a piece of answer-bearing text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Gsm8k,
    Math,
    Plain,
}

impl std::str::FromStr for DatasetKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gsm8k" => Ok(DatasetKind::Gsm8k),
            "math" => Ok(DatasetKind::Math),
            "plain" => Ok(DatasetKind::Plain),
            other => Err(Error::Config(format!("unknown dataset kind '{other}'"))),
        }
    }
}

static STEP_MARKER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\bStep\s+\d+\s*[:.)]\s*").expect("valid regex"));
static BLANK_LINE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\n\s*\n").expect("valid regex"));
static SENTENCE_END: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[.!?]\s+").expect("valid regex"));

/// Splits raw chain-of-thought text into trimmed, non-empty step texts.
///
/// Rules, in priority order: explicit "Step N" markers, blank-line separated
/// blocks, then sentence boundaries (terminal punctuation followed by
/// whitespace). Blank lines inside a marker-delimited step are collapsed so
/// that re-segmenting the blank-line join of the output reproduces it.
pub fn segment_chain(raw_text: &str) -> Result<Vec<String>> {
    if raw_text.trim().is_empty() {
        return Err(Error::EmptyChain);
    }

    let pieces: Vec<String> = if STEP_MARKER.is_match(raw_text) {
        let mut parts = Vec::new();
        let mut last = 0;
        for m in STEP_MARKER.find_iter(raw_text) {
            parts.push(&raw_text[last..m.start()]);
            last = m.end();
        }
        parts.push(&raw_text[last..]);
        parts
            .into_iter()
            .map(|p| BLANK_LINE.replace_all(p, "\n").into_owned())
            .collect()
    } else if BLANK_LINE.is_match(raw_text) {
        BLANK_LINE.split(raw_text).map(str::to_string).collect()
    } else {
        let mut parts = Vec::new();
        let mut last = 0;
        for m in SENTENCE_END.find_iter(raw_text) {
            // keep the terminal punctuation with its sentence
            let end = m.start() + 1;
            parts.push(raw_text[last..end].to_string());
            last = m.end();
        }
        parts.push(raw_text[last..].to_string());
        parts
    };

    let steps: Vec<String> = pieces
        .into_iter()
        .map(|p| p.trim().to_string())
        .filter(|p| !p.is_empty())
        .collect();
    if steps.is_empty() {
        return Err(Error::EmptyChain);
    }
    Ok(steps)
}

static NUMBER_TOKEN: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?|[A-Za-z]+|\S").expect("valid regex")
});

/// Deterministic whitespace-and-punctuation tokenizer.
///
/// A token is a number (thousands separators and decimals kept intact), an
/// alphabetic run, or a single non-space character. Every non-whitespace
/// character lands in exactly one token.
pub fn tokenize(text: &str) -> Vec<String> {
    NUMBER_TOKEN
        .find_iter(text)
        .map(|m| m.as_str().to_string())
        .collect()
}

static ANSWER_NUMBER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"-?[$€£¥]?(?:\d{1,3}(?:,\d{3})+(?:\.\d+)?|\d+(?:\.\d+)?)").expect("valid regex")
});

/// Extracts the final answer from raw solution text.
///
/// GSM8K mode takes what follows the last `####` delimiter. Math and plain
/// modes take the last `\boxed{...}` if present, otherwise the last number in
/// the final segmented step.
pub fn extract_final_answer(raw_text: &str, kind: DatasetKind) -> Result<Answer> {
    match kind {
        DatasetKind::Gsm8k => {
            let idx = raw_text.rfind("####").ok_or(Error::AnswerMissing)?;
            let tail = raw_text[idx + 4..].trim();
            if tail.is_empty() {
                return Err(Error::AnswerMissing);
            }
            Ok(Answer::parse(tail))
        }
        DatasetKind::Math | DatasetKind::Plain => {
            if let Some(content) = last_boxed(raw_text) {
                return Ok(Answer::parse(&content));
            }
            let last_step = segment_chain(raw_text)?
                .pop()
                .ok_or(Error::AnswerMissing)?;
            let m = ANSWER_NUMBER
                .find_iter(&last_step)
                .last()
                .ok_or(Error::AnswerMissing)?;
            Ok(Answer::parse(m.as_str()))
        }
    }
}

/// Content of the last `\boxed{...}` group, brace-matched.
fn last_boxed(text: &str) -> Option<String> {
    let start = text.rfind("\\boxed{")?;
    let body = &text[start + "\\boxed{".len()..];
    let mut depth = 1usize;
    for (i, c) in body.char_indices() {
        match c {
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(body[..i].to_string());
                }
            }
            _ => {}
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn problem() -> Problem {
        Problem::new("p1", "q", "1015").unwrap()
    }

    #[test]
    fn segments_on_step_markers() {
        let steps = segment_chain("Step 1: a.\nStep 2: b.").unwrap();
        assert_eq!(steps, vec!["a.", "b."]);
    }

    #[test]
    fn segments_on_sentences() {
        let steps = segment_chain("First, 125 * 8 = 1,000. Then 1,000 + 15 = 1,015.").unwrap();
        assert_eq!(steps.len(), 2);
        assert_eq!(steps[0], "First, 125 * 8 = 1,000.");
        assert_eq!(steps[1], "Then 1,000 + 15 = 1,015.");
    }

    #[test]
    fn segments_on_blank_lines() {
        let steps = segment_chain("block one\nstill one\n\nblock two").unwrap();
        assert_eq!(steps, vec!["block one\nstill one", "block two"]);
    }

    #[test]
    fn single_sentence_is_one_step() {
        assert_eq!(segment_chain("single sentence").unwrap().len(), 1);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(segment_chain("  \n "), Err(Error::EmptyChain)));
    }

    #[test]
    fn segmentation_is_idempotent_on_join() {
        for text in [
            "Step 1: a.\nStep 2: b c d.",
            "First, 125 * 8 = 1,000. Then 1,000 + 15 = 1,015.",
            "one\n\ntwo\n\nthree",
            "single sentence",
        ] {
            let steps = segment_chain(text).unwrap();
            let rejoined = steps.join("\n\n");
            assert_eq!(segment_chain(&rejoined).unwrap(), steps, "text: {text:?}");
        }
    }

    #[test]
    fn tokenizer_keeps_numbers_whole() {
        let toks = tokenize("Then 1,000 + 15 = 1,015.");
        assert_eq!(toks, vec!["Then", "1,000", "+", "15", "=", "1,015", "."]);
    }

    #[test]
    fn tokens_cover_all_non_whitespace() {
        let text = "Bob's $5.50, or (3 × 4)?";
        let concat: String = tokenize(text).concat();
        let stripped: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        assert_eq!(concat, stripped);
    }

    #[test]
    fn gsm8k_extraction_takes_tail_after_delimiter() {
        let a = extract_final_answer("steps...\n#### 1,015", DatasetKind::Gsm8k).unwrap();
        assert_eq!(a.numeric, parse_rational("1015"));
    }

    #[test]
    fn plain_extraction_takes_last_number_of_final_step() {
        let a = extract_final_answer("the answer is 1,015.", DatasetKind::Plain).unwrap();
        assert_eq!(a.numeric, parse_rational("1015"));
    }

    #[test]
    fn math_extraction_prefers_boxed() {
        let a =
            extract_final_answer("so we get \\boxed{x+1} finally. 99", DatasetKind::Math).unwrap();
        assert_eq!(a.raw, "x+1");
        assert!(a.numeric.is_none());
    }

    #[test]
    fn missing_answer_is_an_error_not_a_crash() {
        assert!(matches!(
            extract_final_answer("no numbers here", DatasetKind::Plain),
            Err(Error::AnswerMissing)
        ));
        assert!(matches!(
            extract_final_answer("nothing", DatasetKind::Gsm8k),
            Err(Error::AnswerMissing)
        ));
    }

    #[test]
    fn grading_normalizes_separators() {
        assert!(grade(&Answer::parse("1015"), &Answer::parse("1,015")));
        assert!(!grade(&Answer::parse("1020"), &Answer::parse("1015")));
        assert!(grade(&Answer::parse("x+1"), &Answer::parse("x+1")));
        assert!(grade(&Answer::parse("$3.50"), &Answer::parse("3.5")));
    }

    #[test]
    fn grading_is_reflexive_and_symmetric() {
        for raw in ["1015", "x+1", "0.5", "-3"] {
            let a = Answer::parse(raw);
            assert!(grade(&a, &a));
        }
        let (a, b) = (Answer::parse("1,015"), Answer::parse("1015.0"));
        assert_eq!(grade(&a, &b), grade(&b, &a));
    }

    #[test]
    fn token_count_is_additive() {
        let c1 = ReasoningChain::new(problem(), vec!["a b c".into()]).unwrap();
        let c2 = ReasoningChain::new(problem(), vec!["d e".into(), "f g".into()]).unwrap();
        let joined = ReasoningChain::new(
            problem(),
            c1.steps
                .iter()
                .chain(c2.steps.iter())
                .map(|s| s.text.clone())
                .collect(),
        )
        .unwrap();
        assert_eq!(joined.token_count(), c1.token_count() + c2.token_count());
        assert_eq!(c1.token_count(), 3);
        assert_eq!(joined.token_count(), 7);
    }

    #[test]
    fn chain_indices_are_contiguous() {
        let c = ReasoningChain::from_text(problem(), "a. b. c.").unwrap();
        let idx: Vec<usize> = c.steps.iter().map(|s| s.index).collect();
        assert_eq!(idx, vec![1, 2, 3]);
    }

    #[test]
    fn answer_serde_round_trips() {
        let a = Answer::parse("1,015");
        let json = serde_json::to_string(&a).unwrap();
        let back: Answer = serde_json::from_str(&json).unwrap();
        assert_eq!(back.numeric, a.numeric);
        assert_eq!(back.raw, a.raw);
    }
}
