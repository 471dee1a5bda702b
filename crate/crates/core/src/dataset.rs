//! File ingestion: problem datasets, chain corpora, and external token-score
//! files. All inputs are JSON-lines with one object per line; parse failures
//! report the offending line number.

use std::collections::HashMap;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::chain::{DatasetKind, Problem, ReasoningChain};
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
struct DatasetLine {
    id: String,
    question: String,
    answer: String,
}

/// Loads a problem dataset. GSM8K-style answers carry the reasoning before a
/// `####` delimiter; the gold answer is what follows it. Duplicate ids are
/// rejected.
pub fn load_dataset(path: &Path, kind: DatasetKind) -> Result<Vec<Problem>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut problems = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: DatasetLine = serde_json::from_str(&line).map_err(|e| Error::Dataset {
            line: line_no,
            message: e.to_string(),
        })?;
        if seen.insert(parsed.id.clone(), line_no).is_some() {
            return Err(Error::DuplicateId {
                id: parsed.id,
                line: line_no,
            });
        }
        let gold = match kind {
            DatasetKind::Gsm8k => parsed
                .answer
                .rsplit_once("####")
                .map(|(_, tail)| tail.trim().to_string())
                .unwrap_or_else(|| parsed.answer.trim().to_string()),
            DatasetKind::Math | DatasetKind::Plain => parsed.answer.trim().to_string(),
        };
        let problem =
            Problem::new(parsed.id, parsed.question, &gold).map_err(|e| Error::Dataset {
                line: line_no,
                message: e.to_string(),
            })?;
        problems.push(problem);
    }
    if problems.is_empty() {
        return Err(Error::DegenerateInput(format!(
            "dataset {} contains no problems",
            path.display()
        )));
    }
    Ok(problems)
}

/// One stored reasoning chain; either pre-segmented steps or raw text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainRecord {
    pub id: String,
    pub question: String,
    pub gold_answer: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub steps: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl ChainRecord {
    pub fn to_chain(&self) -> Result<ReasoningChain> {
        let problem = Problem::new(&self.id, &self.question, &self.gold_answer)?;
        if !self.steps.is_empty() {
            ReasoningChain::new(problem, self.steps.clone())
        } else if let Some(text) = &self.text {
            ReasoningChain::from_text(problem, text)
        } else {
            Err(Error::DegenerateInput(format!(
                "chain '{}' has neither steps nor text",
                self.id
            )))
        }
    }

    pub fn from_chain(chain: &ReasoningChain) -> Self {
        ChainRecord {
            id: chain.problem.id.clone(),
            question: chain.problem.question.clone(),
            gold_answer: chain.problem.gold_answer.raw.clone(),
            steps: chain.steps.iter().map(|s| s.text.clone()).collect(),
            text: None,
        }
    }
}

/// Loads a chain corpus (JSON-lines of [`ChainRecord`]).
pub fn load_chains(path: &Path) -> Result<Vec<ReasoningChain>> {
    let file = std::fs::File::open(path)?;
    let reader = BufReader::new(file);
    let mut chains = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ChainRecord = serde_json::from_str(&line).map_err(|e| Error::Dataset {
            line: line_no,
            message: e.to_string(),
        })?;
        if seen.insert(record.id.clone(), line_no).is_some() {
            return Err(Error::DuplicateId {
                id: record.id,
                line: line_no,
            });
        }
        chains.push(record.to_chain().map_err(|e| Error::Dataset {
            line: line_no,
            message: e.to_string(),
        })?);
    }
    if chains.is_empty() {
        return Err(Error::DegenerateInput(format!(
            "chain file {} is empty",
            path.display()
        )));
    }
    Ok(chains)
}

#[derive(Debug, Deserialize, Serialize)]
struct ScoreLine {
    id: String,
    scores: Vec<f64>,
}

/// Pre-computed token importance scores keyed by chain id, aligned to the
/// artifact tokenizer's output for that chain.
#[derive(Debug, Clone, Default)]
pub struct ExternalScores {
    map: HashMap<String, Vec<f64>>,
}

impl ExternalScores {
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        let reader = BufReader::new(file);
        let mut map = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: ScoreLine = serde_json::from_str(&line).map_err(|e| Error::Dataset {
                line: i + 1,
                message: e.to_string(),
            })?;
            map.insert(parsed.id, parsed.scores);
        }
        Ok(ExternalScores { map })
    }

    pub fn get(&self, id: &str) -> Option<&[f64]> {
        self.map.get(id).map(Vec::as_slice)
    }

    pub fn insert(&mut self, id: impl Into<String>, scores: Vec<f64>) {
        self.map.insert(id.into(), scores);
    }
}

/// Writes bytes atomically: temp file in the destination directory, then
/// rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        std::fs::create_dir_all(dir)?;
    }
    let mut tmp = match dir {
        Some(dir) => tempfile::NamedTempFile::new_in(dir)?,
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    use std::io::Write;
    tmp.write_all(bytes)?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn loads_two_problems() {
        let f = write_lines(&[
            r#"{"id":"a","question":"q1","answer":"steps\n#### 18"}"#,
            r#"{"id":"b","question":"q2","answer":"42"}"#,
        ]);
        let problems = load_dataset(f.path(), DatasetKind::Gsm8k).unwrap();
        assert_eq!(problems.len(), 2);
        assert_eq!(problems[0].gold_answer.raw, "18");
        assert_eq!(problems[1].gold_answer.raw, "42");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let f = write_lines(&[
            r#"{"id":"a","question":"q1","answer":"1"}"#,
            r#"{"id":"a","question":"q2","answer":"2"}"#,
        ]);
        let err = load_dataset(f.path(), DatasetKind::Plain).unwrap_err();
        assert!(matches!(err, Error::DuplicateId { line: 2, .. }));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_lines(&[
            r#"{"id":"a","question":"q1","answer":"1"}"#,
            r#"{"id":"b","question":"q2""#,
        ]);
        let err = load_dataset(f.path(), DatasetKind::Plain).unwrap_err();
        assert!(matches!(err, Error::Dataset { line: 2, .. }));
    }

    #[test]
    fn chain_records_round_trip() {
        let f = write_lines(&[
            r#"{"id":"c1","question":"q","gold_answer":"7","steps":["3 + 4 = 7.","The answer is 7."]}"#,
            r#"{"id":"c2","question":"q","gold_answer":"5","text":"First 2 + 3 = 5. The answer is 5."}"#,
        ]);
        let chains = load_chains(f.path()).unwrap();
        assert_eq!(chains[0].total_steps(), 2);
        assert_eq!(chains[1].total_steps(), 2);
        let record = ChainRecord::from_chain(&chains[0]);
        assert_eq!(record.steps.len(), 2);
    }

    #[test]
    fn score_file_lookup() {
        let f = write_lines(&[r#"{"id":"c1","scores":[0.5,0.25,1.0]}"#]);
        let scores = ExternalScores::load(f.path()).unwrap();
        assert_eq!(scores.get("c1"), Some(&[0.5, 0.25, 1.0][..]));
        assert!(scores.get("missing").is_none());
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
    }
}
