use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{PreferencePairRecord, QueryRecord, TableArbiter};
use crate::error::{Error, Result};

fn read_jsonl<T: DeserializeOwned>(input: impl BufRead, mut check: impl FnMut(&T) -> Result<()>) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: T =
            serde_json::from_str(&line).map_err(|e| Error::BadLine { line: line_no, message: e.to_string() })?;
        check(&value).map_err(|e| Error::BadLine { line: line_no, message: e.to_string() })?;
        out.push(value);
    }
    Ok(out)
}

/// Reads one [`QueryRecord`] per line. Blank lines are skipped.
pub fn read_queries_jsonl(input: impl BufRead) -> Result<Vec<QueryRecord>> {
    read_jsonl(input, QueryRecord::validate)
}

pub fn read_pairs_jsonl(input: impl BufRead) -> Result<Vec<PreferencePairRecord>> {
    read_jsonl(input, |p: &PreferencePairRecord| {
        if p.chosen.is_empty() || p.rejected.is_empty() {
            return Err(Error::invalid(format!("pair '{}' has an empty response", p.query_id)));
        }
        Ok(())
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArbiterLine {
    id: String,
    alt_answer: String,
}

/// Reads `{"id": ..., "alt_answer": ...}` lines. A repeated id is an error.
pub fn read_arbiter_table(input: impl BufRead) -> Result<TableArbiter> {
    let mut answers = BTreeMap::new();
    read_jsonl(input, |l: &ArbiterLine| {
        if answers.insert(l.id.clone(), l.alt_answer.clone()).is_some() {
            return Err(Error::invalid(format!("duplicate arbiter id '{}'", l.id)));
        }
        Ok(())
    })?;
    Ok(TableArbiter::new(answers))
}

pub fn write_arbiter_table(out: impl Write, table: &TableArbiter) -> Result<()> {
    let lines: Vec<ArbiterLine> =
        table.answers.iter().map(|(id, alt)| ArbiterLine { id: id.clone(), alt_answer: alt.clone() }).collect();
    write_jsonl(out, &lines)
}

/// Writes one compact JSON object per line.
pub fn write_jsonl<T: Serialize>(mut out: impl Write, records: &[T]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Io(e.into()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUERY: &str = r#"{"id":"q1","category":"instruction_follow","prompt":[1,2],"ground_truth":"A","candidates":[{"tokens":[3],"final_answer":"A","verified":true,"quality":0.5,"source_round":0}]}"#;

    #[test]
    fn reads_queries_and_skips_blank_lines() {
        let text = format!("{QUERY}\n\n{}\n", QUERY.replace("q1", "q2"));
        let qs = read_queries_jsonl(text.as_bytes()).unwrap();
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[1].id, "q2");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{QUERY}\n{{not json\n");
        match read_queries_jsonl(text.as_bytes()).unwrap_err() {
            Error::BadLine { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn unknown_category_and_empty_candidates_rejected() {
        let bad_cat = QUERY.replace("instruction_follow", "poetry");
        assert!(matches!(read_queries_jsonl(bad_cat.as_bytes()), Err(Error::BadLine { line: 1, .. })));
        let no_cands = r#"{"id":"q","category":"math","prompt":[],"ground_truth":"A","candidates":[]}"#;
        assert!(matches!(read_queries_jsonl(no_cands.as_bytes()), Err(Error::BadLine { line: 1, .. })));
    }

    #[test]
    fn arbiter_table() {
        let t = "{\"id\":\"a\",\"alt_answer\":\"7\"}\n{\"id\":\"b\",\"alt_answer\":\"1\"}\n";
        let arb = read_arbiter_table(t.as_bytes()).unwrap();
        assert_eq!(arb.answers["a"], "7");
        let dup = "{\"id\":\"a\",\"alt_answer\":\"7\"}\n{\"id\":\"a\",\"alt_answer\":\"1\"}\n";
        assert!(read_arbiter_table(dup.as_bytes()).is_err());
    }

    #[test]
    fn pairs_round_trip() {
        let text = r#"{"query_id":"q","category":"math","prompt":[1],"chosen":[4,5],"rejected":[6],"verify_score":0.5,"pass_rate":0.25,"gt_corrected":false}"#;
        let pairs = read_pairs_jsonl(text.as_bytes()).unwrap();
        let mut out = Vec::new();
        write_jsonl(&mut out, &pairs).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{text}\n"));
    }
}
