//! Question datasets.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph};
use crate::text::{TokenId, Tokenizer};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuestionInstance {
    pub text: String,
    /// Filled by [`QuestionInstance::tokenize`]; empty until then.
    pub tokens: Vec<TokenId>,
    /// Sorted, non-empty.
    pub topic_entities: Vec<EntityId>,
    /// Sorted, non-empty.
    pub answers: Vec<EntityId>,
    pub hop_annotation: Option<u32>,
}

impl QuestionInstance {
    pub fn new(
        text: impl Into<String>,
        topics: impl IntoIterator<Item = EntityId>,
        answers: impl IntoIterator<Item = EntityId>,
        hop_annotation: Option<u32>,
    ) -> Result<Self> {
        let topic_entities: Vec<_> = topics.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        let answers: Vec<_> = answers.into_iter().collect::<BTreeSet<_>>().into_iter().collect();
        if topic_entities.is_empty() {
            return Err(Error::Empty("topic entities".into()));
        }
        if answers.is_empty() {
            return Err(Error::Empty("answers".into()));
        }
        Ok(Self {
            text: text.into(),
            tokens: Vec::new(),
            topic_entities,
            answers,
            hop_annotation,
        })
    }

    pub fn tokenize(&mut self, tokenizer: &Tokenizer) {
        self.tokens = tokenizer.tokenize(&crate::text::mask_mentions(&self.text));
    }

    pub fn is_answer(&self, e: EntityId) -> bool {
        self.answers.binary_search(&e).is_ok()
    }
}

/// Parsed dataset and the number of lines skipped during resolution.
#[derive(Clone, Debug, Default)]
pub struct QaDataset {
    pub instances: Vec<QuestionInstance>,
    pub skipped: usize,
}

impl QaDataset {
    pub fn tokenize(&mut self, tokenizer: &Tokenizer) {
        for q in &mut self.instances {
            q.tokenize(tokenizer);
        }
    }
}

fn bracket_spans(text: &str) -> Vec<&str> {
    let mut spans = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        let after = &rest[open + 1..];
        match after.find(']') {
            Some(close) => {
                spans.push(after[..close].trim());
                rest = &after[close + 1..];
            }
            None => break,
        }
    }
    spans
}

fn parse_hop(field: Option<&str>, path: &Path, line: usize) -> Result<Option<u32>> {
    match field.map(str::trim).filter(|s| !s.is_empty()) {
        None => Ok(None),
        Some(s) => s.parse::<u32>().ok().filter(|h| *h > 0).map(Some).ok_or_else(|| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("hop annotation {s:?} is not a positive integer"),
        }),
    }
}

fn resolve_all(kg: &KnowledgeGraph, labels: &[&str]) -> Option<Vec<EntityId>> {
    labels
        .iter()
        .filter(|l| !l.is_empty())
        .map(|l| kg.entities().id(l))
        .collect()
}

/// Lines of `question<TAB>ans1|ans2[<TAB>hop]` with topic entities in `[brackets]`.
pub fn load_qa(path: &Path, kg: &KnowledgeGraph) -> Result<QaDataset> {
    let text = fs::read_to_string(path)?;
    let mut ds = QaDataset::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 2 || fields.len() > 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected question<TAB>answers[<TAB>hop]".into(),
            });
        }
        let hop = parse_hop(fields.get(2).copied(), path, i + 1)?;
        let topics = resolve_all(kg, &bracket_spans(fields[0]));
        let answers: Vec<&str> = fields[1].split('|').map(str::trim).collect();
        let answers = resolve_all(kg, &answers);
        match (topics, answers) {
            (Some(t), Some(a)) if !t.is_empty() && !a.is_empty() => {
                ds.instances
                    .push(QuestionInstance::new(fields[0].trim(), t, a, hop)?);
            }
            _ => ds.skipped += 1,
        }
    }
    if ds.instances.is_empty() {
        return Err(Error::Empty(format!(
            "no parsable questions in {}",
            path.display()
        )));
    }
    Ok(ds)
}

/// Lines of `question<TAB>topic1|topic2<TAB>ans1|ans2[<TAB>hop]` for datasets
/// without in-text entity markup.
pub fn load_qa_with_topics(path: &Path, kg: &KnowledgeGraph) -> Result<QaDataset> {
    let text = fs::read_to_string(path)?;
    let mut ds = QaDataset::default();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 || fields.len() > 4 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: "expected question<TAB>topics<TAB>answers[<TAB>hop]".into(),
            });
        }
        let hop = parse_hop(fields.get(3).copied(), path, i + 1)?;
        let topics: Vec<&str> = fields[1].split('|').map(str::trim).collect();
        let answers: Vec<&str> = fields[2].split('|').map(str::trim).collect();
        match (resolve_all(kg, &topics), resolve_all(kg, &answers)) {
            (Some(t), Some(a)) if !t.is_empty() && !a.is_empty() => {
                ds.instances
                    .push(QuestionInstance::new(fields[0].trim(), t, a, hop)?);
            }
            _ => ds.skipped += 1,
        }
    }
    if ds.instances.is_empty() {
        return Err(Error::Empty(format!(
            "no parsable questions in {}",
            path.display()
        )));
    }
    Ok(ds)
}

/// Writes the bracketed format read by [`load_qa`].
pub fn write_qa(path: &Path, kg: &KnowledgeGraph, questions: &[QuestionInstance]) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for q in questions {
        let answers: Vec<&str> = q.answers.iter().map(|&a| kg.entity_label(a)).collect();
        write!(f, "{}\t{}", q.text, answers.join("|"))?;
        if let Some(h) = q.hop_annotation {
            write!(f, "\t{h}")?;
        }
        writeln!(f)?;
    }
    f.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kg() -> KnowledgeGraph {
        KnowledgeGraph::from_labeled([
            ("George Lucas", "directed", "Star Wars"),
            ("George Lucas", "directed", "THX 1138"),
        ])
        .unwrap()
    }

    fn tmp(s: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(s.as_bytes()).unwrap();
        f
    }

    #[test]
    fn bracketed_question_resolves() {
        let f = tmp("what films did [George Lucas] direct\tStar Wars\n");
        let ds = load_qa(f.path(), &kg()).unwrap();
        assert_eq!(ds.instances.len(), 1);
        assert_eq!(ds.instances[0].topic_entities, vec![0]);
        assert_eq!(ds.instances[0].answers, vec![1]);
        assert_eq!(ds.skipped, 0);
    }

    #[test]
    fn unknown_answer_is_skipped() {
        let f = tmp("what films did [George Lucas] direct\tStar Wars|THX 1138\t1\n[George Lucas] made what\tJaws\n");
        let ds = load_qa(f.path(), &kg()).unwrap();
        assert_eq!(ds.instances.len(), 1);
        assert_eq!(ds.instances[0].answers.len(), 2);
        assert_eq!(ds.instances[0].hop_annotation, Some(1));
        assert_eq!(ds.skipped, 1);
    }

    #[test]
    fn nothing_parsable_is_an_error() {
        let f = tmp("no brackets here\tStar Wars\n");
        assert!(load_qa(f.path(), &kg()).is_err());
        assert!(load_qa(Path::new("/definitely/missing.txt"), &kg()).is_err());
    }

    #[test]
    fn explicit_topic_columns() {
        let f = tmp("what did he direct\tGeorge Lucas\tStar Wars|THX 1138\t1\n");
        let ds = load_qa_with_topics(f.path(), &kg()).unwrap();
        assert_eq!(ds.instances[0].topic_entities, vec![0]);
        assert_eq!(ds.instances[0].answers, vec![1, 2]);
    }

    #[test]
    fn write_then_load() {
        let k = kg();
        let q = QuestionInstance::new("films of [George Lucas]", [0], [1, 2], Some(1)).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_qa(f.path(), &k, &[q.clone()]).unwrap();
        let back = load_qa(f.path(), &k).unwrap();
        assert_eq!(back.instances, vec![q]);
    }
}
