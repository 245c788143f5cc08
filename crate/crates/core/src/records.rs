//! Line-delimited record files and the in-memory corpora built from them.
//!
//! Every non-blank line holds one JSON object. Each line is either accepted
//! or rejected with its 1-based line number; nothing is dropped silently.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    AnswerRecord, ErrorLabel, LanguageCode, LanguageSet, Passage, Question, QuestionGroup,
    RetrievalResult,
};

/// Parses every non-blank line of `reader`, pairing each record with its
/// line number. `origin` only labels errors.
pub fn parse_lines<T, R>(reader: R, origin: &Path) -> Result<Vec<(usize, T)>>
where
    T: DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Record {
            path: origin.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Record {
            path: origin.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        })?;
        out.push((line_no, record));
    }
    Ok(out)
}

pub fn read_lines<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<(usize, T)>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_lines(BufReader::new(file), path)
}

/// Reads records, discarding line numbers.
pub fn read_records<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    Ok(read_lines(path)?.into_iter().map(|(_, r)| r).collect())
}

pub fn write_lines_to<T, W>(mut writer: W, records: &[T]) -> std::io::Result<()>
where
    T: Serialize,
    W: Write,
{
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_records<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_lines_to(BufWriter::new(file), records).map_err(|e| Error::io(path, e))
}

fn check_language(
    set: &LanguageSet,
    lang: &LanguageCode,
    path: &Path,
    line: usize,
) -> Result<()> {
    set.check(lang).map_err(|e| Error::Record {
        path: path.to_path_buf(),
        line,
        message: e.to_string(),
    })
}

/// Passages indexed by pid.
#[derive(Clone, Debug, Default)]
pub struct Corpus {
    passages: Vec<Passage>,
    by_pid: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(passages: Vec<Passage>) -> Result<Self> {
        let mut by_pid = HashMap::with_capacity(passages.len());
        for (i, p) in passages.iter().enumerate() {
            if by_pid.insert(p.pid.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    path: PathBuf::new(),
                    line: i + 1,
                    id: p.pid.clone(),
                });
            }
        }
        Ok(Self { passages, by_pid })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_with(path, &LanguageSet::default())
    }

    pub fn load_with(path: impl AsRef<Path>, langs: &LanguageSet) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::from_reader(BufReader::new(file), path, langs)
    }

    pub fn from_reader<R: BufRead>(reader: R, origin: &Path, langs: &LanguageSet) -> Result<Self> {
        let mut corpus = Corpus::default();
        for (line, p) in parse_lines::<Passage, _>(reader, origin)? {
            check_language(langs, &p.lang, origin, line)?;
            if corpus.by_pid.contains_key(&p.pid) {
                return Err(Error::DuplicateId {
                    path: origin.to_path_buf(),
                    line,
                    id: p.pid,
                });
            }
            corpus.by_pid.insert(p.pid.clone(), corpus.passages.len());
            corpus.passages.push(p);
        }
        Ok(corpus)
    }

    pub fn get(&self, pid: &str) -> Option<&Passage> {
        self.by_pid.get(pid).map(|&i| &self.passages[i])
    }

    pub fn resolve(&self, pid: &str) -> Result<&Passage> {
        self.get(pid)
            .ok_or_else(|| Error::UnresolvedPassage(pid.to_string()))
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }
}

/// Questions indexed by qid.
#[derive(Clone, Debug, Default)]
pub struct QuestionSet {
    questions: Vec<Question>,
    by_qid: HashMap<String, usize>,
}

impl QuestionSet {
    pub fn new(questions: Vec<Question>) -> Result<Self> {
        let mut by_qid = HashMap::with_capacity(questions.len());
        for (i, q) in questions.iter().enumerate() {
            if by_qid.insert(q.qid.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    path: PathBuf::new(),
                    line: i + 1,
                    id: q.qid.clone(),
                });
            }
        }
        Ok(Self { questions, by_qid })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::load_with(path, &LanguageSet::default())
    }

    pub fn load_with(path: impl AsRef<Path>, langs: &LanguageSet) -> Result<Self> {
        let path = path.as_ref();
        let mut set = QuestionSet::default();
        for (line, q) in read_lines::<Question>(path)? {
            check_language(langs, &q.lang, path, line)?;
            if set.by_qid.contains_key(&q.qid) {
                return Err(Error::DuplicateId {
                    path: path.to_path_buf(),
                    line,
                    id: q.qid,
                });
            }
            set.by_qid.insert(q.qid.clone(), set.questions.len());
            set.questions.push(q);
        }
        Ok(set)
    }

    pub fn get(&self, qid: &str) -> Option<&Question> {
        self.by_qid.get(qid).map(|&i| &self.questions[i])
    }

    pub fn resolve(&self, qid: &str) -> Result<&Question> {
        self.get(qid)
            .ok_or_else(|| Error::UnresolvedQuestion(qid.to_string()))
    }

    pub fn questions(&self) -> &[Question] {
        &self.questions
    }

    pub fn in_language<'a>(&'a self, lang: &'a LanguageCode) -> impl Iterator<Item = &'a Question> {
        self.questions.iter().filter(move |q| &q.lang == lang)
    }

    /// Gold answers keyed by qid.
    pub fn golds(&self) -> HashMap<String, Vec<String>> {
        self.questions
            .iter()
            .map(|q| (q.qid.clone(), q.gold_answers.clone()))
            .collect()
    }

    pub fn len(&self) -> usize {
        self.questions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.questions.is_empty()
    }
}

/// Loads a passage file with the default language set.
pub fn load_passages(path: impl AsRef<Path>) -> Result<Corpus> {
    Corpus::load(path)
}

pub fn load_questions(path: impl AsRef<Path>) -> Result<QuestionSet> {
    QuestionSet::load(path)
}

pub fn load_groups(path: impl AsRef<Path>) -> Result<Vec<QuestionGroup>> {
    read_records(path)
}

pub fn load_retrievals(path: impl AsRef<Path>) -> Result<Vec<RetrievalResult>> {
    read_records(path)
}

pub fn load_answers(path: impl AsRef<Path>) -> Result<Vec<AnswerRecord>> {
    read_records(path)
}

/// Loads error labels; an unknown `error_type` fails with its line number.
pub fn load_labels(path: impl AsRef<Path>) -> Result<Vec<ErrorLabel>> {
    read_records(path)
}

/// Checks that every group member names a known question in the stated
/// language and that each question's `group_id`, when set, names a group.
pub fn check_group_references(questions: &QuestionSet, groups: &[QuestionGroup]) -> Result<()> {
    for g in groups {
        for m in g.members() {
            let q = questions.resolve(&m.qid)?;
            if q.lang != m.lang {
                return Err(Error::InvalidGroup {
                    group_id: g.group_id.clone(),
                    reason: format!(
                        "member `{}` is listed as `{}` but the question is `{}`",
                        m.qid, m.lang, q.lang
                    ),
                });
            }
        }
    }
    let ids: std::collections::HashSet<&str> = groups.iter().map(|g| g.group_id.as_str()).collect();
    for q in questions.questions() {
        if let Some(gid) = &q.group_id {
            if !ids.contains(gid.as_str()) {
                return Err(Error::InvalidGroup {
                    group_id: gid.clone(),
                    reason: format!("referenced by question `{}` but not defined", q.qid),
                });
            }
        }
    }
    Ok(())
}

/// Checks that every answer names a known question and, when present, a
/// known context passage.
pub fn check_answer_references(
    answers: &[AnswerRecord],
    questions: &QuestionSet,
    corpus: &Corpus,
) -> Result<()> {
    for a in answers {
        questions.resolve(&a.qid)?;
        if let Some(pid) = &a.context_pid {
            corpus.resolve(pid)?;
        }
    }
    Ok(())
}
