use serde::{Deserialize, Serialize};

use super::{AnswerRecord, Event, Frame, FrameBody, RuntimeError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    Page,
    Menu,
    End,
}

/// The part of a frame recorded in a transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameSummary {
    pub seq: u64,
    pub kind: FrameKind,
    /// Page, menu or end id. Absent for the implicit end of the story.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub element_id: Option<String>,
}

impl From<&Frame> for FrameSummary {
    fn from(f: &Frame) -> Self {
        let (kind, element_id) = match &f.body {
            FrameBody::Page { page_id, .. } => (FrameKind::Page, Some(page_id.clone())),
            FrameBody::Menu { menu_id, .. } => (FrameKind::Menu, Some(menu_id.clone())),
            FrameBody::End { end_id, .. } => (FrameKind::End, end_id.clone()),
        };
        FrameSummary {
            seq: f.seq,
            kind,
            element_id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

impl From<&RuntimeError> for ErrorInfo {
    fn from(e: &RuntimeError) -> Self {
        ErrorInfo {
            code: e.code().to_string(),
            message: e.to_string(),
        }
    }
}

/// One event and what it produced: a frame, or an error that left the
/// session unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub event: Event,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frame: Option<FrameSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub story_id: String,
    pub start: FrameSummary,
    pub entries: Vec<TranscriptEntry>,
    pub answers: Vec<AnswerRecord>,
}

/// One line of the JSON Lines form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TranscriptLine {
    Start { story_id: String, frame: FrameSummary },
    Step { event: Event, frame: FrameSummary },
    Error { event: Event, error: ErrorInfo },
    Answers { answers: Vec<AnswerRecord> },
}

#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Shape { line: usize, message: String },
}

impl Transcript {
    /// Events in the order they were applied, including rejected ones.
    pub fn events(&self) -> Vec<Event> {
        self.entries.iter().map(|e| e.event.clone()).collect()
    }

    /// Summaries of every frame produced, starting with the first.
    pub fn frames(&self) -> Vec<FrameSummary> {
        std::iter::once(self.start.clone())
            .chain(self.entries.iter().filter_map(|e| e.frame.clone()))
            .collect()
    }

    pub fn last_frame(&self) -> &FrameSummary {
        self.entries
            .iter()
            .rev()
            .find_map(|e| e.frame.as_ref())
            .unwrap_or(&self.start)
    }

    pub fn lines(&self) -> Vec<TranscriptLine> {
        let mut out = vec![TranscriptLine::Start {
            story_id: self.story_id.clone(),
            frame: self.start.clone(),
        }];
        for e in &self.entries {
            out.push(match (&e.frame, &e.error) {
                (Some(frame), _) => TranscriptLine::Step {
                    event: e.event.clone(),
                    frame: frame.clone(),
                },
                (None, Some(error)) => TranscriptLine::Error {
                    event: e.event.clone(),
                    error: error.clone(),
                },
                (None, None) => unreachable!("entry without frame or error"),
            });
        }
        out.push(TranscriptLine::Answers {
            answers: self.answers.clone(),
        });
        out
    }

    pub fn to_jsonl(&self) -> String {
        let mut s = String::new();
        for line in self.lines() {
            s += &serde_json::to_string(&line).expect("transcript lines serialize");
            s.push('\n');
        }
        s
    }

    pub fn from_jsonl(text: &str) -> Result<Transcript, JsonlError> {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            if raw.trim().is_empty() {
                continue;
            }
            let line: TranscriptLine =
                serde_json::from_str(raw).map_err(|source| JsonlError::Json { line: i + 1, source })?;
            lines.push((i + 1, line));
        }
        let shape = |line, message: &str| JsonlError::Shape {
            line,
            message: message.to_string(),
        };
        let mut it = lines.into_iter();
        let Some((_, TranscriptLine::Start { story_id, frame })) = it.next() else {
            return Err(shape(1, "transcript must begin with a start line"));
        };
        let mut t = Transcript {
            story_id,
            start: frame,
            entries: Vec::new(),
            answers: Vec::new(),
        };
        let mut done = false;
        for (no, line) in it {
            if done {
                return Err(shape(no, "nothing may follow the answers line"));
            }
            match line {
                TranscriptLine::Step { event, frame } => t.entries.push(TranscriptEntry {
                    event,
                    frame: Some(frame),
                    error: None,
                }),
                TranscriptLine::Error { event, error } => t.entries.push(TranscriptEntry {
                    event,
                    frame: None,
                    error: Some(error),
                }),
                TranscriptLine::Answers { answers } => {
                    t.answers = answers;
                    done = true;
                }
                TranscriptLine::Start { .. } => return Err(shape(no, "duplicate start line")),
            }
        }
        if !done {
            return Err(shape(0, "transcript has no answers line"));
        }
        Ok(t)
    }
}

/// Parses an event script: one JSON event per line, blank lines and lines
/// starting with `#` ignored.
pub fn parse_events_jsonl(text: &str) -> Result<Vec<Event>, JsonlError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| serde_json::from_str(l).map_err(|source| JsonlError::Json { line: i + 1, source }))
        .collect()
}

pub fn events_to_jsonl(events: &[Event]) -> String {
    events
        .iter()
        .map(|e| serde_json::to_string(e).expect("events serialize") + "\n")
        .collect()
}
