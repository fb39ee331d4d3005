//! Deterministic traversal of a story driven by visitor events.
//!
//! A [`Session`] walks the story tree with a cursor stack. Every accepted
//! event produces a new [`Frame`] with the next sequence number; rejected
//! events leave the session untouched.

mod render;
mod transcript;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::analyzer::validate;
use crate::diagnostic::{has_errors, Diagnostic};
use crate::edit::resolve;
use crate::geo;
use crate::model::*;

pub use render::{render_page, DialogueEntry, PageRender, Spread, StatementResult, StatementView};
pub use transcript::{
    events_to_jsonl, parse_events_jsonl, ErrorInfo, FrameKind, FrameSummary, JsonlError, Transcript, TranscriptEntry,
    TranscriptLine,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Event {
    Advance,
    SelectOption {
        menu_id: String,
        option_id: String,
    },
    Continue {
        menu_id: String,
    },
    Position {
        lat: f64,
        lon: f64,
    },
    QrScan {
        payload: String,
    },
    NfcScan {
        tag: String,
    },
    QuizAnswer {
        page_id: String,
        statement: usize,
        answer: Answer,
    },
    TextAnswer {
        page_id: String,
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnswerPayload {
    Quiz {
        statement: usize,
        given: Answer,
        correct: bool,
    },
    Question {
        text: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub page_id: String,
    #[serde(flatten)]
    pub payload: AnswerPayload,
    /// Sequence number of the frame emitted when the answer was recorded.
    pub seq: u64,
}

/// Trigger as presented to the player. QR payloads are resolved.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TriggerView {
    None,
    Poi { rect: Rect },
    Region { lat: f64, lon: f64, radius: f64 },
    Qr { payload: String },
    NfcTag { tag: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionView {
    pub id: String,
    pub label: String,
    pub trigger: TriggerView,
    pub viewed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "frame", rename_all = "snake_case")]
pub enum FrameBody {
    Page {
        page_id: String,
        render: PageRender,
    },
    Menu {
        menu_id: String,
        kind: MenuKind,
        style: MenuStyle,
        options: Vec<OptionView>,
        can_continue: bool,
    },
    End {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        end_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub seq: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chapter_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scene_id: Option<String>,
    #[serde(flatten)]
    pub body: FrameBody,
}

impl Frame {
    pub fn kind(&self) -> FrameKind {
        match self.body {
            FrameBody::Page { .. } => FrameKind::Page,
            FrameBody::Menu { .. } => FrameKind::Menu,
            FrameBody::End { .. } => FrameKind::End,
        }
    }

    pub fn summary(&self) -> FrameSummary {
        FrameSummary::from(self)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuntimeError {
    #[error("story has {} validation error(s)", .0.iter().filter(|d| d.is_error()).count())]
    InvalidStory(Vec<Diagnostic>),
    #[error("event not applicable: {0}")]
    EventNotApplicable(String),
    #[error("no match: {0}")]
    NoMatch(String),
    #[error("session finished")]
    SessionFinished,
}

impl RuntimeError {
    /// Stable snake_case code used in transcripts.
    pub fn code(&self) -> &'static str {
        match self {
            RuntimeError::InvalidStory(_) => "invalid_story",
            RuntimeError::EventNotApplicable(_) => "event_not_applicable",
            RuntimeError::NoMatch(_) => "no_match",
            RuntimeError::SessionFinished => "session_finished",
        }
    }
}

fn not_applicable(msg: impl Into<String>) -> RuntimeError {
    RuntimeError::EventNotApplicable(msg.into())
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MenuState {
    pub viewed: BTreeSet<String>,
    pub consumed: bool,
}

/// One cursor level: a container and the index of its current child.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Level {
    container: ElementPath,
    index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    story: Arc<Story>,
    cursor: Vec<Level>,
    menu_state: BTreeMap<String, MenuState>,
    answers: Vec<AnswerRecord>,
    finished: bool,
    seq: u64,
    frame: Frame,
    start: FrameSummary,
    log: Vec<TranscriptEntry>,
}

/// Where the cursor came to rest.
enum Stop<'a> {
    Page(&'a Page),
    Menu(&'a Menu),
    End(Option<&'a End>),
}

impl Session {
    /// Validates `story` and positions the cursor on its first renderable
    /// element.
    pub fn start(story: impl Into<Arc<Story>>) -> Result<(Session, Frame), RuntimeError> {
        let story = story.into();
        let diags = validate(&story);
        if has_errors(&diags) {
            return Err(RuntimeError::InvalidStory(diags));
        }
        let placeholder = Frame {
            seq: 0,
            chapter_id: None,
            scene_id: None,
            body: FrameBody::End {
                end_id: None,
                label: None,
            },
        };
        let mut s = Session {
            story,
            cursor: vec![Level {
                container: ElementPath::root(),
                index: 0,
            }],
            menu_state: BTreeMap::new(),
            answers: Vec::new(),
            finished: false,
            seq: 0,
            frame: placeholder.clone(),
            start: placeholder.summary(),
            log: Vec::new(),
        };
        s.settle();
        s.start = s.frame.summary();
        let f = s.frame.clone();
        Ok((s, f))
    }

    pub fn story(&self) -> &Story {
        &self.story
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn answers(&self) -> &[AnswerRecord] {
        &self.answers
    }

    pub fn menu_state(&self) -> &BTreeMap<String, MenuState> {
        &self.menu_state
    }

    /// Depth of the cursor stack.
    pub fn depth(&self) -> usize {
        self.cursor.len()
    }

    /// Applies one event. On error the session is left unchanged.
    pub fn apply(&mut self, event: Event) -> Result<Frame, RuntimeError> {
        if self.finished {
            return Err(RuntimeError::SessionFinished);
        }
        self.transition(&event)?;
        self.log.push(TranscriptEntry {
            event,
            frame: Some(self.frame.summary()),
            error: None,
        });
        Ok(self.frame.clone())
    }

    /// The log of accepted events so far.
    pub fn transcript(&self) -> Transcript {
        Transcript {
            story_id: self.story.id.clone(),
            start: self.start.clone(),
            entries: self.log.clone(),
            answers: self.answers.clone(),
        }
    }

    /// The event a visitor taking the default route would send next:
    /// advance pages, scan the tag of NFC pages, take the first option of
    /// choice menus and skip more menus.
    pub fn greedy_event(&self) -> Option<Event> {
        if self.finished {
            return None;
        }
        Some(match self.current() {
            Stop::Page(Page {
                payload: PagePayload::Nfc { tag, .. },
                ..
            }) => Event::NfcScan { tag: tag.clone() },
            Stop::Page(_) => Event::Advance,
            Stop::Menu(m) if m.kind == MenuKind::Choice => Event::SelectOption {
                menu_id: m.id.clone(),
                option_id: m.options[0].id.clone(),
            },
            Stop::Menu(m) => Event::Continue { menu_id: m.id.clone() },
            Stop::End(_) => return None,
        })
    }

    fn top(&self) -> &Level {
        self.cursor.last().expect("cursor is non-empty while running")
    }

    fn element_at(&self, level: &Level) -> Option<ElementRef<'_>> {
        resolve(&self.story, &level.container).ok()?.child(level.index)
    }

    fn current(&self) -> Stop<'_> {
        if self.finished {
            return match self.cursor.last().and_then(|l| self.element_at(l)) {
                Some(ElementRef::End(e)) => Stop::End(Some(e)),
                _ => Stop::End(None),
            };
        }
        match self.element_at(self.top()) {
            Some(ElementRef::Page(p)) => Stop::Page(p),
            Some(ElementRef::Menu(m)) => Stop::Menu(m),
            _ => unreachable!("cursor rests on a page or menu"),
        }
    }

    fn current_menu(&self, menu_id: &str) -> Result<&Menu, RuntimeError> {
        match self.current() {
            Stop::Menu(m) if m.id == menu_id => Ok(m),
            Stop::Menu(m) => Err(not_applicable(format!(
                "menu `{menu_id}` is not current (`{}` is)",
                m.id
            ))),
            _ => Err(not_applicable(format!("menu `{menu_id}` is not current"))),
        }
    }

    fn current_page(&self, page_id: &str) -> Result<&Page, RuntimeError> {
        match self.current() {
            Stop::Page(p) if p.id == page_id => Ok(p),
            _ => Err(not_applicable(format!("page `{page_id}` is not current"))),
        }
    }

    fn transition(&mut self, event: &Event) -> Result<(), RuntimeError> {
        match event {
            Event::Advance => match self.current() {
                Stop::Page(Page {
                    payload: PagePayload::Nfc { .. },
                    id,
                }) => Err(not_applicable(format!("page `{id}` waits for an NFC scan"))),
                Stop::Page(_) => {
                    self.step_past();
                    Ok(())
                }
                _ => Err(not_applicable("advance needs a page frame")),
            },
            Event::SelectOption { menu_id, option_id } => {
                let m = self.current_menu(menu_id)?;
                let i = m
                    .options
                    .iter()
                    .position(|o| &o.id == option_id)
                    .ok_or_else(|| not_applicable(format!("menu `{menu_id}` has no option `{option_id}`")))?;
                self.select(i)
            }
            Event::Continue { menu_id } => {
                let m = self.current_menu(menu_id)?;
                if m.kind != MenuKind::More {
                    return Err(not_applicable(format!("choice menu `{menu_id}` cannot be skipped")));
                }
                self.step_past();
                Ok(())
            }
            Event::Position { lat, lon } => {
                if !geo::is_valid_coordinate(*lat, *lon) {
                    return Err(not_applicable(format!("({lat}, {lon}) is not a valid coordinate")));
                }
                let hit = match self.current() {
                    Stop::Menu(m) if m.style == MenuStyle::Map => nearest_region(m, *lat, *lon),
                    _ => None,
                };
                match hit {
                    Some(i) => self.select(i),
                    None => {
                        self.emit();
                        Ok(())
                    }
                }
            }
            Event::QrScan { payload } => {
                let hit = match self.current() {
                    Stop::Menu(m) if m.style == MenuStyle::QrCode => m
                        .options
                        .iter()
                        .position(|o| o.qr_payload(&self.story.id, &m.id).as_deref() == Some(payload.as_str())),
                    _ => None,
                };
                let i = hit.ok_or_else(|| RuntimeError::NoMatch(format!("QR payload `{payload}`")))?;
                self.select(i)
            }
            Event::NfcScan { tag } => match self.current() {
                Stop::Page(Page {
                    payload: PagePayload::Nfc { tag: t, .. },
                    ..
                }) if t == tag => {
                    self.step_past();
                    Ok(())
                }
                Stop::Menu(m) => {
                    let i = m
                        .options
                        .iter()
                        .position(|o| matches!(&o.trigger, Trigger::NfcTag { tag: t } if t == tag))
                        .ok_or_else(|| RuntimeError::NoMatch(format!("NFC tag `{tag}`")))?;
                    self.select(i)
                }
                _ => Err(RuntimeError::NoMatch(format!("NFC tag `{tag}`"))),
            },
            Event::QuizAnswer {
                page_id,
                statement,
                answer,
            } => {
                let page = self.current_page(page_id)?;
                let PagePayload::Quiz { statements } = &page.payload else {
                    return Err(not_applicable(format!("page `{page_id}` is not a quiz")));
                };
                let s = statements
                    .get(*statement)
                    .ok_or_else(|| not_applicable(format!("quiz `{page_id}` has no statement {statement}")))?;
                let payload = AnswerPayload::Quiz {
                    statement: *statement,
                    given: *answer,
                    correct: *answer == s.answer,
                };
                self.record(page_id, payload);
                Ok(())
            }
            Event::TextAnswer { page_id, text } => {
                let page = self.current_page(page_id)?;
                if !matches!(page.payload, PagePayload::Question { .. }) {
                    return Err(not_applicable(format!("page `{page_id}` is not a question")));
                }
                self.record(page_id, AnswerPayload::Question { text: text.clone() });
                Ok(())
            }
        }
    }

    fn record(&mut self, page_id: &str, payload: AnswerPayload) {
        self.answers.push(AnswerRecord {
            page_id: page_id.to_string(),
            payload,
            seq: self.seq + 1,
        });
        self.emit();
    }

    fn select(&mut self, option: usize) -> Result<(), RuntimeError> {
        let Stop::Menu(m) = self.current() else {
            unreachable!("select is only reached from a menu frame");
        };
        if m.kind == MenuKind::Choice && self.menu_state.get(&m.id).is_some_and(|s| s.consumed) {
            return Err(not_applicable(format!("choice menu `{}` was already used", m.id)));
        }
        let top = self.top();
        let path = top.container.child(top.index).child(option);
        self.cursor.push(Level {
            container: path,
            index: 0,
        });
        self.settle();
        Ok(())
    }

    fn step_past(&mut self) {
        self.cursor.last_mut().expect("cursor is non-empty").index += 1;
        self.settle();
    }

    /// Moves the cursor forward until it rests on a page, a menu that can
    /// be shown, or an ending, then emits the frame.
    fn settle(&mut self) {
        let story = Arc::clone(&self.story);
        loop {
            let Some(top) = self.cursor.last() else {
                self.finished = true;
                break;
            };
            let container = resolve(&story, &top.container).expect("cursor paths resolve");
            match container.child(top.index) {
                Some(ElementRef::Chapter(_) | ElementRef::Scene(_)) => {
                    let path = top.container.child(top.index);
                    self.cursor.push(Level {
                        container: path,
                        index: 0,
                    });
                }
                Some(ElementRef::Page(_)) => break,
                Some(ElementRef::Menu(m)) => {
                    // a used choice menu met again inside re-viewed content is passed over
                    if m.kind == MenuKind::Choice && self.menu_state.get(&m.id).is_some_and(|s| s.consumed) {
                        self.cursor.last_mut().expect("cursor is non-empty").index += 1;
                        continue;
                    }
                    break;
                }
                Some(ElementRef::End(_)) => {
                    self.finished = true;
                    break;
                }
                Some(ElementRef::Story(_) | ElementRef::Option(_)) => unreachable!("not a content element"),
                None => {
                    let done = self.cursor.pop().expect("cursor is non-empty");
                    let Some(parent) = self.cursor.last_mut() else {
                        continue;
                    };
                    if let Ok(ElementRef::Option(opt)) = resolve(&story, &done.container) {
                        let menu = match resolve(&story, &parent.container)
                            .ok()
                            .and_then(|c| c.child(parent.index))
                        {
                            Some(ElementRef::Menu(m)) => m,
                            _ => unreachable!("an option level sits above its menu"),
                        };
                        let state = self.menu_state.entry(menu.id.clone()).or_default();
                        state.viewed.insert(opt.id.clone());
                        if menu.kind == MenuKind::Choice {
                            state.consumed = true;
                            parent.index += 1;
                        }
                    } else {
                        parent.index += 1;
                    }
                }
            }
        }
        self.emit();
    }

    fn emit(&mut self) {
        self.seq += 1;
        let mut chapter_id = None;
        let mut scene_id = None;
        for level in &self.cursor {
            match resolve(&self.story, &level.container) {
                Ok(ElementRef::Chapter(c)) => chapter_id = Some(c.id.clone()),
                Ok(ElementRef::Scene(s)) => scene_id = Some(s.id.clone()),
                _ => {}
            }
        }
        let body = match self.current() {
            Stop::Page(p) => FrameBody::Page {
                page_id: p.id.clone(),
                render: render::render_with_answers(p, &self.answers),
            },
            Stop::Menu(m) => {
                let state = self.menu_state.get(&m.id);
                FrameBody::Menu {
                    menu_id: m.id.clone(),
                    kind: m.kind,
                    style: m.style.clone(),
                    options: m
                        .options
                        .iter()
                        .map(|o| OptionView {
                            id: o.id.clone(),
                            label: o.label.clone(),
                            trigger: trigger_view(&self.story.id, &m.id, o),
                            viewed: state.is_some_and(|s| s.viewed.contains(&o.id)),
                        })
                        .collect(),
                    can_continue: m.kind == MenuKind::More,
                }
            }
            Stop::End(e) => FrameBody::End {
                end_id: e.map(|e| e.id.clone()),
                label: e.and_then(|e| e.label.clone()),
            },
        };
        self.frame = Frame {
            seq: self.seq,
            chapter_id,
            scene_id,
            body,
        };
    }
}

fn trigger_view(story_id: &str, menu_id: &str, o: &MenuOption) -> TriggerView {
    match &o.trigger {
        Trigger::None => TriggerView::None,
        Trigger::Poi { rect } => TriggerView::Poi { rect: *rect },
        Trigger::Region { lat, lon, radius } => TriggerView::Region {
            lat: *lat,
            lon: *lon,
            radius: *radius,
        },
        Trigger::Qr { .. } => TriggerView::Qr {
            payload: o.qr_payload(story_id, menu_id).expect("qr trigger has a payload"),
        },
        Trigger::NfcTag { tag } => TriggerView::NfcTag { tag: tag.clone() },
    }
}

/// Index of the option whose region contains the point and whose center is
/// nearest. Ties go to the lowest index.
fn nearest_region(m: &Menu, lat: f64, lon: f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, o) in m.options.iter().enumerate() {
        if let Trigger::Region {
            lat: clat,
            lon: clon,
            radius,
        } = o.trigger
        {
            let d = geo::haversine_m(lat, lon, clat, clon);
            if d <= radius && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
    }
    best.map(|(i, _)| i)
}

pub fn start(story: impl Into<Arc<Story>>) -> Result<(Session, Frame), RuntimeError> {
    Session::start(story)
}

/// Starts a session and feeds it `events`. Rejected events are recorded as
/// error entries and do not stop the run.
pub fn simulate(story: impl Into<Arc<Story>>, events: &[Event]) -> Result<Transcript, RuntimeError> {
    let (mut session, _) = Session::start(story)?;
    let mut entries = Vec::with_capacity(events.len());
    for e in events {
        entries.push(match session.apply(e.clone()) {
            Ok(f) => TranscriptEntry {
                event: e.clone(),
                frame: Some(f.summary()),
                error: None,
            },
            Err(err) => TranscriptEntry {
                event: e.clone(),
                frame: None,
                error: Some(ErrorInfo::from(&err)),
            },
        });
    }
    let mut t = session.transcript();
    t.entries = entries;
    Ok(t)
}

/// Re-runs the events of a transcript against a fresh session.
pub fn replay(story: impl Into<Arc<Story>>, transcript: &Transcript) -> Result<Transcript, RuntimeError> {
    simulate(story, &transcript.events())
}

/// Drives a session with [`Session::greedy_event`] until it ends or
/// `max_steps` events were applied.
pub fn run_greedy(story: impl Into<Arc<Story>>, max_steps: usize) -> Result<Transcript, RuntimeError> {
    let (mut session, _) = Session::start(story)?;
    for _ in 0..max_steps {
        let Some(e) = session.greedy_event() else { break };
        session.apply(e)?;
    }
    Ok(session.transcript())
}

#[cfg(test)]
mod tests;
