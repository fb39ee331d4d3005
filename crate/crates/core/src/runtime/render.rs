use serde::{Deserialize, Serialize};

use crate::model::*;

use super::{AnswerPayload, AnswerRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueEntry {
    pub speaker: String,
    pub text: String,
    pub audio: AssetRef,
}

/// A quiz statement as shown to the visitor. The authored answer is only
/// revealed through `result` once the statement has been answered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementView {
    pub index: usize,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<StatementResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementResult {
    pub given: Answer,
    pub correct: bool,
    pub feedback: String,
}

/// One position in a book's skim sequence. The cover has no title.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub image: AssetRef,
    pub hotspots: Vec<Hotspot>,
}

/// Declarative render model for a page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PageRender {
    Simple {
        text: String,
        media: Vec<AssetRef>,
    },
    Dialogue {
        entries: Vec<DialogueEntry>,
    },
    Quiz {
        statements: Vec<StatementView>,
    },
    Video {
        video: AssetRef,
    },
    InteractiveImage {
        image: AssetRef,
        hotspots: Vec<Hotspot>,
    },
    InteractiveBook {
        skim: Vec<Spread>,
    },
    Nfc {
        prompt: String,
    },
    Question {
        prompt: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        answer: Option<String>,
    },
}

pub fn render_page(page: &Page) -> PageRender {
    render_with_answers(page, &[])
}

/// Renders `page` with the latest recorded answer for each of its inputs.
pub(crate) fn render_with_answers(page: &Page, answers: &[AnswerRecord]) -> PageRender {
    let mine = || answers.iter().filter(|a| a.page_id == page.id);
    match &page.payload {
        PagePayload::Simple { text, images, audio } => PageRender::Simple {
            text: text.clone(),
            media: images.iter().chain(audio).cloned().collect(),
        },
        PagePayload::Dialogue { lines, .. } => PageRender::Dialogue {
            entries: lines
                .iter()
                .map(|l| DialogueEntry {
                    speaker: l.speaker.clone(),
                    text: l.text.clone(),
                    audio: l.audio.clone(),
                })
                .collect(),
        },
        PagePayload::Quiz { statements } => PageRender::Quiz {
            statements: statements
                .iter()
                .enumerate()
                .map(|(index, s)| StatementView {
                    index,
                    text: s.text.clone(),
                    result: mine().rev().find_map(|a| match a.payload {
                        AnswerPayload::Quiz {
                            statement,
                            given,
                            correct,
                        } if statement == index => Some(StatementResult {
                            given,
                            correct,
                            feedback: s.feedback.clone(),
                        }),
                        _ => None,
                    }),
                })
                .collect(),
        },
        PagePayload::Video { video } => PageRender::Video { video: video.clone() },
        PagePayload::InteractiveImage { image, hotspots } => PageRender::InteractiveImage {
            image: image.clone(),
            hotspots: hotspots.clone(),
        },
        PagePayload::InteractiveBook { cover, book_pages } => {
            let mut skim = vec![Spread {
                title: None,
                image: cover.clone(),
                hotspots: Vec::new(),
            }];
            skim.extend(book_pages.iter().map(|bp| Spread {
                title: Some(bp.title.clone()),
                image: bp.image.clone(),
                hotspots: bp.hotspots.clone(),
            }));
            PageRender::InteractiveBook { skim }
        }
        PagePayload::Nfc { prompt, .. } => PageRender::Nfc { prompt: prompt.clone() },
        PagePayload::Question { prompt } => PageRender::Question {
            prompt: prompt.clone(),
            answer: mine().rev().find_map(|a| match &a.payload {
                AnswerPayload::Question { text } => Some(text.clone()),
                _ => None,
            }),
        },
    }
}
