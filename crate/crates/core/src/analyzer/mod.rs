//! Validation, structural metrics and classification of stories.

mod classify;
mod paths;
mod stats;
mod validate;

use serde::{Deserialize, Serialize};

pub use classify::{
    classify_experience_type, classify_structure, estimate_erl, ExperienceType, StructureClass, TAG_DIALOGUE_SOCIAL,
    TAG_EXPERIENTIAL_SOCIAL,
};
pub use paths::{enumerate_choice_paths, ChoicePaths, ChoiceStep, PathSignature};
pub use stats::{choice_path_count, stats, Stats};
pub use validate::{validate, validate_with_assets, MAX_MENU_DEPTH};

use crate::diagnostic::{has_errors, Diagnostic};
use crate::model::Story;

/// Full analysis of a story. Classifications are only present when the
/// story has no error diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub story_id: String,
    pub diagnostics: Vec<Diagnostic>,
    pub stats: Stats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureClass>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub experience_type: Option<ExperienceType>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub erl: Option<u8>,
}

impl Report {
    pub fn has_errors(&self) -> bool {
        has_errors(&self.diagnostics)
    }

    pub fn has_warnings(&self) -> bool {
        self.diagnostics.iter().any(|d| !d.is_error())
    }
}

pub fn analyze(story: &Story) -> Report {
    report_from(story, validate(story))
}

/// Builds a report around diagnostics that were already computed.
pub fn report_from(story: &Story, diagnostics: Vec<Diagnostic>) -> Report {
    let ok = !has_errors(&diagnostics);
    Report {
        story_id: story.id.clone(),
        stats: stats(story),
        structure: ok.then(|| classify_structure(story)),
        experience_type: ok.then(|| classify_experience_type(story)),
        erl: ok.then(|| estimate_erl(story)),
        diagnostics,
    }
}

#[cfg(test)]
mod tests;
