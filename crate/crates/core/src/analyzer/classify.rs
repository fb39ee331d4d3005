use serde::{Deserialize, Serialize};

use crate::model::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureClass {
    /// No choice menus.
    Linear,
    /// Choices that all merge back into the main line.
    NearLinear,
    /// At least one choice leads to a distinct ending.
    Branching,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperienceType {
    MultimediaGuide,
    DigitalStorytelling,
    InteractiveDigitalStorytelling,
    DialogueBasedSocial,
    ExperientialSocial,
    GamifiedEducational,
    Untyped,
}

/// Author tag declaring a dialogue-based social experience.
pub const TAG_DIALOGUE_SOCIAL: &str = "dialogue-based-social";
/// Author tag declaring an experiential social experience.
pub const TAG_EXPERIENTIAL_SOCIAL: &str = "experiential-social";

fn has_end(node: ElementRef<'_>) -> bool {
    matches!(node, ElementRef::End(_)) || node.children().into_iter().any(has_end)
}

pub fn classify_structure(story: &Story) -> StructureClass {
    let menus = story.menus();
    if !menus.iter().any(|m| m.kind == MenuKind::Choice) {
        return StructureClass::Linear;
    }
    let end_in_option = menus
        .iter()
        .flat_map(|m| m.options.iter())
        .any(|o| has_end(ElementRef::Option(o)));
    if end_in_option {
        StructureClass::Branching
    } else {
        StructureClass::NearLinear
    }
}

/// Social types come from author tags; the rest are inferred from the
/// templates and menus used.
pub fn classify_experience_type(story: &Story) -> ExperienceType {
    if story.author_tags.contains(TAG_DIALOGUE_SOCIAL) {
        return ExperienceType::DialogueBasedSocial;
    }
    if story.author_tags.contains(TAG_EXPERIENTIAL_SOCIAL) {
        return ExperienceType::ExperientialSocial;
    }
    let menus = story.menus();
    let kinds: Vec<PageKind> = story.pages().iter().map(|p| p.payload.kind()).collect();
    let has_quiz = kinds.contains(&PageKind::Quiz);
    let has_dialogue = kinds.contains(&PageKind::Dialogue);

    if menus.is_empty() && !has_dialogue && !has_quiz {
        ExperienceType::MultimediaGuide
    } else if has_quiz {
        ExperienceType::GamifiedEducational
    } else if !menus.is_empty() && menus.iter().all(|m| m.kind == MenuKind::More) {
        ExperienceType::DigitalStorytelling
    } else if menus.iter().any(|m| m.kind == MenuKind::Choice) {
        ExperienceType::InteractiveDigitalStorytelling
    } else {
        ExperienceType::Untyped
    }
}

/// Templates that have no media slot; they never block readiness.
fn is_media_free(kind: PageKind) -> bool {
    matches!(kind, PageKind::Quiz | PageKind::Nfc | PageKind::Question)
}

/// Experience readiness level, 1 to 7.
///
/// | level | requires |
/// |-------|----------|
/// | 1 | nothing |
/// | 2 | structure validated |
/// | 3 | and sample scenes validated, at least one page with media attached |
/// | 4 | and every page with a media slot has media (drafts allowed) |
/// | 5 | and validated on site by invited users |
/// | 6 | and no draft asset left |
/// | 7 | and validated on site with the public |
pub fn estimate_erl(story: &Story) -> u8 {
    let ev = &story.evidence;
    let pages = story.pages();
    let attached = |p: &&Page| !p.payload.assets().is_empty();

    let checks = [
        ev.structure_validated,
        ev.sample_scenes_validated && pages.iter().any(attached),
        pages.iter().all(|p| is_media_free(p.payload.kind()) || attached(p)),
        ev.validated_onsite >= OnsiteValidation::Invited,
        story.assets().iter().all(|a| !a.draft),
        ev.validated_onsite == OnsiteValidation::Public,
    ];
    1 + checks.iter().take_while(|ok| **ok).count() as u8
}
