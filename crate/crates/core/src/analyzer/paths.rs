use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::model::*;

/// One decision taken at a choice menu.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ChoiceStep {
    pub menu: String,
    pub option: String,
}

/// The ordered choices made in one complete traversal.
pub type PathSignature = Vec<ChoiceStep>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChoicePaths {
    pub paths: Vec<PathSignature>,
    /// Set when more than `max` paths exist.
    pub truncated: bool,
}

struct Enumerator {
    max: usize,
    out: ChoicePaths,
}

type Cursor<'a> = Vec<(ElementRef<'a>, usize)>;

impl Enumerator {
    fn record(&mut self, sig: &[ChoiceStep]) -> ControlFlow<()> {
        if self.out.paths.len() >= self.max {
            self.out.truncated = true;
            return ControlFlow::Break(());
        }
        self.out.paths.push(sig.to_vec());
        ControlFlow::Continue(())
    }

    /// Runs the traversal from `cursor` until it finishes or reaches a choice.
    fn run<'a>(&mut self, mut cursor: Cursor<'a>, sig: &mut Vec<ChoiceStep>) -> ControlFlow<()> {
        loop {
            let Some(top) = cursor.last_mut() else {
                return self.record(sig);
            };
            let (container, idx) = *top;
            let Some(child) = container.child(idx) else {
                cursor.pop();
                continue;
            };
            top.1 += 1;
            match child {
                ElementRef::Chapter(_) | ElementRef::Scene(_) => cursor.push((child, 0)),
                ElementRef::Page(_) => {}
                ElementRef::End(_) => return self.record(sig),
                ElementRef::Menu(m) if m.kind == MenuKind::More => {}
                ElementRef::Menu(m) => {
                    for opt in &m.options {
                        let mut branch = cursor.clone();
                        branch.push((ElementRef::Option(opt), 0));
                        sig.push(ChoiceStep {
                            menu: m.id.clone(),
                            option: opt.id.clone(),
                        });
                        let flow = self.run(branch, sig);
                        sig.pop();
                        flow?;
                    }
                    return ControlFlow::Continue(());
                }
                ElementRef::Option(_) | ElementRef::Story(_) => {
                    unreachable!("options and the root are never siblings of content")
                }
            }
        }
    }
}

/// Lists every choice path under merge-back semantics, in depth-first
/// order, stopping after `max` paths.
///
/// A choice option's body is followed by whatever comes after its menu,
/// unless an `end` inside it terminates the traversal. More menus do not
/// branch and are skipped.
pub fn enumerate_choice_paths(story: &Story, max: usize) -> ChoicePaths {
    let mut e = Enumerator {
        max: max.max(1),
        out: ChoicePaths {
            paths: Vec::new(),
            truncated: false,
        },
    };
    let _ = e.run(vec![(story.root(), 0)], &mut Vec::new());
    e.out
}
