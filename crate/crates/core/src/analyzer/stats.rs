use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::model::*;

/// Structural counts for a story.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub chapters: usize,
    pub scenes: usize,
    pub pages: usize,
    pub pages_by_kind: BTreeMap<PageKind, usize>,
    pub menus: usize,
    pub menus_by_kind: BTreeMap<MenuKind, usize>,
    pub menus_by_style: BTreeMap<MenuStyleKind, usize>,
    pub endings: usize,
    /// Largest number of menus on any root-to-leaf path.
    pub max_menu_depth: usize,
    /// Number of distinct choice paths, saturating at `u64::MAX`.
    pub choice_paths: u64,
}

pub fn stats(story: &Story) -> Stats {
    let mut s = Stats {
        chapters: 0,
        scenes: 0,
        pages: 0,
        pages_by_kind: PageKind::ALL.iter().map(|k| (*k, 0)).collect(),
        menus: 0,
        menus_by_kind: [MenuKind::Choice, MenuKind::More].iter().map(|k| (*k, 0)).collect(),
        menus_by_style: MenuStyleKind::ALL.iter().map(|k| (*k, 0)).collect(),
        endings: 0,
        max_menu_depth: 0,
        choice_paths: choice_path_count(story),
    };
    story.walk(|_, e| match e {
        ElementRef::Chapter(_) => s.chapters += 1,
        ElementRef::Scene(_) => s.scenes += 1,
        ElementRef::Page(p) => {
            s.pages += 1;
            *s.pages_by_kind.entry(p.payload.kind()).or_default() += 1;
        }
        ElementRef::Menu(m) => {
            s.menus += 1;
            *s.menus_by_kind.entry(m.kind).or_default() += 1;
            *s.menus_by_style.entry(m.style.kind()).or_default() += 1;
        }
        ElementRef::End(_) => s.endings += 1,
        ElementRef::Option(_) | ElementRef::Story(_) => {}
    });
    s.max_menu_depth = menu_depths(story).into_iter().map(|(_, d)| d).max().unwrap_or(0);
    s
}

/// Every menu with its nesting depth (1 for a menu with no menu ancestor).
pub(crate) fn menu_depths(story: &Story) -> Vec<(ElementPath, usize)> {
    fn go(node: ElementRef<'_>, path: &mut Vec<usize>, depth: usize, out: &mut Vec<(ElementPath, usize)>) {
        for (i, child) in node.children().into_iter().enumerate() {
            path.push(i);
            let d = if let ElementRef::Menu(_) = child {
                out.push((ElementPath(path.clone()), depth + 1));
                depth + 1
            } else {
                depth
            };
            go(child, path, d, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    go(story.root(), &mut Vec::new(), 0, &mut out);
    out
}

/// Path outcomes of a run of sibling elements: how many traversals stop at
/// an ending inside it, and how many run through to its end.
#[derive(Debug, Clone, Copy)]
struct Outcomes {
    ended: u64,
    through: u64,
}

impl Outcomes {
    const PASS: Outcomes = Outcomes { ended: 0, through: 1 };
    const STOP: Outcomes = Outcomes { ended: 1, through: 0 };

    fn then(self, next: Outcomes) -> Outcomes {
        Outcomes {
            ended: self.ended.saturating_add(self.through.saturating_mul(next.ended)),
            through: self.through.saturating_mul(next.through),
        }
    }

    fn or(self, other: Outcomes) -> Outcomes {
        Outcomes {
            ended: self.ended.saturating_add(other.ended),
            through: self.through.saturating_add(other.through),
        }
    }
}

fn outcomes(node: ElementRef<'_>) -> Outcomes {
    match node {
        ElementRef::Page(_) => Outcomes::PASS,
        ElementRef::End(_) => Outcomes::STOP,
        ElementRef::Menu(m) if m.kind == MenuKind::More => Outcomes::PASS,
        ElementRef::Menu(m) => m
            .options
            .iter()
            .map(|o| outcomes(ElementRef::Option(o)))
            .fold(Outcomes { ended: 0, through: 0 }, Outcomes::or),
        _ => node
            .children()
            .into_iter()
            .map(outcomes)
            .fold(Outcomes::PASS, Outcomes::then),
    }
}

/// Number of choice paths, computed by composing per-container outcome
/// counts rather than enumerating.
pub fn choice_path_count(story: &Story) -> u64 {
    let o = outcomes(story.root());
    o.ended.saturating_add(o.through)
}
