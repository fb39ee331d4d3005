//! Path resolution and copy/move editing.
//!
//! Editing never mutates its input; every operation returns a new story.

use std::collections::HashSet;

use thiserror::Error;

use crate::model::{
    BodyElement, Chapter, ChapterElement, ElementPath, ElementRef, End, Menu, MenuOption, NodeKind, Page, Scene,
    SceneElement, Story,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EditError {
    #[error("path {0} does not resolve to an element")]
    PathOutOfRange(ElementPath),
    #[error("a {child} cannot be placed inside a {parent}")]
    IllegalContainer { parent: NodeKind, child: NodeKind },
    #[error("cannot move an element into its own subtree")]
    MoveIntoSelf,
}

/// Returns the element at `path`. The empty path is the story itself.
pub fn resolve<'a>(story: &'a Story, path: &ElementPath) -> Result<ElementRef<'a>, EditError> {
    let mut node = story.root();
    for &idx in &path.0 {
        node = node.child(idx).ok_or_else(|| EditError::PathOutOfRange(path.clone()))?;
    }
    Ok(node)
}

/// Owned subtree that can be placed into a container.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Chapter(Chapter),
    Scene(Scene),
    Page(Page),
    Menu(Menu),
    Option(MenuOption),
    End(End),
}

impl Node {
    pub fn kind(&self) -> NodeKind {
        match self {
            Node::Chapter(_) => NodeKind::Chapter,
            Node::Scene(_) => NodeKind::Scene,
            Node::Page(_) => NodeKind::Page,
            Node::Menu(_) => NodeKind::Menu,
            Node::Option(_) => NodeKind::Option,
            Node::End(_) => NodeKind::End,
        }
    }

    fn from_ref(r: ElementRef<'_>) -> Option<Node> {
        Some(match r {
            ElementRef::Story(_) => return None,
            ElementRef::Chapter(c) => Node::Chapter(c.clone()),
            ElementRef::Scene(s) => Node::Scene(s.clone()),
            ElementRef::Page(p) => Node::Page(p.clone()),
            ElementRef::Menu(m) => Node::Menu(m.clone()),
            ElementRef::Option(o) => Node::Option(o.clone()),
            ElementRef::End(e) => Node::End(e.clone()),
        })
    }

    /// Visits every id in the subtree in pre-order.
    pub fn for_each_id_mut(&mut self, f: &mut dyn FnMut(&mut String)) {
        match self {
            Node::Chapter(c) => chapter_ids(c, f),
            Node::Scene(s) => scene_ids(s, f),
            Node::Page(p) => f(&mut p.id),
            Node::Menu(m) => menu_ids(m, f),
            Node::Option(o) => option_ids(o, f),
            Node::End(e) => f(&mut e.id),
        }
    }
}

fn chapter_ids(c: &mut Chapter, f: &mut dyn FnMut(&mut String)) {
    f(&mut c.id);
    for e in &mut c.elements {
        match e {
            ChapterElement::Scene(s) => scene_ids(s, f),
            ChapterElement::Menu(m) => menu_ids(m, f),
        }
    }
}

fn scene_ids(s: &mut Scene, f: &mut dyn FnMut(&mut String)) {
    f(&mut s.id);
    for e in &mut s.elements {
        match e {
            SceneElement::Page(p) => f(&mut p.id),
            SceneElement::Menu(m) => menu_ids(m, f),
            SceneElement::End(e) => f(&mut e.id),
        }
    }
}

fn menu_ids(m: &mut Menu, f: &mut dyn FnMut(&mut String)) {
    f(&mut m.id);
    for o in &mut m.options {
        option_ids(o, f);
    }
}

fn option_ids(o: &mut MenuOption, f: &mut dyn FnMut(&mut String)) {
    f(&mut o.id);
    for e in &mut o.body {
        match e {
            BodyElement::Scene(s) => scene_ids(s, f),
            BodyElement::Page(p) => f(&mut p.id),
            BodyElement::Menu(m) => menu_ids(m, f),
            BodyElement::End(e) => f(&mut e.id),
        }
    }
}

enum Container<'a> {
    Chapters(&'a mut Vec<Chapter>),
    Chapter(&'a mut Vec<ChapterElement>),
    Scene(&'a mut Vec<SceneElement>),
    Menu(&'a mut Vec<MenuOption>),
    Option(&'a mut Vec<BodyElement>),
}

impl Container<'_> {
    fn kind(&self) -> NodeKind {
        match self {
            Container::Chapters(_) => NodeKind::Story,
            Container::Chapter(_) => NodeKind::Chapter,
            Container::Scene(_) => NodeKind::Scene,
            Container::Menu(_) => NodeKind::Menu,
            Container::Option(_) => NodeKind::Option,
        }
    }

    fn len(&self) -> usize {
        match self {
            Container::Chapters(v) => v.len(),
            Container::Chapter(v) => v.len(),
            Container::Scene(v) => v.len(),
            Container::Menu(v) => v.len(),
            Container::Option(v) => v.len(),
        }
    }

    fn insert(self, index: usize, node: Node) -> Result<(), EditError> {
        let illegal = |parent: NodeKind, child: &Node| EditError::IllegalContainer {
            parent,
            child: child.kind(),
        };
        let parent = self.kind();
        match (self, node) {
            (Container::Chapters(v), Node::Chapter(c)) => v.insert(index, c),
            (Container::Chapter(v), Node::Scene(s)) => v.insert(index, ChapterElement::Scene(s)),
            (Container::Chapter(v), Node::Menu(m)) => v.insert(index, ChapterElement::Menu(m)),
            (Container::Scene(v), Node::Page(p)) => v.insert(index, SceneElement::Page(p)),
            (Container::Scene(v), Node::Menu(m)) => v.insert(index, SceneElement::Menu(m)),
            (Container::Scene(v), Node::End(e)) => v.insert(index, SceneElement::End(e)),
            (Container::Menu(v), Node::Option(o)) => v.insert(index, o),
            (Container::Option(v), Node::Scene(s)) => v.insert(index, BodyElement::Scene(s)),
            (Container::Option(v), Node::Page(p)) => v.insert(index, BodyElement::Page(p)),
            (Container::Option(v), Node::Menu(m)) => v.insert(index, BodyElement::Menu(m)),
            (Container::Option(v), Node::End(e)) => v.insert(index, BodyElement::End(e)),
            (_, node) => return Err(illegal(parent, &node)),
        }
        Ok(())
    }

    fn remove(self, index: usize) -> Node {
        match self {
            Container::Chapters(v) => Node::Chapter(v.remove(index)),
            Container::Chapter(v) => match v.remove(index) {
                ChapterElement::Scene(s) => Node::Scene(s),
                ChapterElement::Menu(m) => Node::Menu(m),
            },
            Container::Scene(v) => match v.remove(index) {
                SceneElement::Page(p) => Node::Page(p),
                SceneElement::Menu(m) => Node::Menu(m),
                SceneElement::End(e) => Node::End(e),
            },
            Container::Menu(v) => Node::Option(v.remove(index)),
            Container::Option(v) => match v.remove(index) {
                BodyElement::Scene(s) => Node::Scene(s),
                BodyElement::Page(p) => Node::Page(p),
                BodyElement::Menu(m) => Node::Menu(m),
                BodyElement::End(e) => Node::End(e),
            },
        }
    }
}

/// Mutable access to the child list of the container at `path`.
fn container_mut<'a>(story: &'a mut Story, path: &ElementPath) -> Result<Container<'a>, EditError> {
    let oob = || EditError::PathOutOfRange(path.clone());
    let leaf = |kind| EditError::IllegalContainer {
        parent: kind,
        child: NodeKind::Page,
    };
    let mut rest: &[usize] = &path.0;
    let mut cur = Container::Chapters(&mut story.chapters);
    while let Some((&idx, tail)) = rest.split_first() {
        cur = match cur {
            Container::Chapters(v) => Container::Chapter(&mut v.get_mut(idx).ok_or_else(oob)?.elements),
            Container::Chapter(v) => match v.get_mut(idx).ok_or_else(oob)? {
                ChapterElement::Scene(s) => Container::Scene(&mut s.elements),
                ChapterElement::Menu(m) => Container::Menu(&mut m.options),
            },
            Container::Scene(v) => match v.get_mut(idx).ok_or_else(oob)? {
                SceneElement::Menu(m) => Container::Menu(&mut m.options),
                SceneElement::Page(_) if tail.is_empty() => return Err(leaf(NodeKind::Page)),
                SceneElement::End(_) if tail.is_empty() => return Err(leaf(NodeKind::End)),
                _ => return Err(oob()),
            },
            Container::Menu(v) => Container::Option(&mut v.get_mut(idx).ok_or_else(oob)?.body),
            Container::Option(v) => match v.get_mut(idx).ok_or_else(oob)? {
                BodyElement::Scene(s) => Container::Scene(&mut s.elements),
                BodyElement::Menu(m) => Container::Menu(&mut m.options),
                BodyElement::Page(_) if tail.is_empty() => return Err(leaf(NodeKind::Page)),
                BodyElement::End(_) if tail.is_empty() => return Err(leaf(NodeKind::End)),
                _ => return Err(oob()),
            },
        };
        rest = tail;
    }
    Ok(cur)
}

/// Checks that `src` is a movable element and `dst_parent` can hold it.
fn check_placement(story: &Story, src: &ElementPath, dst_parent: &ElementPath) -> Result<NodeKind, EditError> {
    let src_kind = resolve(story, src)?.kind();
    let parent_kind = resolve(story, dst_parent)?.kind();
    if src_kind == NodeKind::Story || !parent_kind.accepts(src_kind) {
        return Err(EditError::IllegalContainer {
            parent: parent_kind,
            child: src_kind,
        });
    }
    Ok(src_kind)
}

/// Copies the subtree at `src` into `dst_parent` at `dst_index`.
///
/// Every id in the copy becomes `<old-id>-c<n>` with the smallest `n >= 1`
/// that is not already used in the story.
pub fn copy_element(
    story: &Story,
    src: &ElementPath,
    dst_parent: &ElementPath,
    dst_index: usize,
) -> Result<Story, EditError> {
    check_placement(story, src, dst_parent)?;
    let mut node = Node::from_ref(resolve(story, src)?).expect("story root rejected above");

    let mut used: HashSet<String> = story.element_ids().into_iter().map(str::to_owned).collect();
    node.for_each_id_mut(&mut |id| {
        let fresh = (1..)
            .map(|n| format!("{id}-c{n}"))
            .find(|cand| !used.contains(cand))
            .expect("unbounded search");
        used.insert(fresh.clone());
        *id = fresh;
    });

    let mut out = story.clone();
    let container = container_mut(&mut out, dst_parent)?;
    if dst_index > container.len() {
        return Err(EditError::PathOutOfRange(dst_parent.child(dst_index)));
    }
    container.insert(dst_index, node)?;
    Ok(out)
}

/// Moves the subtree at `src` into `dst_parent` at `dst_index`.
///
/// `dst_parent` and `dst_index` are interpreted against the story as it is
/// before the move; `dst_index` counts positions in the destination list
/// after the element has been taken out, so moving an element and then
/// moving it back to its old parent and index restores the original story.
pub fn move_element(
    story: &Story,
    src: &ElementPath,
    dst_parent: &ElementPath,
    dst_index: usize,
) -> Result<Story, EditError> {
    if src.is_empty() {
        return Err(EditError::IllegalContainer {
            parent: resolve(story, dst_parent)?.kind(),
            child: NodeKind::Story,
        });
    }
    resolve(story, src)?;
    resolve(story, dst_parent)?;
    if src.is_prefix_of(dst_parent) {
        return Err(EditError::MoveIntoSelf);
    }
    check_placement(story, src, dst_parent)?;

    let (src_parent, src_index) = src.parent().expect("non-empty path");

    // Removing the source shifts later siblings, which may include an
    // ancestor of the destination.
    let mut dst = dst_parent.clone();
    let depth = src_parent.len();
    if src_parent.is_prefix_of(&dst) && dst.len() > depth && dst.0[depth] > src_index {
        dst.0[depth] -= 1;
    }

    let mut out = story.clone();
    let node = container_mut(&mut out, &src_parent)?.remove(src_index);
    let container = container_mut(&mut out, &dst)?;
    if dst_index > container.len() {
        return Err(EditError::PathOutOfRange(dst_parent.child(dst_index)));
    }
    container.insert(dst_index, node)?;
    Ok(out)
}
