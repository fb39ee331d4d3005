//! Story tree value types.
//!
//! A story is a tree: chapters hold scenes and menus, scenes hold pages,
//! menus and endings, and menu options hold a body of scenes, pages, menus
//! and endings. Every node except the story root carries an identifier that
//! is unique across the whole story.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Upper bound on identifier length.
pub const MAX_ID_LEN: usize = 64;

/// Returns true when `id` matches `[a-z0-9-]{1,64}`.
pub fn is_valid_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= MAX_ID_LEN
        && id
            .bytes()
            .all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'-')
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Story {
    pub id: String,
    pub title: String,
    #[serde(default)]
    pub description: String,
    pub language: String,
    #[serde(default)]
    pub author_tags: BTreeSet<String>,
    #[serde(default)]
    pub evidence: ValidationEvidence,
    pub chapters: Vec<Chapter>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chapter {
    pub id: String,
    pub title: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preview_image: Option<AssetRef>,
    pub elements: Vec<ChapterElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ChapterElement {
    Scene(Scene),
    Menu(Menu),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub id: String,
    pub title: String,
    pub elements: Vec<SceneElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SceneElement {
    Page(Page),
    Menu(Menu),
    End(End),
}

/// An element of a menu option's body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BodyElement {
    Scene(Scene),
    Page(Page),
    Menu(Menu),
    End(End),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Page {
    pub id: String,
    pub payload: PagePayload,
}

/// Template-specific page content.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PagePayload {
    Simple {
        text: String,
        images: Vec<AssetRef>,
        audio: Vec<AssetRef>,
    },
    Dialogue {
        characters: Vec<String>,
        lines: Vec<DialogueLine>,
    },
    Quiz {
        statements: Vec<QuizStatement>,
    },
    Video {
        video: AssetRef,
    },
    InteractiveImage {
        image: AssetRef,
        hotspots: Vec<Hotspot>,
    },
    InteractiveBook {
        cover: AssetRef,
        book_pages: Vec<BookPage>,
    },
    Nfc {
        prompt: String,
        tag: String,
    },
    Question {
        prompt: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PageKind {
    Simple,
    Dialogue,
    Quiz,
    Video,
    InteractiveImage,
    InteractiveBook,
    Nfc,
    Question,
}

impl PageKind {
    pub const ALL: [PageKind; 8] = [
        PageKind::Simple,
        PageKind::Dialogue,
        PageKind::Quiz,
        PageKind::Video,
        PageKind::InteractiveImage,
        PageKind::InteractiveBook,
        PageKind::Nfc,
        PageKind::Question,
    ];

    /// Keyword used by the story DSL.
    pub fn keyword(self) -> &'static str {
        match self {
            PageKind::Simple => "simple",
            PageKind::Dialogue => "dialogue",
            PageKind::Quiz => "quiz",
            PageKind::Video => "video",
            PageKind::InteractiveImage => "iimage",
            PageKind::InteractiveBook => "book",
            PageKind::Nfc => "nfc",
            PageKind::Question => "question",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        PageKind::ALL.into_iter().find(|k| k.keyword() == s)
    }
}

impl PagePayload {
    pub fn kind(&self) -> PageKind {
        match self {
            PagePayload::Simple { .. } => PageKind::Simple,
            PagePayload::Dialogue { .. } => PageKind::Dialogue,
            PagePayload::Quiz { .. } => PageKind::Quiz,
            PagePayload::Video { .. } => PageKind::Video,
            PagePayload::InteractiveImage { .. } => PageKind::InteractiveImage,
            PagePayload::InteractiveBook { .. } => PageKind::InteractiveBook,
            PagePayload::Nfc { .. } => PageKind::Nfc,
            PagePayload::Question { .. } => PageKind::Question,
        }
    }

    /// Every asset referenced by the payload, in document order.
    pub fn assets(&self) -> Vec<&AssetRef> {
        fn hotspot_assets<'a>(hotspots: &'a [Hotspot], out: &mut Vec<&'a AssetRef>) {
            for h in hotspots {
                if let Interaction::Audio { audio } = &h.interaction {
                    out.push(audio);
                }
            }
        }
        let mut out = Vec::new();
        match self {
            PagePayload::Simple { images, audio, .. } => {
                out.extend(images.iter());
                out.extend(audio.iter());
            }
            PagePayload::Dialogue { lines, .. } => out.extend(lines.iter().map(|l| &l.audio)),
            PagePayload::Quiz { .. } | PagePayload::Nfc { .. } | PagePayload::Question { .. } => {}
            PagePayload::Video { video } => out.push(video),
            PagePayload::InteractiveImage { image, hotspots } => {
                out.push(image);
                hotspot_assets(hotspots, &mut out);
            }
            PagePayload::InteractiveBook { cover, book_pages } => {
                out.push(cover);
                for bp in book_pages {
                    out.push(&bp.image);
                    hotspot_assets(&bp.hotspots, &mut out);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DialogueLine {
    pub speaker: String,
    pub text: String,
    pub audio: AssetRef,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Answer {
    Right,
    Wrong,
}

impl Answer {
    pub fn keyword(self) -> &'static str {
        match self {
            Answer::Right => "right",
            Answer::Wrong => "wrong",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuizStatement {
    pub text: String,
    pub answer: Answer,
    #[serde(default)]
    pub feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BookPage {
    pub title: String,
    pub image: AssetRef,
    #[serde(default)]
    pub hotspots: Vec<Hotspot>,
}

/// Axis-aligned rectangle in fractions of the image size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Rect { x, y, w, h }
    }

    /// `0 <= x, y`, `w, h > 0` and the rectangle stays inside the unit square.
    pub fn is_within_unit_square(&self) -> bool {
        let finite = [self.x, self.y, self.w, self.h].iter().all(|v| v.is_finite());
        finite
            && self.x >= 0.0
            && self.y >= 0.0
            && self.w > 0.0
            && self.h > 0.0
            && self.x + self.w <= 1.0
            && self.y + self.h <= 1.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hotspot {
    pub rect: Rect,
    pub interaction: Interaction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Interaction {
    Text { text: String },
    Audio { audio: AssetRef },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MenuKind {
    Choice,
    More,
}

impl MenuKind {
    pub fn keyword(self) -> &'static str {
        match self {
            MenuKind::Choice => "choice",
            MenuKind::More => "more",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MenuStyle {
    Tiles,
    List,
    InteractiveImage { image: AssetRef },
    Map,
    QrCode,
}

/// Style discriminant without the payload.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MenuStyleKind {
    Tiles,
    List,
    InteractiveImage,
    Map,
    QrCode,
}

impl MenuStyleKind {
    pub const ALL: [MenuStyleKind; 5] = [
        MenuStyleKind::Tiles,
        MenuStyleKind::List,
        MenuStyleKind::InteractiveImage,
        MenuStyleKind::Map,
        MenuStyleKind::QrCode,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            MenuStyleKind::Tiles => "tiles",
            MenuStyleKind::List => "list",
            MenuStyleKind::InteractiveImage => "iimage",
            MenuStyleKind::Map => "map",
            MenuStyleKind::QrCode => "qr",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        MenuStyleKind::ALL.into_iter().find(|k| k.keyword() == s)
    }

    /// Whether an option trigger may appear in a menu of this style.
    ///
    /// Tiles and list menus are tap menus; an NFC tag may stand in for the
    /// tap. The other styles each require their own trigger.
    pub fn accepts(self, trigger: &Trigger) -> bool {
        matches!(
            (self, trigger),
            (MenuStyleKind::Tiles | MenuStyleKind::List, Trigger::None)
                | (MenuStyleKind::Tiles | MenuStyleKind::List, Trigger::NfcTag { .. })
                | (MenuStyleKind::InteractiveImage, Trigger::Poi { .. })
                | (MenuStyleKind::Map, Trigger::Region { .. })
                | (MenuStyleKind::QrCode, Trigger::Qr { .. })
        )
    }
}

impl MenuStyle {
    pub fn kind(&self) -> MenuStyleKind {
        match self {
            MenuStyle::Tiles => MenuStyleKind::Tiles,
            MenuStyle::List => MenuStyleKind::List,
            MenuStyle::InteractiveImage { .. } => MenuStyleKind::InteractiveImage,
            MenuStyle::Map => MenuStyleKind::Map,
            MenuStyle::QrCode => MenuStyleKind::QrCode,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Menu {
    pub id: String,
    pub kind: MenuKind,
    pub style: MenuStyle,
    pub options: Vec<MenuOption>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuOption {
    pub id: String,
    pub label: String,
    pub trigger: Trigger,
    pub body: Vec<BodyElement>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Trigger {
    None,
    Poi {
        rect: Rect,
    },
    Region {
        lat: f64,
        lon: f64,
        radius: f64,
    },
    /// QR code trigger. `payload` is `None` when the code is generated from
    /// the story, menu and option ids.
    Qr {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        payload: Option<String>,
    },
    NfcTag {
        tag: String,
    },
}

/// Prefix of generated QR payloads.
pub const QR_PREFIX: &str = "NARRALIVE";

/// Generated QR payload: `NARRALIVE:<story>:<menu>:<option>`.
pub fn generated_qr_payload(story_id: &str, menu_id: &str, option_id: &str) -> String {
    format!("{QR_PREFIX}:{story_id}:{menu_id}:{option_id}")
}

impl MenuOption {
    /// The payload a scanner must read to trigger this option, if it has a
    /// QR trigger.
    pub fn qr_payload(&self, story_id: &str, menu_id: &str) -> Option<String> {
        match &self.trigger {
            Trigger::Qr { payload: Some(p) } => Some(p.clone()),
            Trigger::Qr { payload: None } => Some(generated_qr_payload(story_id, menu_id, &self.id)),
            _ => None,
        }
    }
}

/// Explicit terminal element.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct End {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetKind {
    Image,
    Audio,
    Video,
}

impl fmt::Display for AssetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AssetKind::Image => "image",
            AssetKind::Audio => "audio",
            AssetKind::Video => "video",
        })
    }
}

/// Reference to a media file, relative to the asset root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssetRef {
    pub path: String,
    pub kind: AssetKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bytes: Option<u64>,
    /// Placeholder media such as a sketch or a synthesized voice track.
    #[serde(default)]
    pub draft: bool,
}

impl AssetRef {
    pub fn new(path: impl Into<String>, kind: AssetKind) -> Self {
        AssetRef {
            path: path.into(),
            kind,
            sha256: None,
            bytes: None,
            draft: false,
        }
    }

    pub fn draft(path: impl Into<String>, kind: AssetKind) -> Self {
        AssetRef {
            draft: true,
            ..AssetRef::new(path, kind)
        }
    }
}

/// Checks that an asset path is relative, uses `/` separators and contains
/// no empty, `.` or `..` segments.
pub fn is_normalized_asset_path(path: &str) -> bool {
    !path.is_empty()
        && !path.starts_with('/')
        && !path.contains('\\')
        && !path.contains(':')
        && path.split('/').all(|seg| !seg.is_empty() && seg != "." && seg != "..")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OnsiteValidation {
    #[default]
    None,
    Invited,
    Public,
}

impl OnsiteValidation {
    pub fn keyword(self) -> &'static str {
        match self {
            OnsiteValidation::None => "none",
            OnsiteValidation::Invited => "invited",
            OnsiteValidation::Public => "public",
        }
    }
}

/// Readiness evidence recorded by the authoring team.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationEvidence {
    #[serde(default)]
    pub structure_validated: bool,
    #[serde(default)]
    pub sample_scenes_validated: bool,
    #[serde(default)]
    pub validated_onsite: OnsiteValidation,
}

/// Child indices from the story root.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ElementPath(pub Vec<usize>);

impl ElementPath {
    pub fn root() -> Self {
        ElementPath(Vec::new())
    }

    pub fn child(&self, index: usize) -> Self {
        let mut v = self.0.clone();
        v.push(index);
        ElementPath(v)
    }

    pub fn parent(&self) -> Option<(ElementPath, usize)> {
        let (last, rest) = self.0.split_last()?;
        Some((ElementPath(rest.to_vec()), *last))
    }

    pub fn is_prefix_of(&self, other: &ElementPath) -> bool {
        other.0.starts_with(&self.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<usize>> for ElementPath {
    fn from(v: Vec<usize>) -> Self {
        ElementPath(v)
    }
}

impl fmt::Display for ElementPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{idx}")?;
        }
        f.write_str("]")
    }
}

/// Kind of a tree node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Story,
    Chapter,
    Scene,
    Page,
    Menu,
    Option,
    End,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NodeKind::Story => "story",
            NodeKind::Chapter => "chapter",
            NodeKind::Scene => "scene",
            NodeKind::Page => "page",
            NodeKind::Menu => "menu",
            NodeKind::Option => "option",
            NodeKind::End => "end",
        })
    }
}

impl NodeKind {
    /// Whether a node of kind `child` may be placed directly inside `self`.
    pub fn accepts(self, child: NodeKind) -> bool {
        use NodeKind::*;
        matches!(
            (self, child),
            (Story, Chapter)
                | (Chapter, Scene | Menu)
                | (Scene, Page | Menu | End)
                | (Menu, Option)
                | (Option, Scene | Page | Menu | End)
        )
    }
}

/// Borrowed view of any node in the story tree.
#[derive(Debug, Clone, Copy)]
pub enum ElementRef<'a> {
    Story(&'a Story),
    Chapter(&'a Chapter),
    Scene(&'a Scene),
    Page(&'a Page),
    Menu(&'a Menu),
    Option(&'a MenuOption),
    End(&'a End),
}

impl<'a> ElementRef<'a> {
    pub fn id(&self) -> &'a str {
        match self {
            ElementRef::Story(s) => &s.id,
            ElementRef::Chapter(c) => &c.id,
            ElementRef::Scene(s) => &s.id,
            ElementRef::Page(p) => &p.id,
            ElementRef::Menu(m) => &m.id,
            ElementRef::Option(o) => &o.id,
            ElementRef::End(e) => &e.id,
        }
    }

    pub fn kind(&self) -> NodeKind {
        match self {
            ElementRef::Story(_) => NodeKind::Story,
            ElementRef::Chapter(_) => NodeKind::Chapter,
            ElementRef::Scene(_) => NodeKind::Scene,
            ElementRef::Page(_) => NodeKind::Page,
            ElementRef::Menu(_) => NodeKind::Menu,
            ElementRef::Option(_) => NodeKind::Option,
            ElementRef::End(_) => NodeKind::End,
        }
    }

    pub fn children(&self) -> Vec<ElementRef<'a>> {
        match *self {
            ElementRef::Story(s) => s.chapters.iter().map(ElementRef::Chapter).collect(),
            ElementRef::Chapter(c) => c.elements.iter().map(ElementRef::from).collect(),
            ElementRef::Scene(s) => s.elements.iter().map(ElementRef::from).collect(),
            ElementRef::Menu(m) => m.options.iter().map(ElementRef::Option).collect(),
            ElementRef::Option(o) => o.body.iter().map(ElementRef::from).collect(),
            ElementRef::Page(_) | ElementRef::End(_) => Vec::new(),
        }
    }

    pub fn child(&self, index: usize) -> Option<ElementRef<'a>> {
        match *self {
            ElementRef::Story(s) => s.chapters.get(index).map(ElementRef::Chapter),
            ElementRef::Chapter(c) => c.elements.get(index).map(ElementRef::from),
            ElementRef::Scene(s) => s.elements.get(index).map(ElementRef::from),
            ElementRef::Menu(m) => m.options.get(index).map(ElementRef::Option),
            ElementRef::Option(o) => o.body.get(index).map(ElementRef::from),
            ElementRef::Page(_) | ElementRef::End(_) => None,
        }
    }

    pub fn child_count(&self) -> usize {
        match *self {
            ElementRef::Story(s) => s.chapters.len(),
            ElementRef::Chapter(c) => c.elements.len(),
            ElementRef::Scene(s) => s.elements.len(),
            ElementRef::Menu(m) => m.options.len(),
            ElementRef::Option(o) => o.body.len(),
            ElementRef::Page(_) | ElementRef::End(_) => 0,
        }
    }
}

impl<'a> From<&'a ChapterElement> for ElementRef<'a> {
    fn from(e: &'a ChapterElement) -> Self {
        match e {
            ChapterElement::Scene(s) => ElementRef::Scene(s),
            ChapterElement::Menu(m) => ElementRef::Menu(m),
        }
    }
}

impl<'a> From<&'a SceneElement> for ElementRef<'a> {
    fn from(e: &'a SceneElement) -> Self {
        match e {
            SceneElement::Page(p) => ElementRef::Page(p),
            SceneElement::Menu(m) => ElementRef::Menu(m),
            SceneElement::End(e) => ElementRef::End(e),
        }
    }
}

impl<'a> From<&'a BodyElement> for ElementRef<'a> {
    fn from(e: &'a BodyElement) -> Self {
        match e {
            BodyElement::Scene(s) => ElementRef::Scene(s),
            BodyElement::Page(p) => ElementRef::Page(p),
            BodyElement::Menu(m) => ElementRef::Menu(m),
            BodyElement::End(e) => ElementRef::End(e),
        }
    }
}

impl Story {
    pub fn root(&self) -> ElementRef<'_> {
        ElementRef::Story(self)
    }

    /// Pre-order walk over every node below the root, with its path.
    pub fn walk<'a>(&'a self, mut f: impl FnMut(&ElementPath, ElementRef<'a>)) {
        fn go<'a>(node: ElementRef<'a>, path: &mut Vec<usize>, f: &mut dyn FnMut(&ElementPath, ElementRef<'a>)) {
            for (i, child) in node.children().into_iter().enumerate() {
                path.push(i);
                f(&ElementPath(path.clone()), child);
                go(child, path, f);
                path.pop();
            }
        }
        go(self.root(), &mut Vec::new(), &mut f);
    }

    /// Every element id in pre-order.
    pub fn element_ids(&self) -> Vec<&str> {
        let mut ids = Vec::new();
        self.walk(|_, e| ids.push(e.id()));
        ids
    }

    /// Every asset referenced anywhere in the story, in document order.
    pub fn assets(&self) -> Vec<&AssetRef> {
        let mut out = Vec::new();
        self.walk(|_, e| match e {
            ElementRef::Chapter(c) => out.extend(c.preview_image.iter()),
            ElementRef::Page(p) => out.extend(p.payload.assets()),
            ElementRef::Menu(m) => {
                if let MenuStyle::InteractiveImage { image } = &m.style {
                    out.push(image);
                }
            }
            _ => {}
        });
        out
    }

    pub fn pages(&self) -> Vec<&Page> {
        let mut out = Vec::new();
        self.walk(|_, e| {
            if let ElementRef::Page(p) = e {
                out.push(p);
            }
        });
        out
    }

    pub fn menus(&self) -> Vec<&Menu> {
        let mut out = Vec::new();
        self.walk(|_, e| {
            if let ElementRef::Menu(m) = e {
                out.push(m);
            }
        });
        out
    }

    /// Finds an element by id, returning its path.
    pub fn find(&self, id: &str) -> Option<(ElementPath, ElementRef<'_>)> {
        let mut found = None;
        self.walk(|p, e| {
            if found.is_none() && e.id() == id {
                found = Some((p.clone(), e));
            }
        });
        found
    }

    /// Number of nodes below the root.
    pub fn element_count(&self) -> usize {
        let mut n = 0;
        self.walk(|_, _| n += 1);
        n
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn id_rules() {
        assert!(is_valid_id("sc1"));
        assert!(is_valid_id("a-b-0"));
        assert!(!is_valid_id(""));
        assert!(!is_valid_id("Sc1"));
        assert!(!is_valid_id("a_b"));
        assert!(is_valid_id(&"a".repeat(64)));
        assert!(!is_valid_id(&"a".repeat(65)));
    }

    #[test]
    fn asset_paths() {
        assert!(is_normalized_asset_path("img/a.png"));
        assert!(!is_normalized_asset_path("/img/a.png"));
        assert!(!is_normalized_asset_path("img/../a.png"));
        assert!(!is_normalized_asset_path("img//a.png"));
        assert!(!is_normalized_asset_path("./a.png"));
        assert!(!is_normalized_asset_path("c:\\a.png"));
        assert!(!is_normalized_asset_path(""));
    }

    #[test]
    fn rect_bounds() {
        assert!(Rect::new(0.0, 0.0, 1.0, 1.0).is_within_unit_square());
        assert!(Rect::new(0.5, 0.5, 0.5, 0.5).is_within_unit_square());
        assert!(!Rect::new(0.6, 0.0, 0.5, 0.5).is_within_unit_square());
        assert!(!Rect::new(0.0, 0.0, 0.0, 0.5).is_within_unit_square());
        assert!(!Rect::new(-0.1, 0.0, 0.5, 0.5).is_within_unit_square());
    }

    #[test]
    fn style_trigger_pairing() {
        let poi = Trigger::Poi {
            rect: Rect::new(0.0, 0.0, 0.1, 0.1),
        };
        let region = Trigger::Region {
            lat: 0.0,
            lon: 0.0,
            radius: 5.0,
        };
        let qr = Trigger::Qr { payload: None };
        assert!(MenuStyleKind::Tiles.accepts(&Trigger::None));
        assert!(MenuStyleKind::List.accepts(&Trigger::NfcTag { tag: "t".into() }));
        assert!(!MenuStyleKind::Tiles.accepts(&region));
        assert!(MenuStyleKind::InteractiveImage.accepts(&poi));
        assert!(!MenuStyleKind::InteractiveImage.accepts(&Trigger::None));
        assert!(MenuStyleKind::Map.accepts(&region));
        assert!(!MenuStyleKind::Map.accepts(&qr));
        assert!(MenuStyleKind::QrCode.accepts(&qr));
    }

    #[test]
    fn containers() {
        assert!(NodeKind::Story.accepts(NodeKind::Chapter));
        assert!(!NodeKind::Story.accepts(NodeKind::Page));
        assert!(!NodeKind::Chapter.accepts(NodeKind::Page));
        assert!(NodeKind::Option.accepts(NodeKind::End));
        assert!(!NodeKind::Page.accepts(NodeKind::Page));
    }

    #[test]
    fn qr_payloads() {
        let opt = MenuOption {
            id: "o1".into(),
            label: "A".into(),
            trigger: Trigger::Qr { payload: None },
            body: vec![],
        };
        assert_eq!(opt.qr_payload("s", "m1").as_deref(), Some("NARRALIVE:s:m1:o1"));
    }
}
