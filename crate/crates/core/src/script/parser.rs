use std::collections::{BTreeSet, HashMap, HashSet};

use crate::diagnostic::Diagnostic;
use crate::model::*;

use super::lexer::{Line, Tok, Token};

#[derive(Debug, Clone)]
enum ValueKind {
    Str(String),
    Word(String),
    Tuple(Vec<String>),
    /// `~"path"`: a draft asset path.
    DraftStr(String),
}

#[derive(Debug, Clone)]
struct Value {
    kind: ValueKind,
    col: usize,
}

impl Value {
    fn describe(&self) -> &'static str {
        match self.kind {
            ValueKind::Str(_) => "string",
            ValueKind::Word(_) => "word",
            ValueKind::Tuple(_) => "number list",
            ValueKind::DraftStr(_) => "draft path",
        }
    }
}

#[derive(Debug)]
struct Attr {
    key: String,
    key_col: usize,
    value: Value,
}

/// A tokenized line split into keyword, positionals and `key=value` attributes.
struct Args<'l> {
    line: &'l Line,
    keyword: String,
    positionals: std::collections::VecDeque<Value>,
    attrs: Vec<Attr>,
}

fn parse_value(tokens: &[Token], i: &mut usize, no: usize, diags: &mut Vec<Diagnostic>) -> Option<Value> {
    let tok = &tokens[*i];
    let col = tok.col;
    match &tok.tok {
        Tok::Tilde => match tokens.get(*i + 1) {
            Some(Token { tok: Tok::Str(s), .. }) => {
                *i += 2;
                Some(Value {
                    kind: ValueKind::DraftStr(s.clone()),
                    col,
                })
            }
            _ => {
                diags.push(Diagnostic::error("E006", "`~` must be followed by a quoted path").at(no, col));
                None
            }
        },
        Tok::Str(s) => {
            *i += 1;
            Some(Value {
                kind: ValueKind::Str(s.clone()),
                col,
            })
        }
        Tok::Word(w) => {
            *i += 1;
            if !matches!(tokens.get(*i), Some(Token { tok: Tok::Comma, .. })) {
                return Some(Value {
                    kind: ValueKind::Word(w.clone()),
                    col,
                });
            }
            let mut items = vec![w.clone()];
            while matches!(tokens.get(*i), Some(Token { tok: Tok::Comma, .. })) {
                match tokens.get(*i + 1) {
                    Some(Token { tok: Tok::Word(w), .. }) => {
                        items.push(w.clone());
                        *i += 2;
                    }
                    _ => {
                        diags.push(Diagnostic::error("E006", "expected a number after `,`").at(no, tokens[*i].col));
                        return None;
                    }
                }
            }
            Some(Value {
                kind: ValueKind::Tuple(items),
                col,
            })
        }
        Tok::Eq | Tok::Comma => {
            diags.push(Diagnostic::error("E006", "unexpected punctuation").at(no, col));
            None
        }
    }
}

impl<'l> Args<'l> {
    fn split(line: &'l Line, diags: &mut Vec<Diagnostic>) -> Option<Args<'l>> {
        let toks = &line.tokens;
        let keyword = match toks.first() {
            Some(Token { tok: Tok::Word(w), .. }) => w.clone(),
            Some(t) => {
                diags.push(Diagnostic::error("E002", "expected a keyword").at(line.no, t.col));
                return None;
            }
            None => return None,
        };
        let mut positionals = std::collections::VecDeque::new();
        let mut attrs = Vec::new();
        let mut i = 1;
        while i < toks.len() {
            let is_attr =
                matches!(toks[i].tok, Tok::Word(_)) && matches!(toks.get(i + 1), Some(Token { tok: Tok::Eq, .. }));
            if is_attr {
                let Tok::Word(key) = &toks[i].tok else { unreachable!() };
                let key_col = toks[i].col;
                i += 2;
                if i >= toks.len() {
                    diags.push(Diagnostic::error("E006", format!("missing value for `{key}`")).at(line.no, key_col));
                    return None;
                }
                let value = parse_value(toks, &mut i, line.no, diags)?;
                if attrs.iter().any(|a: &Attr| &a.key == key && key != "tag") {
                    diags.push(Diagnostic::error("E006", format!("duplicate attribute `{key}`")).at(line.no, key_col));
                    return None;
                }
                attrs.push(Attr {
                    key: key.clone(),
                    key_col,
                    value,
                });
            } else {
                positionals.push_back(parse_value(toks, &mut i, line.no, diags)?);
            }
        }
        Some(Args {
            line,
            keyword,
            positionals,
            attrs,
        })
    }

    fn no(&self) -> usize {
        self.line.no
    }

    fn take_attr(&mut self, key: &str) -> Option<Value> {
        let idx = self.attrs.iter().position(|a| a.key == key)?;
        Some(self.attrs.remove(idx).value)
    }

    fn take_positional(&mut self) -> Option<Value> {
        self.positionals.pop_front()
    }

    /// Reports leftover positionals and attributes.
    fn finish(self, diags: &mut Vec<Diagnostic>) {
        for v in self.positionals {
            diags.push(
                Diagnostic::error("E006", format!("unexpected {} after `{}`", v.describe(), self.keyword))
                    .at(self.line.no, v.col),
            );
        }
        for a in self.attrs {
            diags.push(
                Diagnostic::error("E002", format!("unknown attribute `{}` for `{}`", a.key, self.keyword))
                    .at(self.line.no, a.key_col),
            );
        }
    }
}

pub(crate) struct Parser {
    pub diags: Vec<Diagnostic>,
    explicit_ids: HashMap<String, (usize, usize)>,
}

impl Parser {
    pub fn new() -> Self {
        Parser {
            diags: Vec::new(),
            explicit_ids: HashMap::new(),
        }
    }

    fn err(&mut self, code: &str, line: usize, col: usize, msg: impl Into<String>) {
        self.diags.push(Diagnostic::error(code, msg).at(line, col));
    }

    // ---- value helpers -------------------------------------------------

    fn expect_str(&mut self, args: &mut Args, what: &str) -> Option<String> {
        match args.take_positional() {
            Some(Value {
                kind: ValueKind::Str(s),
                ..
            }) => Some(s),
            Some(v) => {
                self.err("E006", args.no(), v.col, format!("{what} must be a quoted string"));
                None
            }
            None => {
                self.err(
                    "E004",
                    args.no(),
                    args.line.first_col(),
                    format!("`{}` requires {what}", args.keyword),
                );
                None
            }
        }
    }

    fn str_value(&mut self, no: usize, v: Value, what: &str) -> Option<String> {
        match v.kind {
            ValueKind::Str(s) => Some(s),
            _ => {
                self.err("E006", no, v.col, format!("{what} must be a quoted string"));
                None
            }
        }
    }

    fn path_value(&mut self, no: usize, v: Value, kind: AssetKind) -> Option<AssetRef> {
        let (path, draft) = match v.kind {
            ValueKind::Str(s) => (s, false),
            ValueKind::DraftStr(s) => (s, true),
            _ => {
                self.err("E006", no, v.col, "asset path must be a quoted string");
                return None;
            }
        };
        if !is_normalized_asset_path(&path) {
            self.err(
                "E006",
                no,
                v.col,
                format!("asset path `{path}` must be relative and normalized"),
            );
            return None;
        }
        Some(AssetRef {
            draft,
            ..AssetRef::new(path, kind)
        })
    }

    fn positional_path(&mut self, args: &mut Args, kind: AssetKind) -> Option<AssetRef> {
        match args.take_positional() {
            Some(v) => self.path_value(args.no(), v, kind),
            None => {
                self.err(
                    "E004",
                    args.no(),
                    args.line.first_col(),
                    format!("`{}` requires an asset path", args.keyword),
                );
                None
            }
        }
    }

    fn word_value(&mut self, no: usize, v: Value, what: &str) -> Option<String> {
        match v.kind {
            ValueKind::Word(w) => Some(w),
            _ => {
                self.err("E006", no, v.col, format!("{what} must be a bare word"));
                None
            }
        }
    }

    fn bool_value(&mut self, no: usize, v: Value) -> Option<bool> {
        let col = v.col;
        match self.word_value(no, v, "flag")?.as_str() {
            "true" => Some(true),
            "false" => Some(false),
            other => {
                self.err("E006", no, col, format!("expected true or false, found `{other}`"));
                None
            }
        }
    }

    fn numbers(&mut self, no: usize, v: Value, n: usize, what: &str) -> Option<Vec<f64>> {
        let items = match v.kind {
            ValueKind::Tuple(items) => items,
            ValueKind::Word(w) => vec![w],
            _ => {
                self.err("E006", no, v.col, format!("{what} must be {n} comma-separated numbers"));
                return None;
            }
        };
        if items.len() != n {
            self.err("E006", no, v.col, format!("{what} must be {n} comma-separated numbers"));
            return None;
        }
        let mut out = Vec::with_capacity(n);
        for item in items {
            match item.parse::<f64>() {
                Ok(x) if x.is_finite() => out.push(x),
                _ => {
                    self.err("E006", no, v.col, format!("`{item}` is not a decimal number"));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn rect(&mut self, no: usize, v: Value) -> Option<Rect> {
        let col = v.col;
        let n = self.numbers(no, v, 4, "rectangle")?;
        let rect = Rect::new(n[0], n[1], n[2], n[3]);
        if !rect.is_within_unit_square() {
            self.err("E006", no, col, "rectangle must have positive size and lie within 0..1");
            return None;
        }
        Some(rect)
    }

    /// Reads the optional `id=` attribute; an empty string means "derive later".
    fn id_attr(&mut self, args: &mut Args) -> String {
        let Some(v) = args.take_attr("id") else {
            return String::new();
        };
        let col = v.col;
        let id = match v.kind {
            ValueKind::Word(w) | ValueKind::Str(w) => w,
            _ => {
                self.err("E006", args.no(), col, "id must be a word");
                return String::new();
            }
        };
        if !is_valid_id(&id) {
            self.err(
                "E006",
                args.no(),
                col,
                format!("id `{id}` must match [a-z0-9-]{{1,64}}"),
            );
            return String::new();
        }
        if let Some(&(l, c)) = self.explicit_ids.get(&id) {
            self.err(
                "E003",
                args.no(),
                col,
                format!("duplicate id `{id}` (first declared at {l}:{c})"),
            );
        } else {
            self.explicit_ids.insert(id.clone(), (args.no(), col));
        }
        id
    }

    fn no_children(&mut self, line: &Line) {
        if let Some(child) = line.children.first() {
            self.err("E001", child.no, 1, "unexpected indented block");
        }
    }

    // ---- structure -----------------------------------------------------

    pub fn parse_document(&mut self, lines: &[Line]) -> Option<Story> {
        let mut story = None;
        for line in lines {
            let Some(mut args) = Args::split(line, &mut self.diags) else {
                continue;
            };
            if args.keyword != "story" {
                self.err(
                    "E002",
                    line.no,
                    line.first_col(),
                    format!("expected `story`, found `{}`", args.keyword),
                );
                continue;
            }
            if story.is_some() {
                self.err("E002", line.no, line.first_col(), "only one `story` per file");
                continue;
            }
            story = self.story(&mut args);
        }
        if story.is_none() && self.diags.is_empty() {
            self.err("E004", 1, 1, "missing `story` declaration");
        }
        story
    }

    fn story(&mut self, args: &mut Args) -> Option<Story> {
        let line = args.line;
        let title = self.expect_str(args, "a title");
        let id = self.id_attr(args);
        let language = match args.take_attr("lang") {
            Some(v) => match v.kind {
                ValueKind::Word(w) | ValueKind::Str(w) if !w.is_empty() => w,
                _ => {
                    self.err("E006", line.no, v.col, "lang must be a language tag");
                    "en".to_owned()
                }
            },
            None => "en".to_owned(),
        };
        let description = match args.take_attr("description") {
            Some(v) => self.str_value(line.no, v, "description").unwrap_or_default(),
            None => String::new(),
        };
        let mut author_tags = BTreeSet::new();
        while let Some(v) = args.take_attr("tag") {
            if let Some(t) = self.str_value(line.no, v, "tag") {
                author_tags.insert(t);
            }
        }
        let mut evidence = ValidationEvidence::default();
        if let Some(v) = args.take_attr("structure_validated") {
            evidence.structure_validated = self.bool_value(line.no, v).unwrap_or(false);
        }
        if let Some(v) = args.take_attr("sample_scenes_validated") {
            evidence.sample_scenes_validated = self.bool_value(line.no, v).unwrap_or(false);
        }
        if let Some(v) = args.take_attr("validated_onsite") {
            let col = v.col;
            evidence.validated_onsite = match self.word_value(line.no, v, "validated_onsite").as_deref() {
                Some("none") => OnsiteValidation::None,
                Some("invited") => OnsiteValidation::Invited,
                Some("public") => OnsiteValidation::Public,
                Some(other) => {
                    self.err("E006", line.no, col, format!("unknown on-site level `{other}`"));
                    OnsiteValidation::None
                }
                None => OnsiteValidation::None,
            };
        }
        take_finish(args, &mut self.diags);

        let quiet = self.diags.len();
        let mut chapters = Vec::new();
        for child in &line.children {
            let Some(mut cargs) = Args::split(child, &mut self.diags) else {
                continue;
            };
            match cargs.keyword.as_str() {
                "chapter" => chapters.extend(self.chapter(&mut cargs)),
                other => self.unexpected(child, other, "story", "chapter"),
            }
        }
        if chapters.is_empty() && self.diags.len() == quiet {
            self.err("E004", line.no, line.first_col(), "a story needs at least one chapter");
        }
        Some(Story {
            id,
            title: title?,
            description,
            language,
            author_tags,
            evidence,
            chapters,
        })
    }

    fn unexpected(&mut self, line: &Line, found: &str, parent: &str, allowed: &str) {
        let known = ["story", "chapter", "scene", "page", "menu", "option", "end"];
        let msg = if known.contains(&found) {
            format!("`{found}` is not allowed inside `{parent}` (expected {allowed})")
        } else {
            format!("unknown keyword `{found}` (expected {allowed})")
        };
        self.err("E002", line.no, line.first_col(), msg);
    }

    fn chapter(&mut self, args: &mut Args) -> Option<Chapter> {
        let line = args.line;
        let title = self.expect_str(args, "a title");
        let id = self.id_attr(args);
        let preview_image = match args.take_attr("preview") {
            Some(v) => self.path_value(line.no, v, AssetKind::Image),
            None => None,
        };
        take_finish(args, &mut self.diags);
        let quiet = self.diags.len();
        let mut elements = Vec::new();
        for child in &line.children {
            let Some(mut cargs) = Args::split(child, &mut self.diags) else {
                continue;
            };
            match cargs.keyword.as_str() {
                "scene" => elements.extend(self.scene(&mut cargs).map(ChapterElement::Scene)),
                "menu" => elements.extend(self.menu(&mut cargs).map(ChapterElement::Menu)),
                other => self.unexpected(child, other, "chapter", "scene or menu"),
            }
        }
        if elements.is_empty() && self.diags.len() == quiet {
            self.err(
                "E004",
                line.no,
                line.first_col(),
                "a chapter needs at least one scene or menu",
            );
        }
        Some(Chapter {
            id,
            title: title?,
            preview_image,
            elements,
        })
    }

    fn scene(&mut self, args: &mut Args) -> Option<Scene> {
        let line = args.line;
        let title = self.expect_str(args, "a title");
        let id = self.id_attr(args);
        take_finish(args, &mut self.diags);
        let quiet = self.diags.len();
        let mut elements = Vec::new();
        for child in &line.children {
            let Some(mut cargs) = Args::split(child, &mut self.diags) else {
                continue;
            };
            match cargs.keyword.as_str() {
                "page" => elements.extend(self.page(&mut cargs).map(SceneElement::Page)),
                "menu" => elements.extend(self.menu(&mut cargs).map(SceneElement::Menu)),
                "end" => elements.extend(self.end(&mut cargs).map(SceneElement::End)),
                other => self.unexpected(child, other, "scene", "page, menu or end"),
            }
        }
        if elements.is_empty() && self.diags.len() == quiet {
            self.err(
                "E004",
                line.no,
                line.first_col(),
                "a scene needs at least one page, menu or end",
            );
        }
        Some(Scene {
            id,
            title: title?,
            elements,
        })
    }

    fn end(&mut self, args: &mut Args) -> Option<End> {
        let line = args.line;
        let label = match args.take_positional() {
            Some(v) => Some(self.str_value(line.no, v, "end label")?),
            None => None,
        };
        let id = self.id_attr(args);
        take_finish(args, &mut self.diags);
        self.no_children(line);
        Some(End { id, label })
    }

    fn menu(&mut self, args: &mut Args) -> Option<Menu> {
        let line = args.line;
        let kind = match args.take_positional() {
            Some(Value {
                kind: ValueKind::Word(w),
                col,
            }) => match w.as_str() {
                "choice" => Some(MenuKind::Choice),
                "more" => Some(MenuKind::More),
                other => {
                    self.err("E002", line.no, col, format!("unknown menu kind `{other}`"));
                    None
                }
            },
            Some(v) => {
                self.err("E006", line.no, v.col, "menu kind must be `choice` or `more`");
                None
            }
            None => {
                self.err(
                    "E004",
                    line.no,
                    line.first_col(),
                    "menu requires a kind (`choice` or `more`)",
                );
                None
            }
        };
        let id = self.id_attr(args);
        let style_kind = match args.take_attr("style") {
            Some(v) => {
                let col = v.col;
                let w = self.word_value(line.no, v, "style");
                match w.as_deref().map(MenuStyleKind::from_keyword) {
                    Some(Some(k)) => Some(k),
                    Some(None) => {
                        self.err(
                            "E006",
                            line.no,
                            col,
                            format!("unknown menu style `{}`", w.unwrap_or_default()),
                        );
                        None
                    }
                    None => None,
                }
            }
            None => {
                self.err("E004", line.no, line.first_col(), "menu requires `style=`");
                None
            }
        };
        let image = args.take_attr("image");
        let style = match (style_kind, image) {
            (Some(MenuStyleKind::InteractiveImage), Some(v)) => self
                .path_value(line.no, v, AssetKind::Image)
                .map(|image| MenuStyle::InteractiveImage { image }),
            (Some(MenuStyleKind::InteractiveImage), None) => {
                self.err("E004", line.no, line.first_col(), "style=iimage requires `image=`");
                None
            }
            (Some(_), Some(v)) => {
                self.err("E006", line.no, v.col, "`image=` is only valid with style=iimage");
                None
            }
            (Some(MenuStyleKind::Tiles), None) => Some(MenuStyle::Tiles),
            (Some(MenuStyleKind::List), None) => Some(MenuStyle::List),
            (Some(MenuStyleKind::Map), None) => Some(MenuStyle::Map),
            (Some(MenuStyleKind::QrCode), None) => Some(MenuStyle::QrCode),
            (None, _) => None,
        };
        take_finish(args, &mut self.diags);

        let quiet = self.diags.len();
        let mut options = Vec::new();
        for child in &line.children {
            let Some(mut cargs) = Args::split(child, &mut self.diags) else {
                continue;
            };
            match cargs.keyword.as_str() {
                "option" => {
                    if let Some(opt) = self.option(&mut cargs) {
                        if let Some(sk) = style_kind {
                            if !sk.accepts(&opt.trigger) {
                                self.err(
                                    "E005",
                                    child.no,
                                    child.first_col(),
                                    format!(
                                        "option trigger {} does not match menu style `{}`",
                                        trigger_name(&opt.trigger),
                                        sk.keyword()
                                    ),
                                );
                            }
                        }
                        options.push(opt);
                    }
                }
                other => self.unexpected(child, other, "menu", "option"),
            }
        }
        if options.is_empty() && self.diags.len() == quiet {
            self.err("E004", line.no, line.first_col(), "a menu needs at least one option");
        }
        Some(Menu {
            id,
            kind: kind?,
            style: style?,
            options,
        })
    }

    fn option(&mut self, args: &mut Args) -> Option<MenuOption> {
        let line = args.line;
        let label = self.expect_str(args, "a label");
        let id = self.id_attr(args);
        let mut triggers = Vec::new();
        if let Some(v) = args.take_attr("poi") {
            triggers.push((v.col, self.rect(line.no, v).map(|rect| Trigger::Poi { rect })));
        }
        if let Some(v) = args.take_attr("region") {
            let col = v.col;
            let region = self.numbers(line.no, v, 3, "region").and_then(|n| {
                let (lat, lon, radius) = (n[0], n[1], n[2]);
                if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
                    self.err("E006", line.no, col, "region latitude/longitude out of range");
                    None
                } else if radius <= 0.0 {
                    self.err("E006", line.no, col, "region radius must be positive");
                    None
                } else {
                    Some(Trigger::Region { lat, lon, radius })
                }
            });
            triggers.push((col, region));
        }
        if let Some(v) = args.take_attr("qr") {
            let col = v.col;
            let t = match v.kind {
                ValueKind::Word(w) if w == "auto" => Some(Trigger::Qr { payload: None }),
                ValueKind::Str(s) if !s.is_empty() => Some(Trigger::Qr { payload: Some(s) }),
                _ => {
                    self.err("E006", line.no, col, "qr must be `auto` or a quoted payload");
                    None
                }
            };
            triggers.push((col, t));
        }
        if let Some(v) = args.take_attr("nfc") {
            let col = v.col;
            let t = self.str_value(line.no, v, "nfc tag").map(|tag| Trigger::NfcTag { tag });
            triggers.push((col, t));
        }
        take_finish(args, &mut self.diags);
        if triggers.len() > 1 {
            self.err("E006", line.no, triggers[1].0, "an option has at most one trigger");
        }
        let trigger = match triggers.into_iter().next() {
            Some((_, t)) => t,
            None => Some(Trigger::None),
        };

        let quiet = self.diags.len();
        let mut body = Vec::new();
        for child in &line.children {
            let Some(mut cargs) = Args::split(child, &mut self.diags) else {
                continue;
            };
            match cargs.keyword.as_str() {
                "scene" => body.extend(self.scene(&mut cargs).map(BodyElement::Scene)),
                "page" => body.extend(self.page(&mut cargs).map(BodyElement::Page)),
                "menu" => body.extend(self.menu(&mut cargs).map(BodyElement::Menu)),
                "end" => body.extend(self.end(&mut cargs).map(BodyElement::End)),
                other => self.unexpected(child, other, "option", "scene, page, menu or end"),
            }
        }
        if body.is_empty() && self.diags.len() == quiet {
            self.err("E004", line.no, line.first_col(), "an option needs a non-empty body");
        }
        Some(MenuOption {
            id,
            label: label?,
            trigger: trigger?,
            body,
        })
    }

    // ---- pages -----------------------------------------------------------

    fn page(&mut self, args: &mut Args) -> Option<Page> {
        let line = args.line;
        let kind = match args.take_positional() {
            Some(Value {
                kind: ValueKind::Word(w),
                col,
            }) => match PageKind::from_keyword(&w) {
                Some(k) => Some(k),
                None => {
                    self.err("E002", line.no, col, format!("unknown page template `{w}`"));
                    None
                }
            },
            Some(v) => {
                self.err("E006", line.no, v.col, "page template must be a bare word");
                None
            }
            None => {
                self.err("E004", line.no, line.first_col(), "page requires a template kind");
                None
            }
        };
        let id = self.id_attr(args);
        take_finish(args, &mut self.diags);
        let payload = self.payload(kind?, line)?;
        Some(Page { id, payload })
    }

    fn payload(&mut self, kind: PageKind, page: &Line) -> Option<PagePayload> {
        let mut fields: Vec<Args> = Vec::new();
        for child in &page.children {
            if let Some(a) = Args::split(child, &mut self.diags) {
                fields.push(a);
            }
        }
        let allowed: &[&str] = match kind {
            PageKind::Simple => &["text", "image", "audio"],
            PageKind::Dialogue => &["character", "line"],
            PageKind::Quiz => &["statement"],
            PageKind::Video => &["video"],
            PageKind::InteractiveImage => &["image", "hotspot"],
            PageKind::InteractiveBook => &["cover", "bookpage"],
            PageKind::Nfc => &["prompt", "tag"],
            PageKind::Question => &["prompt"],
        };
        let before = self.diags.len();
        let mut by_name: HashMap<&str, Vec<Args>> = HashMap::new();
        for a in fields {
            match allowed.iter().find(|k| **k == a.keyword) {
                Some(k) => by_name.entry(k).or_default().push(a),
                None => self.err(
                    "E002",
                    a.no(),
                    a.line.first_col(),
                    format!("`{}` is not a field of `{}` pages", a.keyword, kind.keyword()),
                ),
            }
        }
        let mut take = |name: &str| by_name.remove(name).unwrap_or_default();

        let payload = match kind {
            PageKind::Simple => {
                let texts = take("text");
                let text = self.single(texts, page, "text", false, |p, a| p.expect_str(a, "text"));
                let images = take("image")
                    .into_iter()
                    .filter_map(|mut a| self.leaf(&mut a, |p, a| p.positional_path(a, AssetKind::Image)))
                    .collect();
                let audio = take("audio")
                    .into_iter()
                    .filter_map(|mut a| self.leaf(&mut a, |p, a| p.positional_path(a, AssetKind::Audio)))
                    .collect();
                PagePayload::Simple {
                    text: text.unwrap_or_default(),
                    images,
                    audio,
                }
            }
            PageKind::Dialogue => {
                let mut characters: Vec<String> = Vec::new();
                for mut a in take("character") {
                    if let Some(c) = self.leaf(&mut a, |p, a| p.expect_str(a, "a character name")) {
                        characters.push(c);
                    }
                }
                let mut lines = Vec::new();
                for mut a in take("line") {
                    let no = a.no();
                    let col = a.line.first_col();
                    let line = self.leaf(&mut a, |p, a| {
                        let speaker_col = a.positionals.front().map(|v| v.col);
                        let speaker = p.expect_str(a, "a speaker")?;
                        let audio = match a.take_attr("audio") {
                            Some(v) => p.path_value(no, v, AssetKind::Audio),
                            None => {
                                p.err("E004", no, col, "dialogue line requires `audio=`");
                                None
                            }
                        };
                        let text = match a.take_attr("text") {
                            Some(v) => p.str_value(no, v, "line text"),
                            None => {
                                p.err("E004", no, col, "dialogue line requires `text=`");
                                None
                            }
                        };
                        Some((speaker, speaker_col.unwrap_or(col), text?, audio?))
                    });
                    if let Some((speaker, scol, text, audio)) = line {
                        if !characters.contains(&speaker) {
                            self.err(
                                "E006",
                                no,
                                scol,
                                format!("speaker `{speaker}` is not a declared character"),
                            );
                            continue;
                        }
                        lines.push(DialogueLine { speaker, text, audio });
                    }
                }
                PagePayload::Dialogue { characters, lines }
            }
            PageKind::Quiz => {
                let mut statements = Vec::new();
                for mut a in take("statement") {
                    let no = a.no();
                    let col = a.line.first_col();
                    let st = self.leaf(&mut a, |p, a| {
                        let text = p.expect_str(a, "statement text")?;
                        let answer = match a.take_attr("answer") {
                            Some(v) => {
                                let vcol = v.col;
                                match p.word_value(no, v, "answer").as_deref() {
                                    Some("right") => Some(Answer::Right),
                                    Some("wrong") => Some(Answer::Wrong),
                                    Some(other) => {
                                        p.err(
                                            "E006",
                                            no,
                                            vcol,
                                            format!("answer must be right or wrong, found `{other}`"),
                                        );
                                        None
                                    }
                                    None => None,
                                }
                            }
                            None => {
                                p.err("E004", no, col, "statement requires `answer=`");
                                None
                            }
                        };
                        let feedback = match a.take_attr("feedback") {
                            Some(v) => p.str_value(no, v, "feedback")?,
                            None => String::new(),
                        };
                        Some(QuizStatement {
                            text,
                            answer: answer?,
                            feedback,
                        })
                    });
                    statements.extend(st);
                }
                if statements.is_empty() && self.diags.len() == before {
                    self.err("E004", page.no, page.first_col(), "quiz needs at least one `statement`");
                }
                PagePayload::Quiz { statements }
            }
            PageKind::Video => {
                let video = self.single(take("video"), page, "video", true, |p, a| {
                    p.positional_path(a, AssetKind::Video)
                })?;
                PagePayload::Video { video }
            }
            PageKind::InteractiveImage => {
                let image = self.single(take("image"), page, "image", true, |p, a| {
                    p.positional_path(a, AssetKind::Image)
                });
                let hotspots = take("hotspot")
                    .into_iter()
                    .filter_map(|mut a| self.leaf(&mut a, Parser::hotspot))
                    .collect();
                PagePayload::InteractiveImage {
                    image: image?,
                    hotspots,
                }
            }
            PageKind::InteractiveBook => {
                let cover = self.single(take("cover"), page, "cover", true, |p, a| {
                    p.positional_path(a, AssetKind::Image)
                });
                let mut book_pages = Vec::new();
                for mut a in take("bookpage") {
                    if let Some(bp) = self.book_page(&mut a) {
                        book_pages.push(bp);
                    }
                }
                if book_pages.is_empty() && self.diags.len() == before {
                    self.err("E004", page.no, page.first_col(), "book needs at least one `bookpage`");
                }
                PagePayload::InteractiveBook {
                    cover: cover?,
                    book_pages,
                }
            }
            PageKind::Nfc => {
                let prompt = self.single(take("prompt"), page, "prompt", true, |p, a| p.expect_str(a, "a prompt"));
                let tag = self.single(take("tag"), page, "tag", true, |p, a| p.expect_str(a, "a tag"));
                PagePayload::Nfc {
                    prompt: prompt?,
                    tag: tag?,
                }
            }
            PageKind::Question => {
                let prompt = self.single(take("prompt"), page, "prompt", true, |p, a| p.expect_str(a, "a prompt"))?;
                PagePayload::Question { prompt }
            }
        };
        Some(payload)
    }

    /// Parses a field line that must not have children and reports leftovers.
    fn leaf<T>(&mut self, args: &mut Args, f: impl FnOnce(&mut Parser, &mut Args) -> Option<T>) -> Option<T> {
        let out = f(self, args);
        self.no_children(args.line);
        let rest = Args {
            line: args.line,
            keyword: std::mem::take(&mut args.keyword),
            positionals: std::mem::take(&mut args.positionals),
            attrs: std::mem::take(&mut args.attrs),
        };
        rest.finish(&mut self.diags);
        out
    }

    /// A field that may appear at most once (and exactly once when `required`).
    fn single<T>(
        &mut self,
        mut found: Vec<Args>,
        page: &Line,
        name: &str,
        required: bool,
        f: impl FnOnce(&mut Parser, &mut Args) -> Option<T>,
    ) -> Option<T> {
        if found.len() > 1 {
            let dup = &found[1];
            self.err(
                "E006",
                dup.no(),
                dup.line.first_col(),
                format!("`{name}` may appear only once"),
            );
        }
        if found.is_empty() {
            if required {
                self.err(
                    "E004",
                    page.no,
                    page.first_col(),
                    format!("missing required field `{name}`"),
                );
            }
            return None;
        }
        let mut first = found.swap_remove(0);
        self.leaf(&mut first, f)
    }

    fn hotspot(&mut self, args: &mut Args) -> Option<Hotspot> {
        let no = args.no();
        let col = args.line.first_col();
        let rect = match args.take_positional() {
            Some(v) => self.rect(no, v),
            None => {
                self.err("E004", no, col, "hotspot requires x,y,w,h");
                None
            }
        };
        let text = args.take_attr("text");
        let audio = args.take_attr("audio");
        let interaction = match (text, audio) {
            (Some(t), None) => self
                .str_value(no, t, "hotspot text")
                .map(|text| Interaction::Text { text }),
            (None, Some(a)) => self
                .path_value(no, a, AssetKind::Audio)
                .map(|audio| Interaction::Audio { audio }),
            (Some(_), Some(a)) => {
                self.err("E006", no, a.col, "hotspot takes either `text=` or `audio=`, not both");
                None
            }
            (None, None) => {
                self.err("E004", no, col, "hotspot requires `text=` or `audio=`");
                None
            }
        };
        Some(Hotspot {
            rect: rect?,
            interaction: interaction?,
        })
    }

    fn book_page(&mut self, args: &mut Args) -> Option<BookPage> {
        let line = args.line;
        let title = self.expect_str(args, "a page title");
        let image = match args.take_attr("image") {
            Some(v) => self.path_value(line.no, v, AssetKind::Image),
            None => {
                self.err("E004", line.no, line.first_col(), "bookpage requires `image=`");
                None
            }
        };
        take_finish(args, &mut self.diags);
        let mut hotspots = Vec::new();
        for child in &line.children {
            let Some(mut cargs) = Args::split(child, &mut self.diags) else {
                continue;
            };
            if cargs.keyword == "hotspot" {
                hotspots.extend(self.leaf(&mut cargs, Parser::hotspot));
            } else {
                self.err(
                    "E002",
                    child.no,
                    child.first_col(),
                    format!("`{}` is not allowed inside `bookpage`", cargs.keyword),
                );
            }
        }
        Some(BookPage {
            title: title?,
            image: image?,
            hotspots,
        })
    }
}

fn take_finish(args: &mut Args, diags: &mut Vec<Diagnostic>) {
    let rest = Args {
        line: args.line,
        keyword: args.keyword.clone(),
        positionals: std::mem::take(&mut args.positionals),
        attrs: std::mem::take(&mut args.attrs),
    };
    rest.finish(diags);
}

fn trigger_name(t: &Trigger) -> &'static str {
    match t {
        Trigger::None => "(tap)",
        Trigger::Poi { .. } => "`poi`",
        Trigger::Region { .. } => "`region`",
        Trigger::Qr { .. } => "`qr`",
        Trigger::NfcTag { .. } => "`nfc`",
    }
}

/// Lowercase ASCII slug of `text`, or `None` when nothing usable remains.
pub(crate) fn slug(text: &str) -> Option<String> {
    let mut out = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('-') && !out.is_empty() {
            out.push('-');
        }
    }
    let mut out = out.trim_end_matches('-').to_owned();
    // leave room for a collision suffix
    out.truncate(56);
    let out = out.trim_end_matches('-').to_owned();
    (!out.is_empty()).then_some(out)
}

/// Fills in ids that were not written in the source.
pub(crate) struct IdFiller {
    used: HashSet<String>,
}

impl IdFiller {
    pub fn new(story: &Story) -> Self {
        IdFiller {
            used: story
                .element_ids()
                .into_iter()
                .filter(|id| !id.is_empty())
                .map(str::to_owned)
                .collect(),
        }
    }

    fn assign(&mut self, id: &mut String, source: Option<&str>, fallback: &str) {
        if !id.is_empty() {
            return;
        }
        let base = source.and_then(slug).unwrap_or_else(|| fallback.to_owned());
        let mut cand = base.clone();
        let mut n = 2;
        while self.used.contains(&cand) {
            cand = format!("{base}-{n}");
            n += 1;
        }
        self.used.insert(cand.clone());
        *id = cand;
    }

    pub fn fill(&mut self, story: &mut Story) {
        if story.id.is_empty() {
            story.id = slug(&story.title).unwrap_or_else(|| "story".to_owned());
        }
        for c in &mut story.chapters {
            self.assign(&mut c.id, Some(&c.title), "chapter");
            for e in &mut c.elements {
                match e {
                    ChapterElement::Scene(s) => self.scene(s),
                    ChapterElement::Menu(m) => self.menu(m),
                }
            }
        }
    }

    fn scene(&mut self, s: &mut Scene) {
        self.assign(&mut s.id, Some(&s.title), "scene");
        for e in &mut s.elements {
            match e {
                SceneElement::Page(p) => self.page(p),
                SceneElement::Menu(m) => self.menu(m),
                SceneElement::End(e) => self.end(e),
            }
        }
    }

    fn page(&mut self, p: &mut Page) {
        let kw = p.payload.kind().keyword();
        self.assign(&mut p.id, None, kw);
    }

    fn end(&mut self, e: &mut End) {
        self.assign(&mut e.id, e.label.as_deref(), "end");
    }

    fn menu(&mut self, m: &mut Menu) {
        self.assign(&mut m.id, None, "menu");
        for o in &mut m.options {
            self.assign(&mut o.id, Some(&o.label), "option");
            for e in &mut o.body {
                match e {
                    BodyElement::Scene(s) => self.scene(s),
                    BodyElement::Page(p) => self.page(p),
                    BodyElement::Menu(m) => self.menu(m),
                    BodyElement::End(e) => self.end(e),
                }
            }
        }
    }
}
