use std::fmt::Write as _;

use crate::model::*;

pub(crate) fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            c if c.is_control() => {
                let _ = write!(out, "\\u{{{:x}}}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn path(a: &AssetRef) -> String {
    if a.draft {
        format!("~{}", quote(&a.path))
    } else {
        quote(&a.path)
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn is_bare_word(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '-')
}

pub(crate) struct Writer {
    out: String,
}

impl Writer {
    pub fn new() -> Self {
        Writer { out: String::new() }
    }

    pub fn finish(self) -> String {
        self.out
    }

    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    pub fn story(&mut self, s: &Story) {
        let mut head = format!("story {} id={}", quote(&s.title), s.id);
        if is_bare_word(&s.language) {
            let _ = write!(head, " lang={}", s.language);
        } else {
            let _ = write!(head, " lang={}", quote(&s.language));
        }
        if !s.description.is_empty() {
            let _ = write!(head, " description={}", quote(&s.description));
        }
        for t in &s.author_tags {
            let _ = write!(head, " tag={}", quote(t));
        }
        if s.evidence.structure_validated {
            head.push_str(" structure_validated=true");
        }
        if s.evidence.sample_scenes_validated {
            head.push_str(" sample_scenes_validated=true");
        }
        if s.evidence.validated_onsite != OnsiteValidation::None {
            let _ = write!(head, " validated_onsite={}", s.evidence.validated_onsite.keyword());
        }
        self.line(0, &head);
        for c in &s.chapters {
            self.chapter(1, c);
        }
    }

    fn chapter(&mut self, d: usize, c: &Chapter) {
        let mut head = format!("chapter {} id={}", quote(&c.title), c.id);
        if let Some(p) = &c.preview_image {
            let _ = write!(head, " preview={}", path(p));
        }
        self.line(d, &head);
        for e in &c.elements {
            match e {
                ChapterElement::Scene(s) => self.scene(d + 1, s),
                ChapterElement::Menu(m) => self.menu(d + 1, m),
            }
        }
    }

    fn scene(&mut self, d: usize, s: &Scene) {
        self.line(d, &format!("scene {} id={}", quote(&s.title), s.id));
        for e in &s.elements {
            match e {
                SceneElement::Page(p) => self.page(d + 1, p),
                SceneElement::Menu(m) => self.menu(d + 1, m),
                SceneElement::End(e) => self.end(d + 1, e),
            }
        }
    }

    fn end(&mut self, d: usize, e: &End) {
        match &e.label {
            Some(l) => self.line(d, &format!("end {} id={}", quote(l), e.id)),
            None => self.line(d, &format!("end id={}", e.id)),
        }
    }

    fn menu(&mut self, d: usize, m: &Menu) {
        let mut head = format!(
            "menu {} id={} style={}",
            m.kind.keyword(),
            m.id,
            m.style.kind().keyword()
        );
        if let MenuStyle::InteractiveImage { image } = &m.style {
            let _ = write!(head, " image={}", path(image));
        }
        self.line(d, &head);
        for o in &m.options {
            self.option(d + 1, o);
        }
    }

    fn option(&mut self, d: usize, o: &MenuOption) {
        let mut head = format!("option {} id={}", quote(&o.label), o.id);
        match &o.trigger {
            Trigger::None => {}
            Trigger::Poi { rect } => {
                let _ = write!(head, " poi={}", rect_str(rect));
            }
            Trigger::Region { lat, lon, radius } => {
                let _ = write!(head, " region={},{},{}", num(*lat), num(*lon), num(*radius));
            }
            Trigger::Qr { payload: None } => head.push_str(" qr=auto"),
            Trigger::Qr { payload: Some(p) } => {
                let _ = write!(head, " qr={}", quote(p));
            }
            Trigger::NfcTag { tag } => {
                let _ = write!(head, " nfc={}", quote(tag));
            }
        }
        self.line(d, &head);
        for e in &o.body {
            match e {
                BodyElement::Scene(s) => self.scene(d + 1, s),
                BodyElement::Page(p) => self.page(d + 1, p),
                BodyElement::Menu(m) => self.menu(d + 1, m),
                BodyElement::End(e) => self.end(d + 1, e),
            }
        }
    }

    fn hotspot(&mut self, d: usize, h: &Hotspot) {
        let tail = match &h.interaction {
            Interaction::Text { text } => format!("text={}", quote(text)),
            Interaction::Audio { audio } => format!("audio={}", path(audio)),
        };
        self.line(d, &format!("hotspot {} {tail}", rect_str(&h.rect)));
    }

    fn page(&mut self, d: usize, p: &Page) {
        self.line(d, &format!("page {} id={}", p.payload.kind().keyword(), p.id));
        let f = d + 1;
        match &p.payload {
            PagePayload::Simple { text, images, audio } => {
                if !text.is_empty() {
                    self.line(f, &format!("text {}", quote(text)));
                }
                for i in images {
                    self.line(f, &format!("image {}", path(i)));
                }
                for a in audio {
                    self.line(f, &format!("audio {}", path(a)));
                }
            }
            PagePayload::Dialogue { characters, lines } => {
                for c in characters {
                    self.line(f, &format!("character {}", quote(c)));
                }
                for l in lines {
                    self.line(
                        f,
                        &format!(
                            "line {} audio={} text={}",
                            quote(&l.speaker),
                            path(&l.audio),
                            quote(&l.text)
                        ),
                    );
                }
            }
            PagePayload::Quiz { statements } => {
                for s in statements {
                    let mut l = format!("statement {} answer={}", quote(&s.text), s.answer.keyword());
                    if !s.feedback.is_empty() {
                        let _ = write!(l, " feedback={}", quote(&s.feedback));
                    }
                    self.line(f, &l);
                }
            }
            PagePayload::Video { video } => self.line(f, &format!("video {}", path(video))),
            PagePayload::InteractiveImage { image, hotspots } => {
                self.line(f, &format!("image {}", path(image)));
                for h in hotspots {
                    self.hotspot(f, h);
                }
            }
            PagePayload::InteractiveBook { cover, book_pages } => {
                self.line(f, &format!("cover {}", path(cover)));
                for bp in book_pages {
                    self.line(f, &format!("bookpage {} image={}", quote(&bp.title), path(&bp.image)));
                    for h in &bp.hotspots {
                        self.hotspot(f + 1, h);
                    }
                }
            }
            PagePayload::Nfc { prompt, tag } => {
                self.line(f, &format!("prompt {}", quote(prompt)));
                self.line(f, &format!("tag {}", quote(tag)));
            }
            PagePayload::Question { prompt } => self.line(f, &format!("prompt {}", quote(prompt))),
        }
    }
}

fn rect_str(r: &Rect) -> String {
    format!("{},{},{},{}", num(r.x), num(r.y), num(r.w), num(r.h))
}
