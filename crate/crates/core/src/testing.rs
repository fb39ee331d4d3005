//! Random story generators and brute-force oracles for property tests.
//!
//! Generated stories always validate without errors and survive a round
//! trip through the `.story` text form. They use every page template and
//! menu style.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use proptest::collection::vec;
use proptest::prelude::*;

use crate::analyzer::{ChoicePaths, ChoiceStep, PathSignature};
use crate::model::*;
use crate::runtime::{Event, FrameBody, FrameKind, Session};

fn text() -> impl Strategy<Value = String> {
    prop_oneof![
        4 => "[A-Za-z ,.']{0,16}",
        1 => "[\"\\\\\n\t\r é→\u{7f}\u{1}]{0,6}",
        1 => "\\PC{0,8}",
    ]
}

fn label() -> impl Strategy<Value = String> {
    "[A-Z][a-z]{0,8}( [a-z]{1,6})?"
}

fn asset(kind: AssetKind) -> impl Strategy<Value = AssetRef> {
    let (dir, ext) = match kind {
        AssetKind::Image => ("img", "png"),
        AssetKind::Audio => ("audio", "mp3"),
        AssetKind::Video => ("video", "mp4"),
    };
    (0u8..6, proptest::bool::weighted(0.15)).prop_map(move |(n, draft)| AssetRef {
        path: format!("{dir}/{kind}-{n}.{ext}"),
        kind,
        sha256: None,
        bytes: None,
        draft,
    })
}

fn unit() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.25), 0.0..0.5f64]
}

fn rect() -> impl Strategy<Value = Rect> {
    let size = prop_oneof![Just(0.5), Just(0.125), 0.001..0.5f64];
    (unit(), unit(), size.clone(), size).prop_map(|(x, y, w, h)| Rect::new(x, y, w, h))
}

fn hotspot() -> impl Strategy<Value = Hotspot> {
    (
        rect(),
        prop_oneof![
            text().prop_map(|text| Interaction::Text { text }),
            asset(AssetKind::Audio).prop_map(|audio| Interaction::Audio { audio }),
        ],
    )
        .prop_map(|(rect, interaction)| Hotspot { rect, interaction })
}

fn payload() -> impl Strategy<Value = PagePayload> {
    prop_oneof![
        (
            text(),
            vec(asset(AssetKind::Image), 0..3),
            vec(asset(AssetKind::Audio), 0..2)
        )
            .prop_map(|(text, images, audio)| PagePayload::Simple { text, images, audio }),
        (
            vec(label(), 1..3),
            vec((any::<prop::sample::Index>(), text(), asset(AssetKind::Audio)), 0..4)
        )
            .prop_map(|(characters, lines)| {
                let lines = lines
                    .into_iter()
                    .map(|(i, text, audio)| DialogueLine {
                        speaker: i.get(&characters).clone(),
                        text,
                        audio,
                    })
                    .collect();
                PagePayload::Dialogue { characters, lines }
            }),
        vec(
            (text(), any::<bool>(), text()).prop_map(|(text, right, feedback)| QuizStatement {
                text,
                answer: if right { Answer::Right } else { Answer::Wrong },
                feedback,
            }),
            1..4
        )
        .prop_map(|statements| PagePayload::Quiz { statements }),
        asset(AssetKind::Video).prop_map(|video| PagePayload::Video { video }),
        (asset(AssetKind::Image), vec(hotspot(), 0..3))
            .prop_map(|(image, hotspots)| PagePayload::InteractiveImage { image, hotspots }),
        (
            asset(AssetKind::Image),
            vec(
                (text(), asset(AssetKind::Image), vec(hotspot(), 0..2))
                    .prop_map(|(title, image, hotspots)| { BookPage { title, image, hotspots } }),
                1..5
            )
        )
            .prop_map(|(cover, book_pages)| PagePayload::InteractiveBook { cover, book_pages }),
        (text(), "[a-z0-9-]{1,10}").prop_map(|(prompt, tag)| PagePayload::Nfc { prompt, tag }),
        text().prop_map(|prompt| PagePayload::Question { prompt }),
    ]
}

fn page() -> impl Strategy<Value = Page> {
    payload().prop_map(|payload| Page {
        id: String::new(),
        payload,
    })
}

fn end() -> impl Strategy<Value = End> {
    proptest::option::of(label()).prop_map(|label| End {
        id: String::new(),
        label,
    })
}

/// Raw material for a trigger; the menu style decides which part is used.
#[derive(Debug, Clone)]
struct TriggerSeed {
    rect: Rect,
    lat: f64,
    lon: f64,
    radius: f64,
    fixed_qr: bool,
    nfc: Option<String>,
}

fn trigger_seed() -> impl Strategy<Value = TriggerSeed> {
    (
        rect(),
        -85.0..85.0f64,
        -179.0..179.0f64,
        1.0..800.0f64,
        proptest::bool::weighted(0.3),
        proptest::option::weighted(0.2, "[a-z]{1,6}"),
    )
        .prop_map(|(rect, lat, lon, radius, fixed_qr, nfc)| TriggerSeed {
            rect,
            lat,
            lon,
            radius,
            fixed_qr,
            nfc,
        })
}

fn style() -> impl Strategy<Value = MenuStyle> {
    prop_oneof![
        3 => Just(MenuStyle::Tiles),
        2 => Just(MenuStyle::List),
        1 => asset(AssetKind::Image).prop_map(|image| MenuStyle::InteractiveImage { image }),
        1 => Just(MenuStyle::Map),
        1 => Just(MenuStyle::QrCode),
    ]
}

fn trigger_for(style: &MenuStyle, seed: TriggerSeed) -> Trigger {
    match style {
        MenuStyle::Tiles | MenuStyle::List => match seed.nfc {
            Some(tag) => Trigger::NfcTag { tag },
            None => Trigger::None,
        },
        MenuStyle::InteractiveImage { .. } => Trigger::Poi { rect: seed.rect },
        MenuStyle::Map => Trigger::Region {
            lat: seed.lat,
            lon: seed.lon,
            radius: seed.radius,
        },
        // fixed payloads are made unique when ids are assigned
        MenuStyle::QrCode => Trigger::Qr {
            payload: seed.fixed_qr.then(String::new),
        },
    }
}

fn menu(body: impl Strategy<Value = Vec<BodyElement>>) -> impl Strategy<Value = Menu> {
    (any::<bool>(), style(), vec((label(), trigger_seed(), body), 1..4)).prop_map(|(choice, style, options)| {
        let options = options
            .into_iter()
            .map(|(label, seed, body)| MenuOption {
                id: String::new(),
                label,
                trigger: trigger_for(&style, seed),
                body,
            })
            .collect();
        Menu {
            id: String::new(),
            kind: if choice { MenuKind::Choice } else { MenuKind::More },
            style,
            options,
        }
    })
}

fn to_scene_element(e: BodyElement) -> SceneElement {
    match e {
        BodyElement::Page(p) => SceneElement::Page(p),
        BodyElement::Menu(m) => SceneElement::Menu(m),
        BodyElement::End(e) => SceneElement::End(e),
        BodyElement::Scene(mut s) => s.elements.swap_remove(0),
    }
}

fn scene(elements: impl Strategy<Value = Vec<BodyElement>>) -> impl Strategy<Value = Scene> {
    (text(), elements).prop_map(|(title, elements)| Scene {
        id: String::new(),
        title,
        elements: elements.into_iter().map(to_scene_element).collect(),
    })
}

/// Option bodies and scene contents, nested up to `depth` menus deep.
pub fn arb_body(depth: u32) -> impl Strategy<Value = Vec<BodyElement>> {
    let leaf = prop_oneof![
        8 => page().prop_map(BodyElement::Page),
        1 => end().prop_map(BodyElement::End),
    ];
    let element = leaf.prop_recursive(depth, 40, 3, |inner| {
        prop_oneof![
            3 => page().prop_map(BodyElement::Page),
            2 => menu(vec(inner.clone(), 1..3)).prop_map(BodyElement::Menu),
            1 => scene(vec(inner, 1..3)).prop_map(BodyElement::Scene),
        ]
    });
    vec(element, 1..4)
}

fn chapter() -> impl Strategy<Value = Chapter> {
    (
        text(),
        proptest::option::weighted(0.3, asset(AssetKind::Image)),
        vec(arb_body(3), 1..3),
    )
        .prop_map(|(title, preview_image, groups)| {
            let mut elements = Vec::new();
            for group in groups {
                match group.as_slice() {
                    [BodyElement::Menu(_)] => {
                        let Some(BodyElement::Menu(m)) = group.into_iter().next() else {
                            unreachable!()
                        };
                        elements.push(ChapterElement::Menu(m));
                    }
                    _ => elements.push(ChapterElement::Scene(Scene {
                        id: String::new(),
                        title: String::new(),
                        elements: group.into_iter().map(to_scene_element).collect(),
                    })),
                }
            }
            Chapter {
                id: String::new(),
                title,
                preview_image,
                elements,
            }
        })
}

fn evidence() -> impl Strategy<Value = ValidationEvidence> {
    (any::<bool>(), any::<bool>(), 0u8..3).prop_map(|(a, b, o)| ValidationEvidence {
        structure_validated: a,
        sample_scenes_validated: b,
        validated_onsite: match o {
            0 => OnsiteValidation::None,
            1 => OnsiteValidation::Invited,
            _ => OnsiteValidation::Public,
        },
    })
}

/// Valid random stories.
pub fn arb_story() -> impl Strategy<Value = Story> {
    (
        "[a-z][a-z0-9-]{0,20}",
        text(),
        prop_oneof![
            Just("en".to_string()),
            Just("el".to_string()),
            Just("pt-BR".to_string())
        ],
        text(),
        proptest::collection::btree_set(
            prop_oneof![
                Just("dialogue-based-social".to_string()),
                Just("experiential-social".to_string()),
                "[a-z ]{1,8}",
            ],
            0..3,
        ),
        evidence(),
        vec(chapter(), 1..3),
    )
        .prop_map(|(id, title, language, description, author_tags, evidence, chapters)| {
            let mut s = Story {
                id,
                title,
                description,
                language,
                author_tags,
                evidence,
                chapters,
            };
            assign_ids(&mut s);
            s
        })
}

/// Valid random stories with no `end` elements anywhere.
pub fn arb_end_free_story() -> impl Strategy<Value = Story> {
    arb_story().prop_map(|mut s| {
        strip_ends(&mut s);
        s
    })
}

fn strip_ends(s: &mut Story) {
    fn page() -> Page {
        Page {
            id: String::new(),
            payload: PagePayload::Question { prompt: String::new() },
        }
    }
    fn body(els: &mut [BodyElement]) {
        for e in els {
            match e {
                BodyElement::End(_) => *e = BodyElement::Page(page()),
                BodyElement::Scene(sc) => scene(sc),
                BodyElement::Menu(m) => menu(m),
                BodyElement::Page(_) => {}
            }
        }
    }
    fn menu(m: &mut Menu) {
        m.options.iter_mut().for_each(|o| body(&mut o.body));
    }
    fn scene(sc: &mut Scene) {
        for e in &mut sc.elements {
            match e {
                SceneElement::End(_) => *e = SceneElement::Page(page()),
                SceneElement::Menu(m) => menu(m),
                SceneElement::Page(_) => {}
            }
        }
    }
    for c in &mut s.chapters {
        for e in &mut c.elements {
            match e {
                ChapterElement::Scene(sc) => scene(sc),
                ChapterElement::Menu(m) => menu(m),
            }
        }
    }
    assign_ids(s);
}

/// Gives every element a fresh unique id (`c1`, `s2`, `p3`, ...) and every
/// fixed QR payload a unique value.
pub fn assign_ids(s: &mut Story) {
    struct Ids(u32);
    impl Ids {
        fn next(&mut self, prefix: &str) -> String {
            self.0 += 1;
            format!("{prefix}{}", self.0)
        }
    }
    fn menu(ids: &mut Ids, m: &mut Menu) {
        m.id = ids.next("m");
        for o in &mut m.options {
            o.id = ids.next("o");
            if let Trigger::Qr { payload: Some(p) } = &mut o.trigger {
                *p = format!("code {}", o.id);
            }
            for e in &mut o.body {
                match e {
                    BodyElement::Scene(sc) => scene(ids, sc),
                    BodyElement::Page(p) => p.id = ids.next("p"),
                    BodyElement::Menu(m) => menu(ids, m),
                    BodyElement::End(e) => e.id = ids.next("e"),
                }
            }
        }
    }
    fn scene(ids: &mut Ids, sc: &mut Scene) {
        sc.id = ids.next("s");
        for e in &mut sc.elements {
            match e {
                SceneElement::Page(p) => p.id = ids.next("p"),
                SceneElement::Menu(m) => menu(ids, m),
                SceneElement::End(e) => e.id = ids.next("e"),
            }
        }
    }
    let mut ids = Ids(0);
    for c in &mut s.chapters {
        c.id = ids.next("c");
        for e in &mut c.elements {
            match e {
                ChapterElement::Scene(sc) => scene(&mut ids, sc),
                ChapterElement::Menu(m) => menu(&mut ids, m),
            }
        }
    }
}

/// Deterministic content for every asset a story references.
pub fn asset_bytes(story: &Story) -> BTreeMap<String, Vec<u8>> {
    story
        .assets()
        .into_iter()
        .map(|a| {
            let mut data = format!("{} {}\n", a.kind, a.path).into_bytes();
            data.extend((0..a.path.len() as u8 * 3).map(|i| i.wrapping_mul(37)));
            (a.path.clone(), data)
        })
        .collect()
}

/// Random event scripts: mostly sensible moves with some noise.
pub fn arb_event_script(max_len: usize) -> impl Strategy<Value = Vec<ScriptStep>> {
    vec(
        prop_oneof![
            6 => Just(ScriptStep::Greedy),
            3 => any::<prop::sample::Index>().prop_map(ScriptStep::PickOption),
            1 => Just(ScriptStep::Raw(Event::Advance)),
            1 => (-91.0..91.0f64, -181.0..181.0f64).prop_map(|(lat, lon)| ScriptStep::Raw(Event::Position { lat, lon })),
            1 => "[a-z]{1,4}".prop_map(|tag| ScriptStep::Raw(Event::NfcScan { tag })),
            1 => (any::<prop::sample::Index>(), any::<bool>()).prop_map(|(i, r)| ScriptStep::Answer(i, r)),
        ],
        0..max_len,
    )
}

/// A step of a random script, resolved against the current frame.
#[derive(Debug, Clone)]
pub enum ScriptStep {
    Greedy,
    PickOption(prop::sample::Index),
    Answer(prop::sample::Index, bool),
    Raw(Event),
}

/// Turns a script into concrete events by playing it on a session. Errors
/// are kept: the events are what a confused visitor might send.
pub fn resolve_script(story: &Story, steps: &[ScriptStep]) -> Vec<Event> {
    let Ok((mut s, _)) = Session::start(story.clone()) else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for step in steps {
        let e = match step {
            ScriptStep::Greedy => s.greedy_event().unwrap_or(Event::Advance),
            ScriptStep::PickOption(i) => match &s.frame().body {
                FrameBody::Menu { menu_id, options, .. } => Event::SelectOption {
                    menu_id: menu_id.clone(),
                    option_id: i.get(options).id.clone(),
                },
                _ => Event::Advance,
            },
            ScriptStep::Answer(i, right) => match &s.frame().body {
                FrameBody::Page { page_id, .. } => Event::QuizAnswer {
                    page_id: page_id.clone(),
                    statement: i.index(3),
                    answer: if *right { Answer::Right } else { Answer::Wrong },
                },
                _ => Event::TextAnswer {
                    page_id: "nowhere".into(),
                    text: "x".into(),
                },
            },
            ScriptStep::Raw(e) => e.clone(),
        };
        let _ = s.apply(e.clone());
        out.push(e);
    }
    out
}

fn ids_under(node: ElementRef<'_>, out: &mut BTreeSet<String>) {
    for c in node.children() {
        out.insert(c.id().to_string());
        ids_under(c, out);
    }
}

fn current_id(s: &Session) -> Option<String> {
    crate::runtime::FrameSummary::from(s.frame()).element_id
}

/// Where a run of the runtime stopped, as (frame kind, element id).
pub type Landing = (FrameKind, Option<String>);

/// Plays a story under the runtime, branching at every choice menu, and
/// returns the choice sequence of every complete run in depth-first order.
///
/// Pages are passed with the greedy event, more menus are skipped.
pub fn explore_choice_paths(story: &Story, max: usize) -> ChoicePaths {
    let (s, _) = Session::start(Arc::new(story.clone())).expect("valid story");
    let mut out = ChoicePaths {
        paths: Vec::new(),
        truncated: false,
    };
    explore(s, &mut Vec::new(), max.max(1), &mut out, &mut |_, _| {});
    out
}

/// Like [`explore_choice_paths`], also reporting where each complete run
/// ended.
pub fn explore_landings(story: &Story, max: usize) -> Vec<(PathSignature, Landing)> {
    let (s, _) = Session::start(Arc::new(story.clone())).expect("valid story");
    let mut out = ChoicePaths {
        paths: Vec::new(),
        truncated: false,
    };
    let mut landings = Vec::new();
    explore(s, &mut Vec::new(), max.max(1), &mut out, &mut |sig, l| {
        landings.push((sig.to_vec(), l))
    });
    landings
}

fn explore(
    mut s: Session,
    sig: &mut Vec<ChoiceStep>,
    max: usize,
    out: &mut ChoicePaths,
    on_end: &mut dyn FnMut(&[ChoiceStep], Landing),
) -> bool {
    loop {
        if s.is_finished() {
            if out.paths.len() >= max {
                out.truncated = true;
                return false;
            }
            out.paths.push(sig.clone());
            on_end(sig, (s.frame().kind(), current_id(&s)));
            return true;
        }
        match &s.frame().body {
            FrameBody::Menu {
                menu_id,
                kind: MenuKind::Choice,
                options,
                ..
            } => {
                let menu_id = menu_id.clone();
                let option_ids: Vec<String> = options.iter().map(|o| o.id.clone()).collect();
                for option_id in option_ids {
                    let mut branch = s.clone();
                    branch
                        .apply(Event::SelectOption {
                            menu_id: menu_id.clone(),
                            option_id: option_id.clone(),
                        })
                        .expect("options of the current menu are selectable");
                    sig.push(ChoiceStep {
                        menu: menu_id.clone(),
                        option: option_id,
                    });
                    let more = explore(branch, sig, max, out, on_end);
                    sig.pop();
                    if !more {
                        return false;
                    }
                }
                return true;
            }
            _ => {
                let e = s.greedy_event().expect("running session has a next event");
                s.apply(e).expect("greedy events apply");
            }
        }
    }
}

/// For every choice menu the default run reaches, the frame each option
/// leads to once its body is done, or `None` when the body ends the story.
pub fn merge_targets(story: &Story) -> Vec<(String, Vec<Option<Landing>>)> {
    let (mut s, _) = Session::start(Arc::new(story.clone())).expect("valid story");
    let mut out = Vec::new();
    let limit = story.element_count() * 4 + 8;
    for _ in 0..limit {
        if s.is_finished() {
            break;
        }
        if let FrameBody::Menu {
            menu_id,
            kind: MenuKind::Choice,
            options,
            ..
        } = &s.frame().body
        {
            let (_, node) = story.find(menu_id).expect("menu exists");
            let ElementRef::Menu(m) = node else { unreachable!() };
            let mut targets = Vec::new();
            for (o, view) in m.options.iter().zip(options) {
                let mut inside = BTreeSet::new();
                ids_under(ElementRef::Option(o), &mut inside);
                let mut b = s.clone();
                b.apply(Event::SelectOption {
                    menu_id: menu_id.clone(),
                    option_id: view.id.clone(),
                })
                .expect("selectable");
                let mut steps = 0;
                while !b.is_finished() && current_id(&b).is_some_and(|id| inside.contains(&id)) && steps < limit {
                    let e = b.greedy_event().expect("running");
                    b.apply(e).expect("greedy events apply");
                    steps += 1;
                }
                let ended_inside = b.is_finished() && current_id(&b).is_some_and(|id| inside.contains(&id));
                targets.push((!ended_inside).then(|| (b.frame().kind(), current_id(&b))));
            }
            out.push((menu_id.clone(), targets));
        }
        let e = s.greedy_event().expect("running");
        s.apply(e).expect("greedy events apply");
    }
    out
}
