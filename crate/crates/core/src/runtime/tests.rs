use super::*;
use crate::script::parse;

fn story(src: &str) -> Story {
    parse(src).unwrap()
}

fn sel(menu: &str, option: &str) -> Event {
    Event::SelectOption {
        menu_id: menu.into(),
        option_id: option.into(),
    }
}

fn ids(t: &Transcript) -> Vec<String> {
    t.frames()
        .into_iter()
        .map(|f| f.element_id.unwrap_or_else(|| "<end>".into()))
        .collect()
}

const TWO_BY_TWO: &str = r#"story "Two" id=two lang=en
  chapter "C" id=c
    scene "S" id=s
      page simple id=intro
        text "start"
      menu choice id=m1 style=tiles
        option "A" id=a
          page simple id=pa
            text "a"
        option "B" id=b
          page simple id=pb
            text "b"
      menu choice id=m2 style=list
        option "C" id=oc
          page simple id=pc
            text "c"
        option "D" id=od
          page simple id=pd
            text "d"
      page simple id=outro
        text "bye"
"#;

#[test]
fn single_page_story() {
    let s = story("story \"S\" id=s lang=en\n  chapter \"C\" id=c\n    scene \"S\" id=sc\n      page simple id=p\n        text \"hi\"\n");
    let (mut session, f) = start(s).unwrap();
    assert_eq!(f.seq, 1);
    assert_eq!(f.chapter_id.as_deref(), Some("c"));
    assert_eq!(f.scene_id.as_deref(), Some("sc"));
    assert!(matches!(&f.body, FrameBody::Page { page_id, .. } if page_id == "p"));
    assert!(session.transcript().entries.is_empty());
    let end = session.apply(Event::Advance).unwrap();
    assert_eq!(end.seq, 2);
    assert_eq!(end.kind(), FrameKind::End);
    assert!(session.is_finished());
    assert_eq!(session.apply(Event::Advance), Err(RuntimeError::SessionFinished));
    assert_eq!(session.transcript().entries.len(), 1);
}

#[test]
fn first_element_choice_menu() {
    let s = story(
        r#"story "M" id=m lang=en
  chapter "C" id=c
    menu choice id=pick style=tiles
      option "A" id=a
        page simple id=pa
          text "a"
      option "B" id=b
        page simple id=pb
          text "b"
"#,
    );
    let (_, f) = start(s).unwrap();
    let FrameBody::Menu {
        options,
        can_continue,
        kind,
        ..
    } = f.body
    else {
        panic!("expected a menu frame")
    };
    assert_eq!(kind, MenuKind::Choice);
    assert!(!can_continue);
    assert!(options.iter().all(|o| !o.viewed));
    assert_eq!(f.scene_id, None);
}

#[test]
fn invalid_story_is_rejected() {
    let mut s = story(TWO_BY_TWO);
    s.chapters[0].id = "s".into();
    assert!(matches!(start(s), Err(RuntimeError::InvalidStory(d)) if d[0].code == "V001"));
}

#[test]
fn choice_consumed_and_merges_back() {
    let (mut s, _) = start(story(TWO_BY_TWO)).unwrap();
    s.apply(Event::Advance).unwrap();
    let f = s.apply(sel("m1", "a")).unwrap();
    assert!(matches!(&f.body, FrameBody::Page { page_id, .. } if page_id == "pa"));
    let f = s.apply(Event::Advance).unwrap();
    assert!(matches!(&f.body, FrameBody::Menu { menu_id, .. } if menu_id == "m2"));
    assert!(s.menu_state()["m1"].consumed);
    assert!(matches!(
        s.apply(sel("m1", "b")),
        Err(RuntimeError::EventNotApplicable(_))
    ));
    assert!(matches!(
        s.apply(Event::Continue { menu_id: "m2".into() }),
        Err(RuntimeError::EventNotApplicable(_))
    ));
    assert!(matches!(
        s.apply(sel("m2", "zz")),
        Err(RuntimeError::EventNotApplicable(_))
    ));
}

#[test]
fn two_by_two_scripted_playthrough() {
    // hand-walked: intro, m1, pa, m2, pc, outro, end
    let events = vec![
        Event::Advance,
        sel("m1", "a"),
        Event::Advance,
        sel("m2", "oc"),
        Event::Advance,
        Event::Advance,
    ];
    let t = simulate(story(TWO_BY_TWO), &events).unwrap();
    assert_eq!(ids(&t), ["intro", "m1", "pa", "m2", "pc", "outro", "<end>"]);
    let seqs: Vec<u64> = t.frames().iter().map(|f| f.seq).collect();
    assert_eq!(seqs, [1, 2, 3, 4, 5, 6, 7]);
}

#[test]
fn more_menu_review_and_continue() {
    let s = story(
        r#"story "M" id=m lang=en
  chapter "C" id=c
    scene "S" id=s
      menu more id=extra style=list
        option "One" id=one
          page simple id=p1
            text "1"
        option "Two" id=two
          page simple id=p2
            text "2"
      page simple id=after
        text "after"
"#,
    );
    let (mut s, _) = start(s).unwrap();
    s.apply(sel("extra", "one")).unwrap();
    let f = s.apply(Event::Advance).unwrap();
    let FrameBody::Menu {
        options, can_continue, ..
    } = &f.body
    else {
        panic!()
    };
    assert!(can_continue);
    assert_eq!(options.iter().map(|o| o.viewed).collect::<Vec<_>>(), [true, false]);
    s.apply(sel("extra", "two")).unwrap();
    let f = s.apply(Event::Advance).unwrap();
    let FrameBody::Menu { options, .. } = &f.body else {
        panic!()
    };
    assert!(options.iter().all(|o| o.viewed));
    // more options may be viewed again
    s.apply(sel("extra", "one")).unwrap();
    s.apply(Event::Advance).unwrap();
    let f = s
        .apply(Event::Continue {
            menu_id: "extra".into(),
        })
        .unwrap();
    assert!(matches!(&f.body, FrameBody::Page { page_id, .. } if page_id == "after"));
    assert!(!s.menu_state()["extra"].consumed);
}

const TRIGGERS: &str = r#"story "T" id=trig lang=en
  chapter "C" id=c
    scene "S" id=s
      page nfc id=gate
        prompt "Tap the gate tag"
        tag "gate-tag"
      menu choice id=where style=map
        option "Agora" id=agora region=37.9747,23.7223,40
          page simple id=pa
            text "a"
        option "Near" id=near region=37.9749,23.7223,40
          page simple id=pn
            text "n"
      menu more id=scan style=qr
        option "Stele" id=stele qr=auto
          page simple id=ps
            text "s"
        option "Fixed" id=fixed qr="custom-code"
          page simple id=pf
            text "f"
      menu choice id=tap style=tiles
        option "Door" id=door nfc="door-tag"
          end "Door ending" id=door-end
        option "Walk" id=walk
          page simple id=pw
            text "w"
"#;

#[test]
fn nfc_page_blocks_advance() {
    let (mut s, _) = start(story(TRIGGERS)).unwrap();
    assert!(matches!(
        s.apply(Event::Advance),
        Err(RuntimeError::EventNotApplicable(_))
    ));
    assert!(matches!(
        s.apply(Event::NfcScan { tag: "nope".into() }),
        Err(RuntimeError::NoMatch(_))
    ));
    let f = s.apply(Event::NfcScan { tag: "gate-tag".into() }).unwrap();
    assert!(matches!(&f.body, FrameBody::Menu { menu_id, .. } if menu_id == "where"));
}

#[test]
fn position_matching() {
    let (mut s, _) = start(story(TRIGGERS)).unwrap();
    s.apply(Event::NfcScan { tag: "gate-tag".into() }).unwrap();
    assert!(matches!(
        s.apply(Event::Position { lat: 91.0, lon: 0.0 }),
        Err(RuntimeError::EventNotApplicable(_))
    ));
    // far away: frame re-emitted unchanged apart from seq
    let before = s.frame().clone();
    let f = s.apply(Event::Position { lat: 38.5, lon: 23.7 }).unwrap();
    assert_eq!(f.seq, before.seq + 1);
    assert_eq!(f.body, before.body);
    // both regions contain the point; `near` center is closer
    let f = s
        .apply(Event::Position {
            lat: 37.9749,
            lon: 23.7223,
        })
        .unwrap();
    assert!(matches!(&f.body, FrameBody::Page { page_id, .. } if page_id == "pn"));
}

#[test]
fn position_exact_center_and_tie() {
    let (mut s, _) = start(story(TRIGGERS)).unwrap();
    s.apply(Event::NfcScan { tag: "gate-tag".into() }).unwrap();
    let f = s
        .apply(Event::Position {
            lat: 37.9747,
            lon: 23.7223,
        })
        .unwrap();
    assert!(matches!(&f.body, FrameBody::Page { page_id, .. } if page_id == "pa"));

    // same center, different radii: lowest index wins
    let twin = story(&TRIGGERS.replace("region=37.9749,23.7223,40", "region=37.9747,23.7223,80"));
    let (mut s, _) = start(twin).unwrap();
    s.apply(Event::NfcScan { tag: "gate-tag".into() }).unwrap();
    let f = s
        .apply(Event::Position {
            lat: 37.9748,
            lon: 23.7223,
        })
        .unwrap();
    assert!(matches!(&f.body, FrameBody::Page { page_id, .. } if page_id == "pa"));
}

#[test]
fn qr_and_nfc_options() {
    let (mut s, _) = start(story(TRIGGERS)).unwrap();
    s.apply(Event::NfcScan { tag: "gate-tag".into() }).unwrap();
    s.apply(sel("where", "agora")).unwrap();
    let f = s.apply(Event::Advance).unwrap();
    let FrameBody::Menu { options, .. } = &f.body else {
        panic!()
    };
    assert_eq!(
        options[0].trigger,
        TriggerView::Qr {
            payload: "NARRALIVE:trig:scan:stele".into()
        }
    );
    assert!(matches!(
        s.apply(Event::QrScan {
            payload: "bogus".into()
        }),
        Err(RuntimeError::NoMatch(_))
    ));
    let f = s
        .apply(Event::QrScan {
            payload: "NARRALIVE:trig:scan:stele".into(),
        })
        .unwrap();
    assert!(matches!(&f.body, FrameBody::Page { page_id, .. } if page_id == "ps"));
    s.apply(Event::Advance).unwrap();
    let f = s
        .apply(Event::QrScan {
            payload: "custom-code".into(),
        })
        .unwrap();
    assert!(matches!(&f.body, FrameBody::Page { page_id, .. } if page_id == "pf"));
    s.apply(Event::Advance).unwrap();
    s.apply(Event::Continue { menu_id: "scan".into() }).unwrap();
    let f = s.apply(Event::NfcScan { tag: "door-tag".into() }).unwrap();
    assert_eq!(
        f.body,
        FrameBody::End {
            end_id: Some("door-end".into()),
            label: Some("Door ending".into())
        }
    );
    assert!(s.is_finished());
}

const ANSWERS: &str = r#"story "Q" id=q lang=en
  chapter "C" id=c
    scene "S" id=s
      page quiz id=quiz
        statement "The temple is Doric" answer=right feedback="Yes, Doric columns"
        statement "It was built yesterday" answer=wrong feedback="No"
      page question id=ask
        prompt "What did you like?"
"#;

#[test]
fn answers_are_recorded() {
    let (mut s, f) = start(story(ANSWERS)).unwrap();
    let FrameBody::Page {
        render: PageRender::Quiz { statements },
        ..
    } = &f.body
    else {
        panic!()
    };
    assert!(statements.iter().all(|st| st.result.is_none()));
    let json = serde_json::to_string(&f).unwrap();
    assert!(!json.contains("right") && !json.contains("Yes, Doric"));

    let q = |statement, answer| Event::QuizAnswer {
        page_id: "quiz".into(),
        statement,
        answer,
    };
    let f = s.apply(q(0, Answer::Right)).unwrap();
    let FrameBody::Page {
        render: PageRender::Quiz { statements },
        ..
    } = &f.body
    else {
        panic!()
    };
    let r = statements[0].result.as_ref().unwrap();
    assert!(r.correct);
    assert_eq!(r.feedback, "Yes, Doric columns");
    s.apply(q(1, Answer::Right)).unwrap();
    assert!(matches!(
        s.apply(q(2, Answer::Right)),
        Err(RuntimeError::EventNotApplicable(_))
    ));
    assert!(matches!(
        s.apply(Event::TextAnswer {
            page_id: "ask".into(),
            text: "x".into()
        }),
        Err(RuntimeError::EventNotApplicable(_))
    ));
    s.apply(Event::Advance).unwrap();
    let f = s
        .apply(Event::TextAnswer {
            page_id: "ask".into(),
            text: "The view".into(),
        })
        .unwrap();
    assert!(
        matches!(&f.body, FrameBody::Page { render: PageRender::Question { answer: Some(a), .. }, .. } if a == "The view")
    );

    let a = s.answers();
    assert_eq!(a.len(), 3);
    assert_eq!(
        a[0].payload,
        AnswerPayload::Quiz {
            statement: 0,
            given: Answer::Right,
            correct: true
        }
    );
    assert_eq!(
        a[1].payload,
        AnswerPayload::Quiz {
            statement: 1,
            given: Answer::Right,
            correct: false
        }
    );
    assert_eq!(a[0].seq, 2);
    assert_eq!(a[2].seq, 5);
}

#[test]
fn render_models() {
    let s = story(
        r#"story "R" id=r lang=en
  chapter "C" id=c
    scene "S" id=s
      page book id=b
        cover "img/cover.png"
        bookpage "One" image="img/1.png"
        bookpage "Two" image="img/2.png"
        bookpage "Three" image="img/3.png"
        bookpage "Four" image="img/4.png"
      page dialogue id=d
        character "Ann"
        character "Bob"
        line "Ann" audio="a1.mp3" text="Hello"
        line "Bob" audio="a2.mp3" text="Hi"
        line "Ann" audio="a3.mp3" text="Bye"
"#,
    );
    let pages = s.pages();
    let PageRender::InteractiveBook { skim } = render_page(pages[0]) else {
        panic!()
    };
    assert_eq!(skim.len(), 5);
    assert_eq!(skim[0].image.path, "img/cover.png");
    assert_eq!(skim[4].title.as_deref(), Some("Four"));
    let PageRender::Dialogue { entries } = render_page(pages[1]) else {
        panic!()
    };
    let speakers: Vec<_> = entries.iter().map(|e| e.speaker.as_str()).collect();
    assert_eq!(speakers, ["Ann", "Bob", "Ann"]);
    assert_eq!(entries[2].text, "Bye");
}

#[test]
fn simulate_records_errors_and_replays() {
    let events = vec![
        Event::Advance,
        sel("m1", "zz"),
        sel("m1", "b"),
        Event::Advance,
        sel("m2", "od"),
        Event::Advance,
        Event::Advance,
        Event::Advance,
    ];
    let t = simulate(story(TWO_BY_TWO), &events).unwrap();
    assert_eq!(t.entries.len(), 8);
    assert_eq!(t.entries[1].error.as_ref().unwrap().code, "event_not_applicable");
    assert_eq!(t.entries[7].error.as_ref().unwrap().code, "session_finished");
    assert_eq!(t.last_frame().kind, FrameKind::End);

    let again = replay(story(TWO_BY_TWO), &t).unwrap();
    assert_eq!(again, t);

    let text = t.to_jsonl();
    assert_eq!(text.lines().count(), 10);
    assert!(text.lines().next().unwrap().starts_with(r#"{"type":"start""#));
    assert_eq!(Transcript::from_jsonl(&text).unwrap(), t);
}

#[test]
fn session_transcript_matches_simulate_without_errors() {
    let (mut s, _) = start(story(TWO_BY_TWO)).unwrap();
    let events = [Event::Advance, sel("m1", "b"), Event::Advance];
    for e in &events {
        s.apply(e.clone()).unwrap();
    }
    assert_eq!(s.transcript(), simulate(story(TWO_BY_TWO), &events).unwrap());
}

#[test]
fn event_jsonl() {
    let events = vec![
        Event::Advance,
        sel("m", "o"),
        Event::Continue { menu_id: "m".into() },
        Event::Position { lat: 1.5, lon: -2.0 },
        Event::QrScan { payload: "p".into() },
        Event::NfcScan { tag: "t".into() },
        Event::QuizAnswer {
            page_id: "q".into(),
            statement: 1,
            answer: Answer::Wrong,
        },
        Event::TextAnswer {
            page_id: "q".into(),
            text: "x".into(),
        },
    ];
    let text = events_to_jsonl(&events);
    assert!(text
        .starts_with("{\"type\":\"advance\"}\n{\"type\":\"select_option\",\"menu_id\":\"m\",\"option_id\":\"o\"}\n"));
    let with_comment = format!("# script\n\n{text}");
    assert_eq!(parse_events_jsonl(&with_comment).unwrap(), events);
    assert!(matches!(
        parse_events_jsonl("{\"type\":\"jump\"}"),
        Err(JsonlError::Json { line: 1, .. })
    ));
}

#[test]
fn greedy_run_reaches_end() {
    let t = run_greedy(story(TRIGGERS), 100).unwrap();
    assert_eq!(t.last_frame().kind, FrameKind::End);
    assert_eq!(t.last_frame().element_id.as_deref(), Some("door-end"));
    let t = run_greedy(story(TWO_BY_TWO), 100).unwrap();
    assert_eq!(ids(&t), ["intro", "m1", "pa", "m2", "pc", "outro", "<end>"]);
}

#[test]
fn used_choice_inside_reviewed_content_is_skipped() {
    let s = story(
        r#"story "N" id=n lang=en
  chapter "C" id=c
    scene "S" id=s
      menu more id=extra style=list
        option "Side" id=side
          menu choice id=inner style=tiles
            option "X" id=x
              page simple id=px
                text "x"
            option "Y" id=y
              page simple id=py
                text "y"
          page simple id=tail
            text "t"
"#,
    );
    let (mut s, _) = start(s).unwrap();
    s.apply(sel("extra", "side")).unwrap();
    s.apply(sel("inner", "x")).unwrap();
    s.apply(Event::Advance).unwrap();
    s.apply(Event::Advance).unwrap();
    let f = s.apply(sel("extra", "side")).unwrap();
    assert!(matches!(&f.body, FrameBody::Page { page_id, .. } if page_id == "tail"));
}

#[test]
fn sessions_are_send() {
    fn assert_send<T: Send + Sync>() {}
    assert_send::<Session>();
}
