use super::*;
use crate::model::*;
use crate::script::parse;

fn story(src: &str) -> Story {
    parse(src).unwrap()
}

fn codes(s: &Story) -> Vec<String> {
    validate(s).into_iter().map(|d| d.code).collect()
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
fn two_by_two_merge_back_paths() {
    let s = story(TWO_BY_TWO);
    let p = enumerate_choice_paths(&s, 100);
    assert!(!p.truncated);
    let sigs: Vec<Vec<&str>> = p
        .paths
        .iter()
        .map(|sig| sig.iter().map(|c| c.option.as_str()).collect())
        .collect();
    assert_eq!(
        sigs,
        vec![vec!["a", "oc"], vec!["a", "od"], vec!["b", "oc"], vec!["b", "od"]]
    );
    assert_eq!(choice_path_count(&s), 4);
    assert_eq!(classify_structure(&s), StructureClass::NearLinear);
}

#[test]
fn end_inside_option_cuts_path() {
    let s = story(
        r#"story "B" id=b lang=en
  chapter "C" id=c
    scene "S" id=s
      menu choice id=m1 style=tiles
        option "Stay" id=stay
          end "Early" id=early
        option "Go" id=go
          page simple id=p1
            text "on"
      menu choice id=m2 style=tiles
        option "X" id=x
          page simple id=px
            text "x"
        option "Y" id=y
          page simple id=py
            text "y"
"#,
    );
    let p = enumerate_choice_paths(&s, 100);
    assert_eq!(p.paths.len(), 3);
    assert_eq!(p.paths[0].len(), 1);
    assert_eq!(choice_path_count(&s), 3);
    assert_eq!(classify_structure(&s), StructureClass::Branching);
}

#[test]
fn truncation() {
    let s = story(TWO_BY_TWO);
    let p = enumerate_choice_paths(&s, 3);
    assert_eq!(p.paths.len(), 3);
    assert!(p.truncated);
    let p = enumerate_choice_paths(&s, 4);
    assert!(!p.truncated);
}

#[test]
fn linear_story_has_one_empty_path() {
    let s = story(
        r#"story "L" id=l lang=en
  chapter "C" id=c
    scene "S" id=s
      page simple id=p1
        text "x"
        image "img/a.png"
      menu more id=m style=tiles
        option "More" id=o
          page simple id=p2
            text "y"
            image "img/b.png"
"#,
    );
    let p = enumerate_choice_paths(&s, 10);
    assert_eq!(p.paths, vec![Vec::<ChoiceStep>::new()]);
    assert_eq!(classify_structure(&s), StructureClass::Linear);
    assert_eq!(classify_experience_type(&s), ExperienceType::DigitalStorytelling);
}

#[test]
fn experience_types() {
    let base = |body: &str, tag: &str| {
        story(&format!(
            "story \"T\" id=t lang=en{tag}\n  chapter \"C\" id=c\n    scene \"S\" id=s\n{body}"
        ))
    };
    let simple = "      page simple id=p\n        text \"x\"\n";
    let quiz = "      page quiz id=q\n        statement \"s\" answer=right\n";
    let dialogue =
        "      page dialogue id=d\n        character \"A\"\n        line \"A\" audio=\"a.mp3\" text=\"hi\"\n";
    let choice = "      menu choice id=m style=tiles\n        option \"A\" id=a\n          page simple id=pa\n            text \"a\"\n        option \"B\" id=b\n          page simple id=pb\n            text \"b\"\n";

    assert_eq!(
        classify_experience_type(&base(simple, "")),
        ExperienceType::MultimediaGuide
    );
    assert_eq!(
        classify_experience_type(&base(quiz, "")),
        ExperienceType::GamifiedEducational
    );
    assert_eq!(
        classify_experience_type(&base(&format!("{simple}{choice}"), "")),
        ExperienceType::InteractiveDigitalStorytelling
    );
    assert_eq!(classify_experience_type(&base(dialogue, "")), ExperienceType::Untyped);
    assert_eq!(
        classify_experience_type(&base(dialogue, " tag=\"dialogue-based-social\"")),
        ExperienceType::DialogueBasedSocial
    );
    assert_eq!(
        classify_experience_type(&base(quiz, " tag=\"experiential-social\"")),
        ExperienceType::ExperientialSocial
    );
}

#[test]
fn erl_levels() {
    let with = |attrs: &str, body: &str| {
        estimate_erl(&story(&format!(
            "story \"E\" id=e lang=en{attrs}\n  chapter \"C\" id=c\n    scene \"S\" id=s\n{body}"
        )))
    };
    let full = "      page simple id=p1\n        image \"img/a.png\"\n      page quiz id=q\n        statement \"s\" answer=right\n";
    let partial = "      page simple id=p1\n        image \"img/a.png\"\n      page simple id=p2\n        text \"x\"\n";
    let draft = "      page simple id=p1\n        image ~\"img/a.png\"\n";

    assert_eq!(with("", full), 1);
    assert_eq!(with(" structure_validated=true", full), 2);
    assert_eq!(
        with(" structure_validated=true sample_scenes_validated=true", partial),
        3
    );
    assert_eq!(with(" structure_validated=true sample_scenes_validated=true", full), 4);
    assert_eq!(
        with(
            " structure_validated=true sample_scenes_validated=true validated_onsite=invited",
            draft
        ),
        5
    );
    assert_eq!(
        with(
            " structure_validated=true sample_scenes_validated=true validated_onsite=invited",
            full
        ),
        6
    );
    assert_eq!(
        with(
            " structure_validated=true sample_scenes_validated=true validated_onsite=public",
            full
        ),
        7
    );
    // onsite evidence without earlier levels does not count
    assert_eq!(with(" validated_onsite=public", full), 1);
}

#[test]
fn validator_codes() {
    let mut s = story(TWO_BY_TWO);
    assert!(codes(&s).is_empty());

    if let ChapterElement::Scene(sc) = &mut s.chapters[0].elements[0] {
        if let SceneElement::Page(p) = &mut sc.elements[0] {
            p.id = "pa".into();
        }
    }
    let d = validate(&s);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].code, "V001");
    assert_eq!(d[0].paths.len(), 2);
}

#[test]
fn single_option_choice_warns() {
    let s = story(
        r#"story "W" id=w lang=en
  chapter "C" id=c
    scene "S" id=s
      menu choice id=m style=tiles
        option "Only" id=o
          page simple id=p
            text "x"
"#,
    );
    let r = analyze(&s);
    assert_eq!(codes(&s), vec!["V006"]);
    assert!(!r.has_errors());
    assert!(r.has_warnings());
    assert!(r.erl.is_some());
}

#[test]
fn overlapping_regions_and_qr_collision() {
    let s = story(
        r#"story "G" id=g lang=en
  chapter "C" id=c
    scene "S" id=s
      menu more id=m style=map
        option "A" id=a region=37.9715,23.7257,50
          page simple id=pa
            text "a"
        option "B" id=b region=37.9719,23.7257,10
          page simple id=pb
            text "b"
        option "Far" id=far region=38.5,23.7257,10
          page simple id=pf
            text "f"
      menu more id=q style=qr
        option "X" id=x qr="same"
          page simple id=px
            text "x"
        option "Y" id=y qr="same"
          page simple id=py
            text "y"
"#,
    );
    // a and b are ~44.5 m apart with radii summing to 60 m
    let d = validate(&s);
    let c: Vec<_> = d.iter().map(|d| d.code.as_str()).collect();
    assert_eq!(c, vec!["V007", "V004"]);
    assert_eq!(d[0].paths.len(), 2);
}

#[test]
fn bad_paths_and_depth() {
    let mut src = String::from("story \"D\" id=d lang=en\n  chapter \"C\" id=c\n    scene \"S\" id=s\n      page simple id=p\n        image \"x.png\"\n");
    let mut indent = 6;
    for i in 0..9 {
        src += &format!(
            "{:indent$}menu more id=m{i} style=tiles\n{:w$}option \"O\" id=o{i}\n",
            "",
            "",
            w = indent + 2
        );
        indent += 4;
    }
    src += &format!(
        "{:indent$}page simple id=leaf\n{:w$}text \"x\"\n",
        "",
        "",
        w = indent + 2
    );
    let mut s = story(&src);
    if let ChapterElement::Scene(sc) = &mut s.chapters[0].elements[0] {
        if let SceneElement::Page(Page {
            payload: PagePayload::Simple { images, .. },
            ..
        }) = &mut sc.elements[0]
        {
            images[0].path = "../x.png".into();
        }
    }
    let c = codes(&s);
    assert_eq!(c, vec!["V003", "V008"]);
    assert_eq!(stats(&s).max_menu_depth, 9);
}

#[test]
fn missing_asset_files() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("img")).unwrap();
    std::fs::write(dir.path().join("img/a.png"), b"x").unwrap();
    let s = story(
        "story \"A\" id=a lang=en\n  chapter \"C\" id=c\n    scene \"S\" id=s\n      page simple id=p\n        image \"img/a.png\"\n        image \"img/b.png\"\n",
    );
    let d = validate_with_assets(&s, dir.path());
    assert_eq!(d.len(), 1);
    assert!(d[0].message.contains("img/b.png"));
}

#[test]
fn stats_counts() {
    let st = stats(&story(TWO_BY_TWO));
    assert_eq!(st.chapters, 1);
    assert_eq!(st.scenes, 1);
    assert_eq!(st.pages, 6);
    assert_eq!(st.pages_by_kind[&PageKind::Simple], 6);
    assert_eq!(st.menus_by_kind[&MenuKind::Choice], 2);
    assert_eq!(st.menus_by_style[&MenuStyleKind::Tiles], 1);
    assert_eq!(st.max_menu_depth, 1);
    assert_eq!(st.choice_paths, 4);
}
