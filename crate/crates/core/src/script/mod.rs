//! The `.story` authoring format.
//!
//! An indentation-sensitive text format (two spaces per level, `#` starts a
//! comment) that maps one-to-one onto the story model. [`serialize`] emits
//! the canonical form: ids always written, attributes in a fixed order,
//! default-valued attributes omitted.

mod lexer;
mod parser;
mod writer;

use crate::diagnostic::Diagnostic;
use crate::model::Story;

/// Parses `.story` source text.
///
/// On failure every error found is returned, each with a line and column.
/// Elements without an explicit `id=` get one derived from their title.
pub fn parse(src: &str) -> Result<Story, Vec<Diagnostic>> {
    let src = lexer::normalize(src);
    let mut diags = Vec::new();
    let lines = lexer::lines(&src, &mut diags);
    let mut p = parser::Parser::new();
    p.diags = diags;
    let story = p.parse_document(&lines);
    let mut diags = p.diags;
    match story {
        Some(mut story) if diags.is_empty() => {
            parser::IdFiller::new(&story).fill(&mut story);
            Ok(story)
        }
        _ => {
            diags.sort_by_key(|d| (d.line, d.column));
            Err(diags)
        }
    }
}

/// Writes the canonical text of a story.
pub fn serialize(story: &Story) -> String {
    let mut w = writer::Writer::new();
    w.story(story);
    w.finish()
}

/// Quotes a string using the DSL's escape rules.
pub fn quote(s: &str) -> String {
    writer::quote(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;

    const MINIMAL: &str = r#"story "Minimal" id=minimal lang=en
  chapter "One" id=ch1
    scene "Start" id=sc1
      page simple id=p1
        text "Hello"
"#;

    fn codes(src: &str) -> Vec<String> {
        parse(src).unwrap_err().into_iter().map(|d| d.code).collect()
    }

    #[test]
    fn parses_minimal_story() {
        let s = parse(MINIMAL).unwrap();
        assert_eq!(s.chapters.len(), 1);
        let ChapterElement::Scene(sc) = &s.chapters[0].elements[0] else {
            panic!()
        };
        assert_eq!(sc.elements.len(), 1);
        assert_eq!(serialize(&s), MINIMAL);
    }

    #[test]
    fn trigger_style_mismatch() {
        let src = r#"story "S" id=s lang=en
  chapter "C" id=c
    menu choice id=m style=tiles
      option "A" id=a region=37.97,23.72,50
        page question id=q
          prompt "?"
"#;
        let d = parse(src).unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].code, "E005");
        assert_eq!((d[0].line, d[0].column), (Some(4), Some(7)));
    }

    #[test]
    fn reports_several_errors() {
        let src = r#"story "S" id=s
  chapter "C" id=c
    scene "A" id=dup
      page simple id=dup
        text "x"
      page bogus id=p2
      paragraph "x"
    scene "B" id=b
      page video id=v
"#;
        let c = codes(src);
        assert_eq!(c, vec!["E003", "E002", "E002", "E004"]);
    }

    #[test]
    fn indentation_errors() {
        assert!(codes("story \"S\"\n   chapter \"C\"\n").contains(&"E001".to_owned()));
        assert!(codes("story \"S\"\n\tchapter \"C\"\n").contains(&"E001".to_owned()));
    }

    #[test]
    fn malformed_values() {
        let src = r#"story "S" id=s
  chapter "C" id=c
    menu choice id=m style=iimage image="m.png"
      option "A" id=a poi=0.5,0.5,0.6,0.1
        end
"#;
        assert_eq!(codes(src), vec!["E006"]);
        let src = "story \"S\" id=Bad\n  chapter \"C\"\n    scene \"x\"\n      end\n";
        assert_eq!(codes(src), vec!["E006"]);
        let src = "story \"S\" id=s\n  chapter \"C\"\n    scene \"x\"\n      page video\n        video \"../a.mp4\"\n";
        assert_eq!(codes(src), vec!["E006"]);
    }

    #[test]
    fn derives_missing_ids() {
        let src = r#"story "Old Town Walk"
  chapter "The Gate"
    scene "The Gate"
      page simple
        text "a"
      page simple
        text "b"
      menu more style=list
        option "Read more!"
          page question
            prompt "?"
      end "The End"
"#;
        let s = parse(src).unwrap();
        assert_eq!(s.id, "old-town-walk");
        assert_eq!(
            s.element_ids(),
            vec![
                "the-gate",
                "the-gate-2",
                "simple",
                "simple-2",
                "menu",
                "read-more",
                "question",
                "the-end"
            ]
        );
    }

    #[test]
    fn derived_ids_avoid_later_explicit_ids() {
        let src = r#"story "S" id=s
  chapter "C"
    scene "X"
      page simple
      page simple id=simple
"#;
        let s = parse(src).unwrap();
        assert_eq!(s.element_ids(), vec!["c", "x", "simple-2", "simple"]);
    }

    #[test]
    fn escaped_title_round_trips() {
        let mut s = parse(MINIMAL).unwrap();
        s.title = "He said \"hi\" \\ bye".into();
        let ChapterElement::Scene(sc) = &mut s.chapters[0].elements[0] else {
            panic!()
        };
        sc.title = String::new();
        let text = serialize(&s);
        assert!(text.contains(r#"story "He said \"hi\" \\ bye""#));
        assert!(text.contains(r#"scene "" id=sc1"#));
        assert_eq!(parse(&text).unwrap(), s);
    }

    #[test]
    fn draft_assets_and_all_kinds() {
        let src = r#"story "Kinds" id=k lang=el tag="experiential-social" structure_validated=true validated_onsite=invited
  chapter "C" id=c preview=~"img/prev.png"
    scene "S" id=s
      page simple id=p1
        text "t"
        image "img/a.png"
        audio ~"audio/tts.mp3"
      page dialogue id=p2
        character "Ann"
        line "Ann" audio="audio/l1.mp3" text="Hi"
      page quiz id=p3
        statement "Sky is blue" answer=right feedback="Yes"
        statement "Sea is dry" answer=wrong
      page video id=p4
        video "v/clip.mp4"
      page iimage id=p5
        image "img/i.png"
        hotspot 0.1,0.1,0.2,0.2 text="Look"
        hotspot 0,0,0.5,0.5 audio="audio/h.mp3"
      page book id=p6
        cover "img/cover.png"
        bookpage "Page 1" image="img/b1.png"
          hotspot 0.2,0.2,0.1,0.1 text="Heart"
      page nfc id=p7
        prompt "Tap the tag"
        tag "tag-7"
      page question id=p8
        prompt "What did you like?"
      menu choice id=m1 style=iimage image="img/map.png"
        option "North" id=o1 poi=0,0,0.5,0.5
          end id=e1
      menu choice id=m2 style=map
        option "Gate" id=o2 region=37.9715,23.7257,25
          end "Gate ending" id=e2
      menu more id=m3 style=qr
        option "Auto" id=o3 qr=auto
          page question id=p9
            prompt "?"
        option "Fixed" id=o4 qr="custom"
          page question id=p10
            prompt "?"
      menu choice id=m4 style=list
        option "Tap" id=o5 nfc="door"
          page question id=p11
            prompt "?"
"#;
        let s = parse(src).unwrap();
        assert_eq!(serialize(&s), src);
        assert!(s.chapters[0].preview_image.as_ref().unwrap().draft);
        assert_eq!(s.evidence.validated_onsite, OnsiteValidation::Invited);
        let kinds: Vec<_> = s.pages().iter().map(|p| p.payload.kind()).collect();
        assert!(PageKind::ALL.iter().all(|k| kinds.contains(k)));
    }

    #[test]
    fn undeclared_speaker() {
        let src = r#"story "S" id=s
  chapter "C" id=c
    scene "S" id=sc
      page dialogue id=p
        character "Ann"
        line "Bob" audio="a.mp3" text="hi"
"#;
        let d = parse(src).unwrap_err();
        assert_eq!(d[0].code, "E006");
        assert_eq!((d[0].line, d[0].column), (Some(6), Some(14)));
    }

    #[test]
    fn crlf_and_comments() {
        let src = "# header\r\nstory \"S\" id=s # trailing\r\n  chapter \"C\" id=c\r\n\r\n    scene \"x\" id=x\r\n      end\r\n";
        let s = parse(src).unwrap();
        assert_eq!(s.element_ids(), vec!["c", "x", "end"]);
    }

    #[test]
    fn diagnostics_point_into_source() {
        let src = "story \"S\" id=s\n  chapter \"C\" id=c\n    scene \"x\" id=x\n      page quiz id=q\n        statement \"a\"\n";
        for d in parse(src).unwrap_err() {
            let line = d.line.unwrap();
            let text = src.lines().nth(line - 1).unwrap();
            assert!(d.column.unwrap() <= text.chars().count());
        }
    }
}
