use std::collections::BTreeMap;
use std::path::Path;

use crate::diagnostic::Diagnostic;
use crate::geo;
use crate::model::*;

use super::stats::menu_depths;

/// Menu nesting beyond this depth draws a `V008` warning.
pub const MAX_MENU_DEPTH: usize = 8;

/// Checks a story against every structural and content rule.
///
/// | code | severity | rule |
/// |------|----------|------|
/// | V001 | error | duplicate element id |
/// | V002 | error | empty container |
/// | V003 | error | asset path not relative/normalized (or missing on disk) |
/// | V004 | error | two QR options share a payload |
/// | V005 | error | option trigger does not fit the menu style |
/// | V006 | warning | choice menu with a single option |
/// | V007 | warning | overlapping map regions in one menu |
/// | V008 | warning | menu nesting deeper than 8 |
/// | V009 | error | identifier does not match `[a-z0-9-]{1,64}` |
/// | V010 | error | invalid template content |
pub fn validate(story: &Story) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    if !is_valid_id(&story.id) {
        out.push(Diagnostic::error(
            "V009",
            format!("story id `{}` must match [a-z0-9-]{{1,64}}", story.id),
        ));
    }
    if story.chapters.is_empty() {
        out.push(Diagnostic::error("V002", "story has no chapters").with_paths(vec![ElementPath::root()]));
    }

    let mut ids: BTreeMap<&str, Vec<ElementPath>> = BTreeMap::new();
    let mut qr: BTreeMap<String, Vec<ElementPath>> = BTreeMap::new();

    story.walk(|path, e| {
        ids.entry(e.id()).or_default().push(path.clone());
        if !is_valid_id(e.id()) {
            out.push(
                Diagnostic::error(
                    "V009",
                    format!("{} id `{}` must match [a-z0-9-]{{1,64}}", e.kind(), e.id()),
                )
                .with_paths(vec![path.clone()]),
            );
        }
        if e.child_count() == 0 && !matches!(e, ElementRef::Page(_) | ElementRef::End(_)) {
            out.push(
                Diagnostic::error("V002", format!("{} `{}` is empty", e.kind(), e.id())).with_paths(vec![path.clone()]),
            );
        }
        match e {
            ElementRef::Chapter(c) => {
                if let Some(img) = &c.preview_image {
                    check_asset(&mut out, path, img, AssetKind::Image);
                }
            }
            ElementRef::Page(p) => check_page(&mut out, path, p),
            ElementRef::Menu(m) => check_menu(&mut out, story, path, m, &mut qr),
            _ => {}
        }
    });

    for (id, paths) in ids {
        if paths.len() > 1 {
            out.push(
                Diagnostic::error("V001", format!("id `{id}` is used by {} elements", paths.len())).with_paths(paths),
            );
        }
    }
    for (payload, paths) in qr {
        if paths.len() > 1 {
            out.push(
                Diagnostic::error("V004", format!("QR payload `{payload}` is shared by several options"))
                    .with_paths(paths),
            );
        }
    }

    let deepest = menu_depths(story).into_iter().max_by_key(|(_, d)| *d);
    if let Some((path, depth)) = deepest {
        if depth > MAX_MENU_DEPTH {
            out.push(
                Diagnostic::warning(
                    "V008",
                    format!("menus are nested {depth} deep (more than {MAX_MENU_DEPTH})"),
                )
                .with_paths(vec![path]),
            );
        }
    }
    out
}

/// Like [`validate`], and additionally reports asset paths that do not
/// resolve to a file under `asset_root` (`V003`).
pub fn validate_with_assets(story: &Story, asset_root: &Path) -> Vec<Diagnostic> {
    let mut out = validate(story);
    let mut seen = std::collections::BTreeSet::new();
    for a in story.assets() {
        if is_normalized_asset_path(&a.path) && seen.insert(a.path.as_str()) && !asset_root.join(&a.path).is_file() {
            out.push(Diagnostic::error(
                "V003",
                format!("asset `{}` not found under {}", a.path, asset_root.display()),
            ));
        }
    }
    out
}

fn check_asset(out: &mut Vec<Diagnostic>, path: &ElementPath, a: &AssetRef, expected: AssetKind) {
    if !is_normalized_asset_path(&a.path) {
        out.push(
            Diagnostic::error(
                "V003",
                format!("asset path `{}` must be relative and normalized", a.path),
            )
            .with_paths(vec![path.clone()]),
        );
    }
    if a.kind != expected {
        out.push(
            Diagnostic::error(
                "V010",
                format!("asset `{}` is declared {} but used as {expected}", a.path, a.kind),
            )
            .with_paths(vec![path.clone()]),
        );
    }
}

fn check_hotspots(out: &mut Vec<Diagnostic>, path: &ElementPath, hotspots: &[Hotspot]) {
    for h in hotspots {
        if !h.rect.is_within_unit_square() {
            out.push(
                Diagnostic::error("V010", "hotspot rectangle must lie within the image").with_paths(vec![path.clone()]),
            );
        }
        if let Interaction::Audio { audio } = &h.interaction {
            check_asset(out, path, audio, AssetKind::Audio);
        }
    }
}

fn check_page(out: &mut Vec<Diagnostic>, path: &ElementPath, p: &Page) {
    let empty =
        |what: &str| Diagnostic::error("V002", format!("page `{}` has no {what}", p.id)).with_paths(vec![path.clone()]);
    match &p.payload {
        PagePayload::Simple { images, audio, .. } => {
            images.iter().for_each(|a| check_asset(out, path, a, AssetKind::Image));
            audio.iter().for_each(|a| check_asset(out, path, a, AssetKind::Audio));
        }
        PagePayload::Dialogue { characters, lines } => {
            for l in lines {
                if !characters.contains(&l.speaker) {
                    out.push(
                        Diagnostic::error("V010", format!("speaker `{}` is not a declared character", l.speaker))
                            .with_paths(vec![path.clone()]),
                    );
                }
                check_asset(out, path, &l.audio, AssetKind::Audio);
            }
        }
        PagePayload::Quiz { statements } => {
            if statements.is_empty() {
                out.push(empty("statements"));
            }
        }
        PagePayload::Video { video } => check_asset(out, path, video, AssetKind::Video),
        PagePayload::InteractiveImage { image, hotspots } => {
            check_asset(out, path, image, AssetKind::Image);
            check_hotspots(out, path, hotspots);
        }
        PagePayload::InteractiveBook { cover, book_pages } => {
            check_asset(out, path, cover, AssetKind::Image);
            if book_pages.is_empty() {
                out.push(empty("book pages"));
            }
            for bp in book_pages {
                check_asset(out, path, &bp.image, AssetKind::Image);
                check_hotspots(out, path, &bp.hotspots);
            }
        }
        PagePayload::Nfc { tag, .. } => {
            if tag.is_empty() {
                out.push(Diagnostic::error("V010", "NFC page needs a tag").with_paths(vec![path.clone()]));
            }
        }
        PagePayload::Question { .. } => {}
    }
}

fn check_menu(
    out: &mut Vec<Diagnostic>,
    story: &Story,
    path: &ElementPath,
    m: &Menu,
    qr: &mut BTreeMap<String, Vec<ElementPath>>,
) {
    let style = m.style.kind();
    if let MenuStyle::InteractiveImage { image } = &m.style {
        check_asset(out, path, image, AssetKind::Image);
    }
    if m.kind == MenuKind::Choice && m.options.len() == 1 {
        out.push(
            Diagnostic::warning("V006", format!("choice menu `{}` offers a single option", m.id))
                .with_paths(vec![path.clone()]),
        );
    }
    for (i, o) in m.options.iter().enumerate() {
        let opath = path.child(i);
        if !style.accepts(&o.trigger) {
            out.push(
                Diagnostic::error(
                    "V005",
                    format!(
                        "option `{}` trigger does not match menu style `{}`",
                        o.id,
                        style.keyword()
                    ),
                )
                .with_paths(vec![opath.clone()]),
            );
        }
        match &o.trigger {
            Trigger::Poi { rect } if !rect.is_within_unit_square() => {
                out.push(
                    Diagnostic::error("V010", "POI rectangle must lie within the image")
                        .with_paths(vec![opath.clone()]),
                );
            }
            Trigger::Region { lat, lon, radius } => {
                if !geo::is_valid_coordinate(*lat, *lon) {
                    out.push(
                        Diagnostic::error("V010", "region center is not a valid coordinate")
                            .with_paths(vec![opath.clone()]),
                    );
                }
                if !(radius.is_finite() && *radius > 0.0) {
                    out.push(
                        Diagnostic::error("V010", "region radius must be positive").with_paths(vec![opath.clone()]),
                    );
                }
            }
            Trigger::NfcTag { tag } if tag.is_empty() => {
                out.push(Diagnostic::error("V010", "NFC trigger needs a tag").with_paths(vec![opath.clone()]));
            }
            _ => {}
        }
        if let Some(payload) = o.qr_payload(&story.id, &m.id) {
            qr.entry(payload).or_default().push(opath);
        }
    }

    let regions: Vec<(usize, f64, f64, f64)> = m
        .options
        .iter()
        .enumerate()
        .filter_map(|(i, o)| match o.trigger {
            Trigger::Region { lat, lon, radius } => Some((i, lat, lon, radius)),
            _ => None,
        })
        .collect();
    for (a, &(i, lat1, lon1, r1)) in regions.iter().enumerate() {
        for &(j, lat2, lon2, r2) in &regions[a + 1..] {
            let d = geo::haversine_m(lat1, lon1, lat2, lon2);
            if d < r1 + r2 {
                out.push(
                    Diagnostic::warning(
                        "V007",
                        format!(
                            "regions of options `{}` and `{}` overlap ({d:.1} m apart, radii {r1} m + {r2} m)",
                            m.options[i].id, m.options[j].id
                        ),
                    )
                    .with_paths(vec![path.child(i), path.child(j)]),
                );
            }
        }
    }
}
