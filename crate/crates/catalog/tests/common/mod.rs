use std::collections::BTreeMap;

use narralive_core::bundle::{compile, CompileOptions};
use narralive_core::script::parse;

pub fn source(id: &str, title: &str, text: &str) -> String {
    format!(
        r#"story "{title}" id={id} lang=en description="A short visit"
  chapter "Hall" id=hall
    scene "Entrance" id=entrance
      page simple id=welcome
        text "{text}"
        image "img/hall.png"
"#
    )
}

pub fn assets() -> BTreeMap<String, Vec<u8>> {
    BTreeMap::from([("img/hall.png".to_string(), b"PNG hall image".to_vec())])
}

pub fn bundle(id: &str, title: &str, version: u64) -> Vec<u8> {
    let story = parse(&source(id, title, &format!("Welcome, v{version}"))).expect("fixture parses");
    compile(&story, &assets(), &CompileOptions::new(version))
        .expect("fixture compiles")
        .bytes
}
