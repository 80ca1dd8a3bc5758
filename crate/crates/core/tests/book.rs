//! Every chapter listed in the book summary is compiled as a doc-test.

use std::path::Path;

#[test]
fn every_chapter_is_a_doctest() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let summary = std::fs::read_to_string(root.join("../../book/src/SUMMARY.md")).unwrap();
    let lib = std::fs::read_to_string(root.join("src/lib.rs")).unwrap();
    let chapters: Vec<&str> = summary
        .lines()
        .filter_map(|l| l.split("](").nth(1)?.strip_suffix(')'))
        .collect();
    assert!(chapters.len() >= 5);
    for ch in chapters {
        assert!(root.join("../../book/src").join(ch).exists(), "{ch} missing");
        assert!(lib.contains(&format!("\"{ch}\")")), "{ch} not included in lib.rs");
    }
}
