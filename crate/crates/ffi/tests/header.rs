use std::process::Command;

#[test]
fn header_compiles_as_c_and_cpp() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/crosslate.h");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    for lang in ["c", "c++"] {
        let status = match Command::new(&cc).args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, header]).status() {
            Ok(s) => s,
            Err(e) => {
                eprintln!("skipping: no C compiler ({e})");
                return;
            }
        };
        assert!(status.success(), "{header} does not compile as {lang}");
    }
}
