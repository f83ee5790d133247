use std::path::Path;
use std::process::Command;

fn compile(compiler: &str, lang: &str) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let status = match Command::new(compiler)
        .args([
            "-x",
            lang,
            "-fsyntax-only",
            "-Wall",
            "-Wextra",
            "-Werror",
            "-I",
        ])
        .arg(root.join("include"))
        .arg(root.join("tests/smoke.c"))
        .status()
    {
        Ok(s) => s,
        Err(_) => {
            eprintln!("{compiler} not found, skipping");
            return;
        }
    };
    assert!(status.success(), "{compiler} rejected the header");
}

#[test]
fn header_compiles_as_c() {
    compile("cc", "c");
}

#[test]
fn header_compiles_as_cpp() {
    compile("c++", "c++");
}
