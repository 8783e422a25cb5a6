use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let header = crate_dir.join("include").join("epca.h");
    let mut config = cbindgen::Config::default();
    config.language = cbindgen::Language::C;
    config.include_guard = Some("EPCA_H".into());
    config.cpp_compat = true;
    config.documentation = true;
    config.enumeration.prefix_with_name = true;
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(header);
        }
        Err(err) => {
            // don't fail the build on header generation problems; the
            // checked-in header stays as-is
            println!("cargo:warning=cbindgen failed: {err}");
        }
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
}
