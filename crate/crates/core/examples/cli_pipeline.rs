//! Drives the experiment CLI in-process: runs every bundled config into a
//! scratch directory and prints the manifests.

use std::path::Path;

use surface_flows::cli::main_with_args;

fn main() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let out = std::env::temp_dir().join("surface-flows-pipeline");
    let mut entries: Vec<_> = std::fs::read_dir(&configs).expect("configs dir").flatten().map(|e| e.path()).collect();
    entries.sort();
    for path in entries {
        let text = std::fs::read_to_string(&path).expect("config");
        let Some(cmd) = text.lines().find_map(|l| l.strip_prefix("command = ")) else { continue };
        let cmd = cmd.trim_matches('"');
        if cmd == "weakmix" {
            // the pilot-sized sweep; see the weakmix_pilot example
            continue;
        }
        let stem = path.file_stem().unwrap().to_string_lossy().to_string();
        let dir = out.join(&stem);
        let code =
            main_with_args(["surface-flows", cmd, "--config", path.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
        println!("{stem}: {cmd} exited with {code}");
        if code == 0 {
            let manifest = std::fs::read_to_string(dir.join("manifest.toml")).unwrap();
            let summary: String = manifest.split("[config]").next().unwrap_or("").to_string();
            println!("{}", summary.trim_end());
        }
    }
}
