use std::process::Command;

fn main() {
    let describe = Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string());
    if let Some(v) = describe {
        if !v.is_empty() {
            println!("cargo:rustc-env=SOLSPACE_GIT_DESCRIBE={v}");
        }
    }
    println!("cargo:rerun-if-changed=../../.git/HEAD");
}
