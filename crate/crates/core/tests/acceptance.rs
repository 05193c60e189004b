//! Acceptance run: one PASS/FAIL line per criterion at reference scale, with
//! each check's runtime budget enforced. Exits nonzero if any line fails.

use rdars_core::validation::{run_all, Scale};

fn main() {
    let scale = match std::env::var("RDARS_ACCEPTANCE_SCALE").as_deref() {
        Ok("quick") => Scale::Quick,
        _ => Scale::Full,
    };
    println!("acceptance criteria ({scale:?} scale)");
    let checks = run_all(scale);
    for c in &checks {
        println!("{c}");
    }
    let failed: Vec<u8> = checks.iter().filter(|c| !c.passed).map(|c| c.id).collect();
    if failed.is_empty() {
        println!("acceptance: {}/{} criteria passed", checks.len(), checks.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
