//! Raw logger files to a versioned alteration matrix on disk, driven
//! through the `weathermatrix` command in a temporary directory.

use weathermatrix::cli::run;

fn step(args: &[&str], dir: &str) -> i32 {
    let env = |_: &str| None;
    let mut argv = vec!["weathermatrix", "--data-dir", dir];
    argv.extend_from_slice(args);
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(argv, &env, &mut out, &mut err);
    println!("$ weathermatrix {}  -> exit {code}", args.join(" "));
    for line in String::from_utf8_lossy(&out).lines().take(8) {
        println!("    {line}");
    }
    for line in String::from_utf8_lossy(&err).lines() {
        println!("    ! {line}");
    }
    code
}

fn main() {
    let tmp = std::env::temp_dir().join(format!("weathermatrix-demo-{}", std::process::id()));
    let dir = tmp.to_str().expect("utf-8 temp path");
    let site = "strasbourg/inputs";

    step(&["fixture", "--days", "60"], dir);
    step(&["--site", "strasbourg", "ingest", &format!("{site}/logs")], dir);
    step(&["--site", "strasbourg", "events", "--faces", "NE,SW"], dir);
    let mut campaigns: Vec<_> = std::fs::read_dir(tmp.join(site).join("campaigns"))
        .expect("fixture campaigns")
        .map(|e| e.unwrap().path())
        .collect();
    campaigns.sort();
    for path in campaigns {
        step(&["--site", "strasbourg", "campaign", "add", path.to_str().unwrap()], dir);
    }
    step(&["--site", "strasbourg", "index"], dir);
    step(&["--site", "strasbourg", "matrix", "build"], dir);
    step(&["--site", "strasbourg", "matrix", "export"], dir);
    step(&["--site", "strasbourg", "matrix", "diff"], dir);

    let _ = std::fs::remove_dir_all(&tmp);
}
