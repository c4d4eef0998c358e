//! Drives the command-line surface in-process: runs a command, then replays
//! it from the manifest and checks the result is identical.

use neighperc::cli::{execute, to_csv};

fn main() {
    let (_, first) = execute(["neighperc", "tail", "--n-max", "8", "--trials", "500", "--seed", "42"]).expect("tail runs");
    println!("manifest: {}", serde_json::to_string_pretty(&first.manifest).unwrap());

    let mut argv = vec!["neighperc".to_string()];
    argv.extend(first.manifest.replay.iter().cloned());
    let (_, again) = execute(&argv).expect("replay runs");
    assert_eq!(first.result, again.result);
    println!("replay reproduced the result\n");
    print!("{}", to_csv(&first).unwrap());
}
