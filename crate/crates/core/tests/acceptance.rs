use std::process::ExitCode;

use resurgia::selftest;

fn main() -> ExitCode {
    let results = selftest::run(&[], selftest::SEED);
    for r in &results {
        println!("{}", r.line());
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    println!("{} criteria, {} failed", results.len(), failed.len());
    if results.len() != 9 || !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
