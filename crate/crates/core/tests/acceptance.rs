use std::process::ExitCode;

fn main() -> ExitCode {
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids: Vec<u32> = if only.is_empty() { sepkit::acceptance::CRITERIA.to_vec() } else { only };
    let mut failed = 0;
    for id in ids {
        let r = sepkit::acceptance::run(id).expect("known criterion");
        println!("{}", r.line());
        if !r.passed {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
