//! One line per acceptance criterion; exits nonzero if any criterion fails.

use std::process::ExitCode;

use ssr_sim::bench::{check_acceptance, measure, CRITERIA};

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for (c, name) in CRITERIA {
        let verdicts = measure(c, true).and_then(|ms| check_acceptance(&ms));
        match verdicts {
            Ok(vs) => {
                for v in vs {
                    println!("{v}");
                    if !v.pass {
                        failed.push(c);
                    }
                }
            }
            Err(e) => {
                println!("criterion {c:>2} FAIL {name}: {e}");
                failed.push(c);
            }
        }
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria pass", CRITERIA.len());
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
