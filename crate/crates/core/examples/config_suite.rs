//! Parses a small config, runs it and prints the JSON report.

use bellman_core::config::parse_config;
use bellman_core::suite::run_suite;

const CONFIG: &str = "\
experiment = demo
seed = 1

[scenario orthant]
kind = verify
check = orthant
p = 0.5

[scenario region]
kind = region
check = hyper
p = 0.5
grid = 8
tol = 0
";

fn main() -> bellman_core::Result<()> {
    let cfg = parse_config(CONFIG)?;
    let out = run_suite(&cfg, Some(2))?;
    println!("{}", out.report.canonical().to_json()?);
    for p in &out.plots {
        print!("{}", p.to_csv());
    }
    if let Err(e) = parse_config("[scenario bad]\nkind = check-pde\ncheck = reduced-h\ncandidate = phi:b=3,1\na = 3,1\nC = auto-A1:b=3,1\n") {
        println!("{e}");
    }
    Ok(())
}
