//! Runs a few acceptance criteria, or the ones named on the command line.

fn main() -> ma_core::Result<()> {
    let ids: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let ids = if ids.is_empty() { vec![1, 4, 6] } else { ids };
    let report = ma_core::verify::run(Some(&ids), 0)?;
    print!("{}", report.table());
    println!("{} passed, {} failed", report.passed, report.failed);
    Ok(())
}
