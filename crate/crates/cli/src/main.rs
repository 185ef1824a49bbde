use std::io::Write;

fn main() {
    let outcome = singres::run(std::env::args());
    if !outcome.stdout.is_empty() {
        print!("{}", outcome.stdout);
    }
    if !outcome.stderr.is_empty() {
        let _ = writeln!(std::io::stderr(), "{}", outcome.stderr.trim_end());
    }
    std::process::exit(outcome.code);
}
