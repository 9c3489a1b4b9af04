use std::io::{stderr, stdout};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let code = mot_cli::run_command(&argv, &mut stdout().lock(), &mut stderr().lock());
    std::process::exit(code);
}
