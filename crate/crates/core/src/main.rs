use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    let code = cliquefuse::cli::main_with_args(std::env::args_os(), &mut io::stdout().lock());
    ExitCode::from(code)
}
