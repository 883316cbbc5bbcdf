use std::process::ExitCode;

fn main() -> ExitCode {
    hbni::bench::commands::main_with_args(std::env::args_os())
}
