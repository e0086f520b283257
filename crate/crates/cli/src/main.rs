use std::process::ExitCode;

fn main() -> ExitCode {
    dualsys_cli::run(std::env::args_os())
}
