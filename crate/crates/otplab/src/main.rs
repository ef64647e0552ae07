use std::process::ExitCode;

fn main() -> ExitCode {
    otplab::cli::run(std::env::args_os())
}
