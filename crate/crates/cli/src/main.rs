use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(wavens::run(std::env::args_os()))
}
