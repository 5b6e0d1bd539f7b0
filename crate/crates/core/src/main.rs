use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(swarm_escape::cli::run(std::env::args_os()) as u8)
}
