use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(snapcube::cli::run(std::env::args()) as u8)
}
