use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(pascal_bilateral::cli::run())
}
