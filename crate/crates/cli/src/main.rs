use std::process::ExitCode;

fn main() -> ExitCode {
    trunccount_cli::init_logging();
    let args: Vec<std::ffi::OsString> = std::env::args_os().collect();
    ExitCode::from(trunccount_cli::run(&args))
}
