use std::process::ExitCode;

fn main() -> ExitCode {
    aloha_dim::cli::run(std::env::args_os())
}
