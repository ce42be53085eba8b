use std::process::ExitCode;

fn main() -> ExitCode {
    polling_core::cli::main()
}
