use std::process::ExitCode;

fn main() -> ExitCode {
    dca_lab::cli::main()
}
