use std::process::ExitCode;

fn main() -> ExitCode {
    swarmshape::cli::main_with(std::env::args_os())
}
