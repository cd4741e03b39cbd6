fn main() -> std::process::ExitCode {
    tinypilot::cli::main_with_args(std::env::args_os())
}
