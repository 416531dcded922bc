fn main() -> std::process::ExitCode {
    arcorpus::cli::main_with_args(std::env::args_os())
}
