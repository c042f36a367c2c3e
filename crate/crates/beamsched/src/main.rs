fn main() -> std::process::ExitCode {
    beamsched::cli::main_with(std::env::args_os())
}
