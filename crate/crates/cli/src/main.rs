fn main() -> std::process::ExitCode {
    fairalloc_cli::run(std::env::args_os())
}
