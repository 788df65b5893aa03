fn main() -> std::process::ExitCode {
    supermarket::cli::main()
}
