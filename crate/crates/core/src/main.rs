fn main() -> std::process::ExitCode {
    simulmt::cli::main()
}
