fn main() -> std::process::ExitCode {
    mcmu_cli::app::main()
}
