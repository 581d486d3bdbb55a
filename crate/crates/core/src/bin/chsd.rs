fn main() -> std::process::ExitCode {
    chsd::cli::main()
}
