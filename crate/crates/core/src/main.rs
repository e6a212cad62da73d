fn main() -> std::process::ExitCode {
    loqc::cli::main()
}
