fn main() -> std::process::ExitCode {
    role_engine::cli::main()
}
