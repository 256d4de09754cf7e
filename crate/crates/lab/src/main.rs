fn main() -> std::process::ExitCode {
    tbm_lab::cli::main()
}
