fn main() -> std::process::ExitCode {
    refgame::cli::main()
}
