fn main() {
    std::process::exit(beliefreach::cli::main_from_args(std::env::args_os()));
}
