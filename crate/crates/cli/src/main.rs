fn main() {
    std::process::exit(appraisal_cli::main_with_args(std::env::args_os().collect()));
}
