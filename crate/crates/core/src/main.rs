fn main() {
    std::process::exit(gainloss::cli::main_with_args(std::env::args_os()));
}
