fn main() {
    let code = rgpso::harness::cli::main_with_args(std::env::args_os());
    std::process::exit(code);
}
