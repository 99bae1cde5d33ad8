fn main() {
    std::process::exit(ahtsgd_cli::app::main_with(std::env::args_os()));
}
