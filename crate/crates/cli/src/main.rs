fn main() {
    std::process::exit(condgan_cli::main_with_args(std::env::args_os()));
}
