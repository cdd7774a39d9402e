fn main() {
    std::process::exit(perpetua_cli::run(std::env::args_os()));
}
