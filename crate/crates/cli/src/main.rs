fn main() {
    std::process::exit(dnls_cli::dispatch(std::env::args_os()));
}
