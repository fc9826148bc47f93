fn main() {
    let (code, _) = itm_cli::run_command(std::env::args_os());
    std::process::exit(code);
}
