fn main() {
    let args: Vec<String> = std::env::args().collect();
    std::process::exit(poroflow::cli::cli_main(&args));
}
