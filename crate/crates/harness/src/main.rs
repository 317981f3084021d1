fn main() {
    let code = soaa_bench::cli::cli_main(std::env::args_os(), &mut std::io::stdout());
    std::process::exit(code);
}
