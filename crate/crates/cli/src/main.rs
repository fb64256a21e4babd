fn main() {
    std::process::exit(torsionfield_cli::cli::run(std::env::args_os()));
}
