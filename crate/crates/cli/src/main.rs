fn main() {
    std::process::exit(sparse_spectra_cli::main_with(std::env::args_os()));
}
