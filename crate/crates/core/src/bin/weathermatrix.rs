fn main() {
    std::process::exit(weathermatrix::cli::main_exit_code());
}
