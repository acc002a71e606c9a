fn main() {
    std::process::exit(rdiff::cli::main_entry());
}
