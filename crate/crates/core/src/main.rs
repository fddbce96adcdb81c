fn main() {
    std::process::exit(drskit::cli::main_entry());
}
