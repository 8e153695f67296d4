fn main() {
    std::process::exit(boltseq::cli::main_from_env());
}
