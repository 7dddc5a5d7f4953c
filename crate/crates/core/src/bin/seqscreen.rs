fn main() {
    std::process::exit(seqscreen::cli::main());
}
