fn main() {
    std::process::exit(tfs::cli::run());
}
