fn main() {
    std::process::exit(sdcmpcc::cli::run(std::env::args_os()));
}
