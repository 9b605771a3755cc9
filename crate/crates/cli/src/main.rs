fn main() {
    std::process::exit(kerromit_cli::run(std::env::args().skip(1)));
}
