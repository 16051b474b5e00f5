fn main() {
    std::process::exit(rough_delay::harness::run_cli(std::env::args_os()));
}
