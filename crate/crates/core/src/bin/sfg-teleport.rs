fn main() {
    std::process::exit(sfg_teleport::harness::run_cli(std::env::args_os()));
}
