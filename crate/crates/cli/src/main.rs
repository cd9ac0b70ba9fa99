fn main() {
    std::process::exit(rwa_lab::main_with(std::env::args_os()));
}
