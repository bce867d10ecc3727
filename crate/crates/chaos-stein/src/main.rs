fn main() {
    std::process::exit(chaos_stein::cli::run(std::env::args_os()));
}
