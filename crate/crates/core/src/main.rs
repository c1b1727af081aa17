fn main() {
    std::process::exit(gender_venues::cli::run(std::env::args_os()));
}
