fn main() {
    std::process::exit(travel_tweets::cli::run(std::env::args_os()));
}
