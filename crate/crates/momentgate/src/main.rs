fn main() {
    std::process::exit(momentgate::cli::dispatch(std::env::args_os()));
}
