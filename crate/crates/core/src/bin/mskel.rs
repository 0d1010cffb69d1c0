fn main() {
    std::process::exit(matching_skeleton::cli::dispatch(std::env::args_os()));
}
