use std::process::exit;

fn main() {
    exit(lvrlab_cli::dispatch(std::env::args_os()));
}
