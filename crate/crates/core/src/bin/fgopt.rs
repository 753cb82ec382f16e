use std::io::{stderr, stdout};

use fgopt::cli;

fn main() {
    let (mut out, mut err) = (stdout(), stderr());
    let code = match cli::parse(std::env::args_os(), &mut out, &mut err) {
        Ok(args) => {
            env_logger::Builder::new()
                .filter_level(cli::log_level(args.verbose))
                .parse_default_env()
                .init();
            cli::run(args, &mut out, &mut err)
        }
        Err(code) => code,
    };
    std::process::exit(code);
}
