use clap::Parser;

fn main() {
    let args = match bogo_cli::Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { bogo_cli::EXIT_USAGE } else { bogo_cli::EXIT_PASS });
        }
    };
    std::process::exit(bogo_cli::main_with(&args));
}
