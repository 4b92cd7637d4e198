use clap::error::ErrorKind;
use clap::Parser;

use gcrf::cli::Cli;

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            std::process::exit(0);
        }
        Err(e) => {
            let _ = e.print();
            std::process::exit(1);
        }
    };
    if let Err(e) = cli.run() {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
