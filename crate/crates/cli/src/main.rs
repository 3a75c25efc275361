use std::io;
use std::process::ExitCode;

fn main() -> ExitCode {
    concept_align_cli::init_logging();
    let stdout = io::stdout();
    let code = concept_align_cli::run(std::env::args_os(), &mut stdout.lock());
    ExitCode::from(code)
}
