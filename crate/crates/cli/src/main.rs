use std::io::{self, Write};
use std::panic;
use std::process::ExitCode;

use cascade_cli::error::EXIT_INTERNAL;

fn main() -> ExitCode {
    let code = panic::catch_unwind(|| {
        let mut stdout = io::stdout().lock();
        let mut stderr = io::stderr().lock();
        let code = cascade_cli::run(std::env::args_os(), &mut stdout, &mut stderr);
        let _ = stdout.flush();
        code
    })
    .unwrap_or(EXIT_INTERNAL);
    ExitCode::from(code as u8)
}
