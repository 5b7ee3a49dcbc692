use std::io;
use std::process::ExitCode;

use sramcim::cli::{run, CONFIG_ENV};

fn main() -> ExitCode {
    let env_config = std::env::var_os(CONFIG_ENV).map(Into::into);
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = run(std::env::args_os(), env_config, &mut stdout.lock(), &mut stderr.lock());
    ExitCode::from(code as u8)
}
