use std::io::{self, Write};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SRF_LOG", "warn")).init();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut err = io::stderr();
    let code = srf_core::cli::main_with(
        std::env::args_os(),
        Box::new(io::stdin()),
        &mut out,
        &mut err,
    );
    let _ = out.flush();
    std::process::exit(code);
}
