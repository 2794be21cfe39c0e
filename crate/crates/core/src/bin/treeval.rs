use std::process::ExitCode;

fn main() -> anyhow::Result<ExitCode> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).try_init()?;
    let code = treeval::cli::main_with(std::env::args_os());
    Ok(ExitCode::from(code as u8))
}
