use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = acc_cutin::commands::Cli::parse();
    let result = acc_cutin::commands::run(&cli);
    if let Err(e) = &result {
        eprintln!("error: {e}");
    }
    std::process::exit(acc_cutin::commands::exit_code(&result));
}
