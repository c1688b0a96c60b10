use clap::Parser;

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("EULER_LOG", "warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = periodic_euler_cli::Cli::parse();
    std::process::exit(periodic_euler_cli::run(cli));
}
