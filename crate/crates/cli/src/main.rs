use clap::Parser;

fn main() {
    let cli = mlfg_cli::args::Cli::parse();
    let code = mlfg_cli::run(cli);
    std::process::exit(code.as_i32());
}
