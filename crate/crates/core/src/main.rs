fn main() { std::process::exit(symcone::cli::main_exit_code()); }
