fn main() {
    std::process::exit(mlmc_ddp::cli::main_with_args(std::env::args_os()));
}
