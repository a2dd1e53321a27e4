fn main() {
    std::process::exit(sde_tv_lab::cli::main_with_args(std::env::args_os()));
}
