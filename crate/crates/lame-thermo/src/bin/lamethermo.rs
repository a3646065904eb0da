fn main() {
    std::process::exit(lame_thermo::cli::run_cli());
}
