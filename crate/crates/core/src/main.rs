fn main() {
    std::process::exit(culturedyn::cli::run());
}
