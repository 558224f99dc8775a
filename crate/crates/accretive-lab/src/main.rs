fn main() {
    accretive_lab::cli::run();
}
