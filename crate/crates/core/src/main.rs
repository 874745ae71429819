fn main() {
    std::process::exit(lattice_spectra::cli::main());
}
