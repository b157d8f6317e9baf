fn main() {
    // CLI wiring lands once the experiment layer exists.
}
