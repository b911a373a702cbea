fn main() {
    // Placeholder until the pipeline module lands; replaced by the real CLI.
    eprintln!("speedplan CLI not yet wired");
    std::process::exit(2);
}
