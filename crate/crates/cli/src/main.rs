fn main() {
    // placeholder until the engine surface lands
}
