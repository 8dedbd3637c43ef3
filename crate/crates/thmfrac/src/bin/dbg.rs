fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    let r = match which.as_str() {
        "conduction" => thmfrac::verify::conduction_benchmark(),
        "terzaghi" => thmfrac::verify::terzaghi_benchmark(),
        "kkt" => thmfrac::verify::kkt_suite(),
        "conservation" => thmfrac::verify::conservation_audit(),
        _ => panic!("unknown suite"),
    };
    println!("{}", r.line());
}
