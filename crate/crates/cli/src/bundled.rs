//! Scenarios shipped with the binary, addressable by name.

pub const NAMES: &[&str] = &["section2_example", "example1", "example2", "identity"];

pub fn get(name: &str) -> Option<&'static str> {
    Some(match name {
        "section2_example" => include_str!("../scenarios/section2_example.json"),
        "example1" => include_str!("../scenarios/example1.json"),
        "example2" => include_str!("../scenarios/example2.json"),
        "identity" => include_str!("../scenarios/identity.json"),
        _ => return None,
    })
}
