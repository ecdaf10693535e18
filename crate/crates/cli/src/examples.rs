//! Configurations bundled with the binary, all for qubit Q1.

pub const EXAMPLES: &[(&str, &str)] = &[
    (
        "q1_single_tone_scan",
        include_str!("../configs/q1_single_tone_scan.toml"),
    ),
    ("q1_two_tone_scan", include_str!("../configs/q1_two_tone_scan.toml")),
    ("q1_time_trace", include_str!("../configs/q1_time_trace.toml")),
    ("q1_two_tone_trace", include_str!("../configs/q1_two_tone_trace.toml")),
    ("q1_repeated_reset", include_str!("../configs/q1_repeated_reset.toml")),
    (
        "q1_rethermalization",
        include_str!("../configs/q1_rethermalization.toml"),
    ),
];

pub fn example(name: &str) -> Option<&'static str> {
    EXAMPLES.iter().find(|(n, _)| *n == name).map(|(_, text)| *text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn every_example_validates() {
        for (name, text) in EXAMPLES {
            let config = parse_config(text, name).unwrap_or_else(|e| panic!("{name}: {e}"));
            config.job().unwrap_or_else(|e| panic!("{name}: {e}"));
            assert_eq!(&config.output.stem, name);
        }
    }
}
