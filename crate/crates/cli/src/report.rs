//! Deterministic report rendering.
//!
//! Every number is printed with six significant digits; reports contain no
//! timestamps unless requested, so identical inputs yield byte-identical
//! output.

use trussopt_core::instance::Instance;

pub const SCHEMA_VERSION: u32 = 1;

/// Six-significant-digit rendering, fixed-point where reasonable and
/// scientific for extreme magnitudes.
pub fn sig6(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0.00000".into();
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..=6).contains(&mag) {
        return format!("{v:.5e}");
    }
    let decimals = (5 - mag).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Shared report header: mode, instance digest and dimensions.
pub fn header(mode: &str, label: &str, instance: &Instance) -> String {
    let mut out = String::new();
    out.push_str(&format!("schema_version: {SCHEMA_VERSION}\n"));
    out.push_str(&format!("mode: {mode}\n"));
    out.push_str(&format!("instance: {label}\n"));
    out.push_str(&format!("digest: {}\n", instance.digest()));
    out.push_str(&format!(
        "members: {}, nodes: {}\n",
        instance.members.len(),
        instance.nodes.len()
    ));
    out
}

pub fn scenario_list(scenarios: &[trussopt_core::DamageScenario]) -> String {
    scenarios
        .iter()
        .map(|s| {
            let ids = s
                .damaged()
                .iter()
                .map(|i| i.to_string())
                .collect::<Vec<_>>()
                .join(" ");
            format!("[{ids}]")
        })
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::sig6;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(14.49787), "14.4979");
        assert_eq!(sig6(6.718668), "6.71867");
        assert_eq!(sig6(26430000.0), "2.64300e7");
        assert_eq!(sig6(0.0), "0.00000");
        assert_eq!(sig6(-3.047379), "-3.04738");
        assert_eq!(sig6(f64::NEG_INFINITY), "-inf");
        assert_eq!(sig6(1234.5678), "1234.57");
    }
}
