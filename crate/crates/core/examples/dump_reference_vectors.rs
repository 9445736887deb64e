//! Prints the fixed test vectors used by the normality-test reference
//! checks, one CSV line per vector: `label,v0,v1,...`. Re-run this and feed
//! the output to an external statistics package to regenerate the frozen
//! (W, p) pairs in `tests/shapiro_reference.rs`.

fn main() {
    for (label, values) in sbnn_core::shapiro::reference_vectors() {
        let joined: Vec<String> = values.iter().map(|v| format!("{v:.17e}")).collect();
        println!("{label},{}", joined.join(","));
    }
}
