//! Float formatting shared by every text output.
//!
//! Values print as the shortest string that parses back to the same `f64`,
//! so files written twice from the same numbers are byte-identical.

#[must_use]
pub fn float(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else if x.is_finite() {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}
