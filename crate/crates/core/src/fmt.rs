/// Formats a float with nine significant digits in plain decimal notation.
///
/// Exported edge weights are pinned to this representation so that repeated
/// runs produce byte-identical files.
pub fn fmt_sig9(x: f64) -> String {
    format_sig(x, 9)
}

pub(crate) fn format_sig(x: f64, sig: i32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (sig - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}
