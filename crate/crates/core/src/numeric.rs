//! Small numerical helpers shared across modules.

use std::ops::Add;

const PAIRWISE_BLOCK: usize = 8;

/// Pairwise (cascade) summation with a fixed split rule.
///
/// The reduction tree depends only on the slice length, so the result is
/// bit-identical for a given input regardless of how callers are scheduled.
pub fn pairwise_sum<T>(values: &[T]) -> T
where
    T: Copy + Add<Output = T> + Default,
{
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().fold(T::default(), |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Pairwise sum of `f(i)` for `i in 0..n`, without materializing a buffer
/// larger than one leaf block.
pub fn pairwise_sum_by<T, F>(n: usize, f: &F) -> T
where
    T: Copy + Add<Output = T> + Default,
    F: Fn(usize) -> T,
{
    fn rec<T, F>(lo: usize, hi: usize, f: &F) -> T
    where
        T: Copy + Add<Output = T> + Default,
        F: Fn(usize) -> T,
    {
        if hi - lo <= PAIRWISE_BLOCK {
            return (lo..hi).fold(T::default(), |acc, i| acc + f(i));
        }
        let mid = lo + (hi - lo) / 2;
        rec(lo, mid, f) + rec(mid, hi, f)
    }
    rec(0, n, f)
}

/// Formats a float with `digits` significant digits, `%g` style.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".to_string();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        format!("{mantissa}e{exp}")
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
