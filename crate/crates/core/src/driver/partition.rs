use std::ops::Range;

/// Splits `rows` into `threads` contiguous blocks whose sizes differ by at
/// most one, larger blocks first. Never returns empty blocks.
pub fn partition_domain(rows: usize, threads: usize) -> Vec<Range<usize>> {
    let parts = threads.max(1).min(rows.max(1));
    let base = rows / parts;
    let extra = rows % parts;
    let mut out = Vec::with_capacity(parts);
    let mut start = 0;
    for b in 0..parts {
        let len = base + usize::from(b < extra);
        out.push(start..start + len);
        start += len;
    }
    out
}
