//! Row-major dense helpers over flat slices.

/// `out += W x` for `W` of shape `rows x cols`.
pub(crate) fn matvec_acc(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        let row = &w[r * cols..(r + 1) * cols];
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

/// `out += W^T y` for `W` of shape `rows x cols`.
pub(crate) fn matvec_t_acc(w: &[f64], rows: usize, cols: usize, y: &[f64], out: &mut [f64]) {
    for (r, yr) in y.iter().enumerate().take(rows) {
        if *yr == 0.0 {
            continue;
        }
        let row = &w[r * cols..(r + 1) * cols];
        for (o, a) in out.iter_mut().zip(row) {
            *o += a * yr;
        }
    }
}

/// `G += y x^T`.
pub(crate) fn outer_acc(y: &[f64], x: &[f64], g: &mut [f64]) {
    let cols = x.len();
    for (r, yr) in y.iter().enumerate() {
        if *yr == 0.0 {
            continue;
        }
        for (gv, xv) in g[r * cols..(r + 1) * cols].iter_mut().zip(x) {
            *gv += yr * xv;
        }
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Splits `buf` into consecutive mutable pieces of the given sizes.
pub(crate) fn split_mut<'a>(mut buf: &'a mut [f64], sizes: &[usize]) -> Vec<&'a mut [f64]> {
    let mut out = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let (head, tail) = std::mem::take(&mut buf).split_at_mut(s);
        out.push(head);
        buf = tail;
    }
    out
}

pub(crate) fn split<'a>(mut buf: &'a [f64], sizes: &[usize]) -> Vec<&'a [f64]> {
    let mut out = Vec::with_capacity(sizes.len());
    for &s in sizes {
        let (head, tail) = buf.split_at(s);
        out.push(head);
        buf = tail;
    }
    out
}
