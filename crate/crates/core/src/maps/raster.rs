use super::{DenormMap, TriangleRegion};
use crate::geometry::Pixel;

/// Twice the signed area; positive when `a, b, c` run clockwise on screen
/// (image y points down).
fn orient(a: Pixel, b: Pixel, p: Pixel) -> f64 {
    (b.u - a.u) * (p.v - a.v) - (b.v - a.v) * (p.u - a.u)
}

/// Top-left rule for edge `a -> b` of a triangle with positive orientation:
/// a top edge is horizontal with the interior below it, a left edge runs
/// upward on screen.
pub fn is_top_left(a: Pixel, b: Pixel) -> bool {
    let dy = b.v - a.v;
    let dx = b.u - a.u;
    (dy == 0.0 && dx > 0.0) || dy < 0.0
}

/// Calls `f(row, col)` for every pixel whose centre lies strictly inside the
/// triangle or on one of its top/left edges. Zero-area and non-finite
/// triangles cover nothing.
pub fn for_each_covered_pixel(tri: [Pixel; 3], height: usize, width: usize, mut f: impl FnMut(usize, usize)) {
    let [a, mut b, mut c] = tri;
    if !tri.iter().all(|p| p.u.is_finite() && p.v.is_finite()) || height == 0 || width == 0 {
        return;
    }
    let area = orient(a, b, c);
    if area == 0.0 {
        return;
    }
    if area < 0.0 {
        std::mem::swap(&mut b, &mut c);
    }
    let edges = [(a, b), (b, c), (c, a)];
    let bias = edges.map(|(p, q)| is_top_left(p, q));

    let min_u = a.u.min(b.u).min(c.u);
    let max_u = a.u.max(b.u).max(c.u);
    let min_v = a.v.min(b.v).min(c.v);
    let max_v = a.v.max(b.v).max(c.v);
    // pixel centre col + 0.5 in [min_u, max_u]
    let col_lo = (min_u - 0.5).ceil().max(0.0);
    let col_hi = (max_u - 0.5).floor().min(width as f64 - 1.0);
    let row_lo = (min_v - 0.5).ceil().max(0.0);
    let row_hi = (max_v - 0.5).floor().min(height as f64 - 1.0);
    if col_lo > col_hi || row_lo > row_hi {
        return;
    }
    let (col_lo, col_hi, row_lo, row_hi) = (col_lo as usize, col_hi as usize, row_lo as usize, row_hi as usize);

    for row in row_lo..=row_hi {
        for col in col_lo..=col_hi {
            let p = Pixel::new(col as f64 + 0.5, row as f64 + 0.5);
            let inside = edges.iter().zip(bias).all(|(&(s, e), tl)| {
                let w = orient(s, e, p);
                w > 0.0 || (w == 0.0 && tl)
            });
            if inside {
                f(row, col);
            }
        }
    }
}

pub fn covered_pixels(tri: [Pixel; 3], height: usize, width: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for_each_covered_pixel(tri, height, width, |r, c| out.push((r, c)));
    out
}

/// Writes the triangle's plane into every covered pixel of `map`. Returns the
/// number of pixels written.
pub fn rasterize_triangle(map: &mut DenormMap, tri: &TriangleRegion) -> usize {
    let plane = tri.plane;
    let (h, w) = (map.height(), map.width());
    let mut n = 0;
    for_each_covered_pixel(tri.vertices, h, w, |r, c| {
        map.set(r, c, &plane);
        n += 1;
    });
    n
}
