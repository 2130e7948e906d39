//! Zero-level contours of 2-D fields by marching squares.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::grid::LevelSetField;

pub type Segment = [[f64; 2]; 2];

/// Edge key: the lower node index and the axis of the edge.
type EdgeKey = (usize, u8);

fn crossing(a: f64, b: f64) -> f64 {
    if a == b {
        0.5
    } else {
        (a / (a - b)).clamp(0.0, 1.0)
    }
}

/// Raw marching-squares segments of `{V = 0}`, with each endpoint tagged by
/// the cell edge it lies on.
fn raw_segments(field: &LevelSetField) -> Result<Vec<(EdgeKey, EdgeKey, Segment)>> {
    let g = field.grid();
    if g.ndim() != 2 {
        return Err(Error::input("contours need a 2-D field"));
    }
    let (nx, ny) = (g.counts()[0], g.counts()[1]);
    let v = field.values();
    let inside = |x: f64| x <= 0.0;
    let idx = |i: usize, j: usize| i * ny + j;
    let mut out = Vec::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            // corners counter-clockwise: (i,j) (i+1,j) (i+1,j+1) (i,j+1)
            let c = [idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1)];
            let val = [v[c[0]], v[c[1]], v[c[2]], v[c[3]]];
            let mut case = 0u8;
            for (k, x) in val.iter().enumerate() {
                if inside(*x) {
                    case |= 1 << k;
                }
            }
            if case == 0 || case == 15 {
                continue;
            }
            let (x0, x1) = (g.coord(0, i), g.coord(0, i + 1));
            let (y0, y1) = (g.coord(1, j), g.coord(1, j + 1));
            // edges: 0 bottom (c0-c1), 1 right (c1-c2), 2 top (c3-c2), 3 left (c0-c3)
            let point = |e: usize| -> (EdgeKey, [f64; 2]) {
                match e {
                    0 => ((c[0], 0), [x0 + crossing(val[0], val[1]) * (x1 - x0), y0]),
                    1 => ((c[1], 1), [x1, y0 + crossing(val[1], val[2]) * (y1 - y0)]),
                    2 => ((c[3], 0), [x0 + crossing(val[3], val[2]) * (x1 - x0), y1]),
                    _ => ((c[0], 1), [x0, y0 + crossing(val[0], val[3]) * (y1 - y0)]),
                }
            };
            let center_inside = inside(0.25 * val.iter().sum::<f64>());
            let pairs: &[(usize, usize)] = match case {
                1 | 14 => &[(3, 0)],
                2 | 13 => &[(0, 1)],
                3 | 12 => &[(3, 1)],
                4 | 11 => &[(1, 2)],
                6 | 9 => &[(0, 2)],
                7 | 8 => &[(3, 2)],
                5 => {
                    if center_inside {
                        &[(3, 2), (0, 1)]
                    } else {
                        &[(3, 0), (1, 2)]
                    }
                }
                10 => {
                    if center_inside {
                        &[(3, 0), (1, 2)]
                    } else {
                        &[(0, 1), (3, 2)]
                    }
                }
                _ => unreachable!(),
            };
            for &(a, b) in pairs {
                let (ka, pa) = point(a);
                let (kb, pb) = point(b);
                out.push((ka, kb, [pa, pb]));
            }
        }
    }
    Ok(out)
}

/// All contour segments of the zero level set.
pub fn zero_segments(field: &LevelSetField) -> Result<Vec<Segment>> {
    Ok(raw_segments(field)?.into_iter().map(|(_, _, s)| s).collect())
}

/// Contour segments chained into polylines; closed loops repeat their first point.
pub fn zero_contours(field: &LevelSetField) -> Result<Vec<Vec<[f64; 2]>>> {
    let segs = raw_segments(field)?;
    let mut by_edge: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (k, (a, b, _)) in segs.iter().enumerate() {
        by_edge.entry(*a).or_default().push(k);
        by_edge.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segs.len()];
    let mut lines = Vec::new();
    let next_of = |edge: &EdgeKey, used: &[bool]| -> Option<usize> {
        by_edge.get(edge)?.iter().copied().find(|&s| !used[s])
    };
    // open chains start at edges touched once; then the remaining loops
    let mut starts: Vec<usize> = segs
        .iter()
        .enumerate()
        .filter(|(_, (a, b, _))| by_edge[a].len() == 1 || by_edge[b].len() == 1)
        .map(|(k, _)| k)
        .collect();
    starts.extend(0..segs.len());
    for s in starts {
        if used[s] {
            continue;
        }
        used[s] = true;
        let (a, b, [pa, pb]) = segs[s];
        let (mut tail, mut line) = if by_edge[&b].len() == 1 && by_edge[&a].len() != 1 {
            (a, vec![pb, pa])
        } else {
            (b, vec![pa, pb])
        };
        while let Some(n) = next_of(&tail, &used) {
            used[n] = true;
            let (na, nb, [qa, qb]) = segs[n];
            if na == tail {
                line.push(qb);
                tail = nb;
            } else {
                line.push(qa);
                tail = na;
            }
        }
        lines.push(line);
    }
    Ok(lines)
}

fn point_segment_distance(p: [f64; 2], s: &Segment) -> f64 {
    let [a, b] = *s;
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * d[0]).hypot(p[1] - a[1] - t * d[1])
}

/// Symmetric Hausdorff distance between the zero contour of `field` and a circle.
/// `None` if the contour is empty.
pub fn hausdorff_to_circle(field: &LevelSetField, center: [f64; 2], radius: f64) -> Result<Option<f64>> {
    let segs = zero_segments(field)?;
    if segs.is_empty() {
        return Ok(None);
    }
    let mut h = 0.0f64;
    for s in &segs {
        for p in s {
            h = h.max(((p[0] - center[0]).hypot(p[1] - center[1]) - radius).abs());
        }
    }
    let n = 720;
    for k in 0..n {
        let t = std::f64::consts::TAU * k as f64 / n as f64;
        let p = [center[0] + radius * t.cos(), center[1] + radius * t.sin()];
        let d = segs.iter().map(|s| point_segment_distance(p, s)).fold(f64::INFINITY, f64::min);
        h = h.max(d);
    }
    Ok(Some(h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{make_ball_field, Grid};

    #[test]
    fn ball_contour_is_one_closed_loop() {
        let g = Grid::square(-1.0, 1.0, 41).unwrap();
        let f = make_ball_field(&g, &[0.1, 0.0], 0.5).unwrap();
        let lines = zero_contours(&f).unwrap();
        assert_eq!(lines.len(), 1);
        let l = &lines[0];
        assert_eq!(l.first(), l.last());
        for p in l {
            assert!(((p[0] - 0.1).hypot(p[1]) - 0.5).abs() < 0.01);
        }
        let h = hausdorff_to_circle(&f, [0.1, 0.0], 0.5).unwrap().unwrap();
        assert!(h < 0.01);
    }

    #[test]
    fn empty_and_full_fields_have_no_contour() {
        let g = Grid::square(-1.0, 1.0, 5).unwrap();
        let f = LevelSetField::new(g.clone(), vec![1.0; 25], 0.0).unwrap();
        assert!(zero_segments(&f).unwrap().is_empty());
        let f = LevelSetField::new(g, vec![-1.0; 25], 0.0).unwrap();
        assert!(zero_contours(&f).unwrap().is_empty());
        assert!(hausdorff_to_circle(&f, [0.0, 0.0], 1.0).unwrap().is_none());
    }

    #[test]
    fn set_touching_the_boundary_gives_open_chain() {
        let g = Grid::square(-1.0, 1.0, 21).unwrap();
        let f = LevelSetField::from_fn(g, 0.0, |p| p[0] - 0.33).unwrap();
        let lines = zero_contours(&f).unwrap();
        assert_eq!(lines.len(), 1);
        assert_eq!(lines[0].len(), 21);
        assert!(lines[0].iter().all(|p| (p[0] - 0.33).abs() < 1e-12));
    }
}
