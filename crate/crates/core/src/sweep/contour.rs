//! Marching-squares iso-lines on a 2D sweep table.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::SweepTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContourScale {
    /// Contour log₁₀ of the data, matching logarithmic color maps.
    #[default]
    Log10,
    Linear,
}

/// Ordered points in axis coordinates `[axis1, axis2]`. A closed line
/// repeats its first point at the end.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<[f64; 2]>,
    pub closed: bool,
}

/// Grid edge: the segment from node (i, j) to (i+1, j) if horizontal,
/// otherwise to (i, j+1).
type Edge = (usize, usize, bool);

/// Contour lines of `z` (row-major, `nx × ny`) at `level` over the grid
/// spanned by `xs` and `ys`.
pub fn contour_grid(xs: &[f64], ys: &[f64], z: &[f64], level: f64, scale: ContourScale) -> Vec<Polyline> {
    let (nx, ny) = (xs.len(), ys.len());
    assert_eq!(z.len(), nx * ny, "grid size mismatch");
    let shift = |v: f64| match scale {
        ContourScale::Linear => v - level,
        ContourScale::Log10 => {
            if v > 0.0 && level > 0.0 {
                v.log10() - level.log10()
            } else {
                f64::NAN
            }
        }
    };
    let f: Vec<f64> = z.iter().map(|&v| shift(v)).collect();
    let at = |i: usize, j: usize| f[i * ny + j];

    let crossing = |(i, j, horizontal): Edge| -> [f64; 2] {
        let (i1, j1) = if horizontal { (i + 1, j) } else { (i, j + 1) };
        let (f0, f1) = (at(i, j), at(i1, j1));
        let t = f0 / (f0 - f1);
        [xs[i] + t * (xs[i1] - xs[i]), ys[j] + t * (ys[j1] - ys[j])]
    };

    let mut segments: Vec<(Edge, Edge)> = Vec::new();
    for i in 0..nx.saturating_sub(1) {
        for j in 0..ny.saturating_sub(1) {
            let c = [at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)];
            if c.iter().any(|v| !v.is_finite()) {
                continue;
            }
            let high = c.map(|v| v >= 0.0);
            // perimeter edges: bottom, right, top, left
            let edges: [Edge; 4] = [(i, j, true), (i + 1, j, false), (i, j + 1, true), (i, j, false)];
            let cut: Vec<usize> = (0..4).filter(|&k| high[k] != high[(k + 1) % 4]).collect();
            match cut.len() {
                2 => segments.push((edges[cut[0]], edges[cut[1]])),
                4 => {
                    let centre = c.iter().sum::<f64>() / 4.0 >= 0.0;
                    if centre == high[0] {
                        segments.push((edges[0], edges[1]));
                        segments.push((edges[2], edges[3]));
                    } else {
                        segments.push((edges[3], edges[0]));
                        segments.push((edges[1], edges[2]));
                    }
                }
                _ => {}
            }
        }
    }
    chain(&segments).into_iter().map(|(edges, closed)| Polyline { points: edges.into_iter().map(crossing).collect(), closed }).collect()
}

/// Join segments sharing an edge into maximal chains; open chains first.
fn chain(segments: &[(Edge, Edge)]) -> Vec<(Vec<Edge>, bool)> {
    let mut adjacent: BTreeMap<Edge, Vec<usize>> = BTreeMap::new();
    for (k, (a, b)) in segments.iter().enumerate() {
        adjacent.entry(*a).or_default().push(k);
        adjacent.entry(*b).or_default().push(k);
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();

    let walk = |start: Edge, used: &mut Vec<bool>| -> Option<(Vec<Edge>, bool)> {
        let mut line = vec![start];
        let mut cur = start;
        loop {
            let next = adjacent[&cur].iter().copied().find(|&k| !used[k]);
            let Some(k) = next else { break };
            used[k] = true;
            let (a, b) = segments[k];
            cur = if a == cur { b } else { a };
            line.push(cur);
        }
        if line.len() < 2 {
            return None;
        }
        let closed = line.len() > 2 && line.first() == line.last();
        Some((line, closed))
    };

    let ends: Vec<Edge> = adjacent.iter().filter(|(_, s)| s.len() == 1).map(|(e, _)| *e).collect();
    for e in ends {
        if let Some(line) = walk(e, &mut used) {
            out.push(line);
        }
    }
    let starts: Vec<Edge> = adjacent.keys().copied().collect();
    for e in starts {
        if let Some(line) = walk(e, &mut used) {
            out.push(line);
        }
    }
    out
}

/// Iso-lines of a 2D sweep column at `level`; empty if the level is outside
/// the data range.
pub fn extract_contour(table: &SweepTable, observable: &str, level: f64, scale: ContourScale) -> Result<Vec<Polyline>> {
    let Some(a2) = table.spec.axis2 else {
        return Err(Error::Unsupported("contour extraction needs a 2D sweep".into()));
    };
    let z = table.column(observable)?;
    Ok(contour_grid(&table.spec.axis1.values(), &a2.values(), &z, level, scale))
}
