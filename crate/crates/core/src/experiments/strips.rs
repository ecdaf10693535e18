//! Reset-strip detection on amplitude × frequency scans: threshold, label
//! 8-connected components, link fragments along each strip, trace the center
//! per amplitude row and extrapolate it to zero amplitude.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scan::ScanGrid;
use super::setup::AxisUnit;
use crate::error::{Error, Result};

pub const DEFAULT_STRIP_THRESHOLD: f64 = 0.5;

/// Detection settings. Strips narrower than the frequency step break into
/// fragments along their curve; fragments are linked when one starts within
/// `max_gap_rows` amplitude rows after another ends and within `link_cells`
/// frequency cells of where that one was heading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StripOptions {
    pub threshold: f64,
    pub max_gap_rows: usize,
    pub link_cells: f64,
    /// Linked strips with fewer amplitude rows are dropped as unresolved.
    pub min_rows: usize,
}

impl Default for StripOptions {
    fn default() -> Self {
        StripOptions {
            threshold: DEFAULT_STRIP_THRESHOLD,
            max_gap_rows: 6,
            link_cells: 3.0,
            min_rows: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripRow {
    pub amplitude: f64,
    /// Frequency of the population minimum, interpolated between cells (rad/s).
    pub center: f64,
    pub min_population: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strip {
    pub cells: usize,
    /// Connected components linked into this strip.
    pub fragments: usize,
    /// One entry per amplitude row, in increasing amplitude.
    pub rows: Vec<StripRow>,
    /// Center extrapolated to zero amplitude with a polynomial in A² (rad/s).
    pub small_amplitude_center: f64,
}

/// Strip matched to a resonance condition ω_m = −Δ/(αn).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderMatch {
    pub n: i64,
    pub expected: f64,
    pub relative_error: f64,
}

impl Strip {
    pub fn match_order(&self, delta: f64, alpha: usize, max_n: i64) -> Option<OrderMatch> {
        (1..=max_n)
            .map(|n| {
                let expected = -delta / (alpha as f64 * n as f64);
                let relative_error = (self.small_amplitude_center - expected).abs() / expected;
                OrderMatch {
                    n,
                    expected,
                    relative_error,
                }
            })
            .min_by(|a, b| a.relative_error.total_cmp(&b.relative_error))
    }
}

/// One connected component: (amplitude row index, row summary) pairs.
struct Fragment {
    cells: usize,
    pieces: usize,
    rows: Vec<(usize, StripRow)>,
}

impl Fragment {
    fn first(&self) -> usize {
        self.rows[0].0
    }

    fn last(&self) -> usize {
        self.rows[self.rows.len() - 1].0
    }

    /// Center expected at `amplitude` from a line through the last rows.
    fn heading(&self, amplitude: f64) -> f64 {
        let tail = &self.rows[self.rows.len().saturating_sub(3)..];
        if tail.len() < 2 {
            return tail[0].1.center;
        }
        let n = tail.len() as f64;
        let ma = tail.iter().map(|r| r.1.amplitude).sum::<f64>() / n;
        let mc = tail.iter().map(|r| r.1.center).sum::<f64>() / n;
        let saa: f64 = tail.iter().map(|r| (r.1.amplitude - ma).powi(2)).sum();
        let sac: f64 = tail.iter().map(|r| (r.1.amplitude - ma) * (r.1.center - mc)).sum();
        mc + sac / saa * (amplitude - ma)
    }
}

/// Strips in the population of `level` on a scan whose axes are one
/// amplitude (Φ₀) and one frequency (MHz) axis: cells below the threshold
/// are labelled into 8-connected components, which are then linked along
/// their curves.
pub fn detect_strips(grid: &ScanGrid, level: usize, options: &StripOptions) -> Result<Vec<Strip>> {
    let amp_on_y = match (grid.x.unit, grid.y.unit) {
        (AxisUnit::Megahertz, AxisUnit::FluxQuantum) => true,
        (AxisUnit::FluxQuantum, AxisUnit::Megahertz) => false,
        _ => {
            return Err(Error::config(
                "strip detection needs one amplitude and one frequency axis",
            ))
        }
    };
    let (nx, ny) = (grid.x.len(), grid.y.len());
    // Work in (amplitude index, frequency index).
    let (na, nf) = if amp_on_y { (ny, nx) } else { (nx, ny) };
    let value = |ia: usize, jf: usize| {
        let (ix, iy) = if amp_on_y { (jf, ia) } else { (ia, jf) };
        grid.cell(ix, iy).population(level).unwrap_or(f64::NAN)
    };
    let amp_axis = if amp_on_y { &grid.y.values } else { &grid.x.values };
    let freq_axis = if amp_on_y { &grid.x.values } else { &grid.y.values };

    let below = |ia: usize, jf: usize| value(ia, jf) < options.threshold;
    let mut label = vec![usize::MAX; na * nf];
    let mut fragments = Vec::new();
    for start in 0..na * nf {
        let (a0, f0) = (start / nf, start % nf);
        if label[start] != usize::MAX || !below(a0, f0) {
            continue;
        }
        let id = fragments.len();
        let mut members = Vec::new();
        let mut queue = VecDeque::from([start]);
        label[start] = id;
        while let Some(k) = queue.pop_front() {
            members.push(k);
            let (a, f) = ((k / nf) as isize, (k % nf) as isize);
            for da in -1..=1 {
                for df in -1..=1 {
                    let (ta, tf) = (a + da, f + df);
                    if ta < 0 || tf < 0 || ta >= na as isize || tf >= nf as isize {
                        continue;
                    }
                    let t = ta as usize * nf + tf as usize;
                    if label[t] == usize::MAX && below(ta as usize, tf as usize) {
                        label[t] = id;
                        queue.push_back(t);
                    }
                }
            }
        }
        fragments.push(summarize(&members, nf, amp_axis, freq_axis, &value));
    }

    let step = if nf > 1 {
        (freq_axis[nf - 1] - freq_axis[0]) / (nf - 1) as f64
    } else {
        1.0
    };
    let mut strips: Vec<Strip> = link(fragments, options, step)
        .into_iter()
        .filter(|f| f.rows.len() >= options.min_rows)
        .map(|f| {
            let rows: Vec<StripRow> = f.rows.into_iter().map(|(_, r)| r).collect();
            Strip {
                cells: f.cells,
                fragments: f.pieces,
                small_amplitude_center: extrapolate(&rows),
                rows,
            }
        })
        .collect();
    strips.sort_by(|a, b| a.small_amplitude_center.total_cmp(&b.small_amplitude_center));
    Ok(strips)
}

fn link(mut fragments: Vec<Fragment>, options: &StripOptions, step: f64) -> Vec<Fragment> {
    fragments.sort_by(|a, b| {
        a.first()
            .cmp(&b.first())
            .then(a.rows[0].1.center.total_cmp(&b.rows[0].1.center))
    });
    let mut chains: Vec<Fragment> = Vec::new();
    for frag in fragments {
        let head = &frag.rows[0].1;
        let best = chains
            .iter()
            .enumerate()
            .filter(|(_, c)| c.last() < frag.first() && frag.first() - c.last() <= options.max_gap_rows + 1)
            .map(|(i, c)| (i, (c.heading(head.amplitude) - head.center).abs() / step))
            .filter(|&(_, d)| d <= options.link_cells)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((i, _)) => {
                let chain = &mut chains[i];
                chain.cells += frag.cells;
                chain.pieces += frag.pieces;
                chain.rows.extend(frag.rows);
            }
            None => chains.push(frag),
        }
    }
    chains
}

fn summarize(
    members: &[usize],
    nf: usize,
    amp_axis: &[f64],
    freq_axis: &[f64],
    value: &dyn Fn(usize, usize) -> f64,
) -> Fragment {
    let mut by_row: Vec<Vec<usize>> = vec![Vec::new(); amp_axis.len()];
    for &k in members {
        by_row[k / nf].push(k % nf);
    }
    let rows = by_row
        .iter()
        .enumerate()
        .filter(|(_, cols)| !cols.is_empty())
        .map(|(ia, cols)| {
            let jmin = *cols
                .iter()
                .min_by(|&&a, &&b| value(ia, a).total_cmp(&value(ia, b)))
                .unwrap();
            let row = StripRow {
                amplitude: amp_axis[ia],
                center: refine_minimum(ia, jmin, freq_axis, value),
                min_population: value(ia, jmin),
            };
            (ia, row)
        })
        .collect();
    Fragment {
        cells: members.len(),
        pieces: 1,
        rows,
    }
}

/// Vertex of the parabola through the minimum cell and its two neighbours.
fn refine_minimum(ia: usize, j: usize, freq: &[f64], value: &dyn Fn(usize, usize) -> f64) -> f64 {
    if j == 0 || j + 1 >= freq.len() {
        return freq[j];
    }
    let (x0, x1, x2) = (freq[j - 1], freq[j], freq[j + 1]);
    let (y0, y1, y2) = (value(ia, j - 1), value(ia, j), value(ia, j + 1));
    if !(y0.is_finite() && y2.is_finite()) {
        return x1;
    }
    let num = (x1 - x0).powi(2) * (y1 - y2) - (x1 - x2).powi(2) * (y1 - y0);
    let den = (x1 - x0) * (y1 - y2) - (x1 - x2) * (y1 - y0);
    if den == 0.0 {
        return x1;
    }
    (x1 - 0.5 * num / den).clamp(x0, x2)
}

/// Least-squares c₀ + c₁A² (+ c₂A⁴ with six or more rows), evaluated at A = 0.
fn extrapolate(rows: &[StripRow]) -> f64 {
    let used: Vec<&StripRow> = rows.iter().filter(|r| r.amplitude > 0.0).collect();
    let degree = match used.len() {
        0 => return rows[0].center,
        1 => return used[0].center,
        2..=5 => 1,
        _ => 2,
    };
    // Scale A² to order one for conditioning.
    let scale = used.iter().map(|r| r.amplitude * r.amplitude).fold(0.0, f64::max);
    let design = DMatrix::from_fn(used.len(), degree + 1, |i, k| {
        (used[i].amplitude.powi(2) / scale).powi(k as i32)
    });
    let rhs = DVector::from_iterator(used.len(), used.iter().map(|r| r.center));
    match design.svd(true, true).solve(&rhs, 1e-12) {
        Ok(c) => c[0],
        Err(_) => used[0].center,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::DeviceSpec;
    use crate::drive::OutputFilter;
    use crate::engine::HilbertConfig;
    use crate::experiments::scan::{Cell, ScanMetadata};
    use crate::experiments::setup::{Axis, DriveTemplate, InitialState, RunSetup};
    use crate::units::{mhz, to_mhz};

    /// Synthetic grid with Lorentzian dips along ω(A) = ω₀ + c·A².
    fn synthetic(centers: &[(f64, f64)]) -> ScanGrid {
        synthetic_with_width(centers, mhz(6.0))
    }

    fn synthetic_with_width(centers: &[(f64, f64)], width: f64) -> ScanGrid {
        let x = Axis::linear("omega_m", AxisUnit::Megahertz, mhz(100.0), mhz(400.0), 61);
        let y = Axis::linear("amplitude", AxisUnit::FluxQuantum, 0.0, 0.3, 31);
        let mut cells = Vec::new();
        for (iy, &a) in y.values.iter().enumerate() {
            for (ix, &w) in x.values.iter().enumerate() {
                let mut p = 1.0;
                if a > 0.04 {
                    for &(w0, c) in centers {
                        let d = (w - (w0 + c * a * a)) / width;
                        p *= 1.0 - 0.9 / (1.0 + d * d);
                    }
                }
                cells.push(Cell {
                    ix,
                    iy,
                    ok: true,
                    populations: vec![1.0 - p, p],
                    photons: 0.0,
                    error: None,
                    invariants: None,
                });
            }
        }
        let setup = RunSetup::new(DeviceSpec::q1(), HilbertConfig::default(), InitialState::Level(1));
        let drive = DriveTemplate {
            park_flux: 0.0,
            tones: Vec::new(),
            duration: 1e-6,
            filter: OutputFilter::none(),
        };
        ScanGrid {
            x,
            y,
            cells,
            metadata: ScanMetadata {
                setup,
                drive,
                duration: 1e-6,
                version: String::new(),
            },
        }
    }

    #[test]
    fn finds_and_extrapolates_bent_strips() {
        let truth = [
            (mhz(110.0), mhz(400.0)),
            (mhz(165.0), mhz(600.0)),
            (mhz(330.0), mhz(900.0)),
        ];
        let grid = synthetic(&truth);
        let strips = detect_strips(&grid, 1, &StripOptions::default()).unwrap();
        assert_eq!(strips.len(), 3);
        for (s, (w0, _)) in strips.iter().zip(truth) {
            assert!(
                (s.small_amplitude_center - w0).abs() < 0.01 * w0,
                "{} vs {}",
                to_mhz(s.small_amplitude_center),
                to_mhz(w0)
            );
        }
        let m = strips[2].match_order(mhz(-660.0), 2, 3).unwrap();
        assert_eq!(m.n, 1);
        assert!(m.relative_error < 0.01);
    }

    #[test]
    fn flat_grid_has_no_strips() {
        let grid = synthetic(&[]);
        assert!(detect_strips(&grid, 1, &StripOptions::default()).unwrap().is_empty());
        let mut bad = grid.clone();
        bad.y.unit = AxisUnit::Megahertz;
        assert!(detect_strips(&bad, 1, &StripOptions::default()).is_err());
    }

    #[test]
    fn parabolic_refinement_is_exact_for_parabolas() {
        let f: Vec<f64> = (0..5).map(|i| i as f64).collect();
        let v = |_: usize, j: usize| (j as f64 - 2.3).powi(2);
        assert!((refine_minimum(0, 2, &f, &v) - 2.3).abs() < 1e-12);
    }

    #[test]
    fn narrow_strips_are_linked_across_fragments() {
        // A 2 MHz wide strip on a 5 MHz grid whose curve crosses several cells per row.
        let truth = [(mhz(150.0), mhz(2000.0))];
        let grid = synthetic_with_width(&truth, mhz(2.0));
        let strips = detect_strips(&grid, 1, &StripOptions::default()).unwrap();
        assert_eq!(strips.len(), 1);
        assert!(strips[0].fragments > 1);
        assert!((strips[0].small_amplitude_center - truth[0].0).abs() < 0.02 * truth[0].0);
        let strict = StripOptions {
            link_cells: 0.0,
            ..StripOptions::default()
        };
        let pieces = detect_strips(&grid, 1, &strict).unwrap();
        assert!(pieces.iter().all(|s| s.fragments == 1));
    }

    #[test]
    fn extrapolation_recovers_quartic_bend() {
        let rows: Vec<StripRow> = (1..=12)
            .map(|i| {
                let a = 0.02 * i as f64;
                StripRow {
                    amplitude: a,
                    center: 100.0 + 300.0 * a * a + 900.0 * a.powi(4),
                    min_population: 0.0,
                }
            })
            .collect();
        assert!((extrapolate(&rows) - 100.0).abs() < 1e-9);
        assert!((extrapolate(&rows[..3]) - 100.0).abs() < 1.0);
    }
}
