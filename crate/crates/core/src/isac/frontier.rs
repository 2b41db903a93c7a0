use rayon::prelude::*;

use super::{input_costs, mutual_information_dmc, DistortionFn, PerLetterEstimator};
use crate::channel::{Dmc, Pmf, Sdmc};
use crate::{Error, Result};

/// Largest input alphabet swept on the full simplex grid.
pub const MAX_GRID_INPUTS: usize = 4;
/// Largest input alphabet handled at all.
pub const MAX_FRONTIER_INPUTS: usize = 64;

/// A rate-distortion pair achieved by input law `px` with the optimal
/// estimator.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontierPoint {
    pub px: Pmf,
    /// `I(X;Y)` in bits.
    pub rate: f64,
    /// Expected per-letter distortion.
    pub distortion: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frontier {
    /// Sorted by distortion, then by decreasing rate, then by `px`.
    pub points: Vec<FrontierPoint>,
    /// True when produced by the local search rather than the full grid.
    pub heuristic: bool,
}

impl Frontier {
    /// The highest-rate point; the lowest distortion among ties.
    pub fn max_rate(&self) -> &FrontierPoint {
        let mut best = &self.points[0];
        for p in &self.points[1..] {
            if p.rate > best.rate {
                best = p;
            }
        }
        best
    }

    /// The lowest-distortion point; the highest rate among ties.
    pub fn min_distortion(&self) -> &FrontierPoint {
        &self.points[0]
    }
}

struct Evaluator {
    dmc: Dmc,
    costs: Vec<f64>,
}

impl Evaluator {
    fn point(&self, weights: Vec<f64>) -> Result<FrontierPoint> {
        let px = Pmf::new(weights)?;
        let rate = mutual_information_dmc(&px, &self.dmc)?;
        let distortion = self.costs.iter().zip(px.weights()).map(|(c, w)| c * w).sum();
        Ok(FrontierPoint { px, rate, distortion })
    }
}

/// Rate and distortion over input laws on a grid of `resolution` points per
/// axis (step `1 / (resolution - 1)`).
///
/// Up to [`MAX_GRID_INPUTS`] inputs every grid point of the simplex is
/// evaluated. Larger alphabets get a heuristic: coordinate ascent on
/// `R - lambda D` over the same grid, one run per `lambda` in a sweep of
/// `resolution` values, plus the minimum-distortion vertex.
pub fn frontier_sweep(sdmc: &Sdmc, ps: &Pmf, d: &DistortionFn, resolution: usize) -> Result<Frontier> {
    if resolution < 2 {
        return Err(Error::InvalidParams(format!("resolution must be at least 2, got {resolution}")));
    }
    let k = sdmc.inputs().size();
    if k > MAX_FRONTIER_INPUTS {
        return Err(Error::AlphabetTooLarge(k));
    }
    let est = PerLetterEstimator::optimal(sdmc, ps, d)?;
    let eval = Evaluator { dmc: sdmc.averaged(ps)?, costs: input_costs(sdmc, ps, d, &est)? };
    let steps = resolution - 1;
    let heuristic = k > MAX_GRID_INPUTS;
    let mut points = if heuristic {
        local_search(&eval, steps)?
    } else {
        compositions(steps, k).into_par_iter().map(|c| eval.point(to_weights(&c, steps))).collect::<Result<Vec<_>>>()?
    };
    points.sort_by(|p, q| {
        p.distortion
            .total_cmp(&q.distortion)
            .then(q.rate.total_cmp(&p.rate))
            .then_with(|| cmp_weights(p.px.weights(), q.px.weights()))
    });
    points.dedup_by(|p, q| p.px == q.px);
    Ok(Frontier { points, heuristic })
}

fn cmp_weights(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
}

fn to_weights(counts: &[usize], steps: usize) -> Vec<f64> {
    counts.iter().map(|&c| c as f64 / steps as f64).collect()
}

/// All ways to write `total` as an ordered sum of `parts` nonnegative
/// integers, in lexicographic order.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0; parts];
    fn rec(i: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if i + 1 == cur.len() {
            cur[i] = left;
            out.push(cur.clone());
            return;
        }
        for c in 0..=left {
            cur[i] = c;
            rec(i + 1, left - c, cur, out);
        }
    }
    rec(0, total, &mut cur, &mut out);
    out
}

fn local_search(eval: &Evaluator, steps: usize) -> Result<Vec<FrontierPoint>> {
    let k = eval.costs.len();
    let spread = eval.costs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - eval.costs.iter().cloned().fold(f64::INFINITY, f64::min);
    // Beyond this slope the distortion term dominates any rate difference.
    let lambda_max = 4.0 * (k as f64).log2() / spread.max(1e-9);
    let lambdas: Vec<f64> = (0..=steps).map(|j| lambda_max * j as f64 / steps as f64).collect();

    let mut points = lambdas
        .par_iter()
        .map(|&lambda| {
            let objective = |c: &[usize]| -> Result<f64> {
                let p = eval.point(to_weights(c, steps))?;
                Ok(p.rate - lambda * p.distortion)
            };
            // start near uniform
            let mut cur: Vec<usize> = (0..k).map(|i| steps / k + usize::from(i < steps % k)).collect();
            let mut best = objective(&cur)?;
            for _ in 0..10_000 {
                let mut moved = false;
                for i in 0..k {
                    for j in 0..k {
                        if i == j || cur[i] == 0 {
                            continue;
                        }
                        cur[i] -= 1;
                        cur[j] += 1;
                        let v = objective(&cur)?;
                        if v > best + 1e-15 {
                            best = v;
                            moved = true;
                        } else {
                            cur[i] += 1;
                            cur[j] -= 1;
                        }
                    }
                }
                if !moved {
                    break;
                }
            }
            eval.point(to_weights(&cur, steps))
        })
        .collect::<Result<Vec<_>>>()?;

    let cheapest = (0..k).fold(0, |b, i| if eval.costs[i] < eval.costs[b] { i } else { b });
    let mut vertex = vec![0.0; k];
    vertex[cheapest] = 1.0;
    points.push(eval.point(vertex)?);
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isac::expected_distortion;

    fn bundled() -> (Sdmc, Pmf, DistortionFn) {
        (
            Sdmc::new(2, 2, vec![vec![0.9, 0.1], vec![0.6, 0.4], vec![0.1, 0.9], vec![0.8, 0.2]]).unwrap(),
            Pmf::new(vec![0.7, 0.3]).unwrap(),
            DistortionFn::hamming(2).unwrap(),
        )
    }

    #[test]
    fn composition_counts() {
        assert_eq!(compositions(4, 1), vec![vec![4]]);
        assert_eq!(compositions(2, 2), vec![vec![0, 2], vec![1, 1], vec![2, 0]]);
        assert_eq!(compositions(100, 3).len(), 5151);
    }

    #[test]
    fn noiseless_state_independent() {
        let sdmc = Sdmc::state_independent(&Dmc::bsc(0.0).unwrap(), 2).unwrap();
        let ps = Pmf::new(vec![0.6, 0.4]).unwrap();
        let d = DistortionFn::hamming(2).unwrap();
        let f = frontier_sweep(&sdmc, &ps, &d, 11).unwrap();
        assert_eq!(f.points.len(), 11);
        for p in &f.points {
            assert!((p.distortion - 0.4).abs() < 1e-12);
        }
        let top = f.max_rate();
        assert!((top.rate - 1.0).abs() < 1e-12);
        assert_eq!(top.px.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn points_are_consistent_and_sorted() {
        let (sdmc, ps, d) = bundled();
        let f = frontier_sweep(&sdmc, &ps, &d, 21).unwrap();
        assert!(!f.heuristic);
        for w in f.points.windows(2) {
            assert!(w[0].distortion <= w[1].distortion);
        }
        for p in &f.points {
            let dd = expected_distortion(&p.px, &sdmc, &ps, &d).unwrap();
            assert!((dd - p.distortion).abs() < 1e-12);
            assert!(p.rate >= 0.0 && p.rate <= 1.0);
        }
    }

    #[test]
    fn large_alphabet_uses_local_search() {
        let k = 6;
        let rows: Vec<Vec<f64>> = (0..k * 2)
            .map(|r| {
                let x = r / 2;
                let mut row = vec![0.02; k];
                row[(x + r % 2) % k] += 1.0 - 0.02 * k as f64;
                row
            })
            .collect();
        let sdmc = Sdmc::new(k, 2, rows).unwrap();
        let ps = Pmf::uniform(2).unwrap();
        let d = DistortionFn::hamming(2).unwrap();
        let f = frontier_sweep(&sdmc, &ps, &d, 11).unwrap();
        assert!(f.heuristic);
        assert!(f.max_rate().rate > 0.0);
        let too_big = Sdmc::state_independent(&Dmc::new(vec![vec![1.0]; 65]).unwrap(), 1).unwrap();
        assert!(matches!(
            frontier_sweep(&too_big, &Pmf::uniform(1).unwrap(), &DistortionFn::hamming(1).unwrap(), 3),
            Err(Error::AlphabetTooLarge(65))
        ));
    }
}
