//! Seeded uniform sampling over a per-variable box, with guard expressions
//! and domain-error bookkeeping.
//!
//! Draw order and the u64→f64 mapping are fixed here so that a report is
//! reproducible from its recorded seed alone.

use crate::expr::{EvalError, Expr, Point, VarSet};
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error)]
pub enum SampleError {
    #[error("{excluded} of {total} sampled points were excluded (guards or domain errors)")]
    TooManyExclusions { excluded: usize, total: usize },
    #[error("sampler is configured for zero points")]
    Empty,
    #[error("sampler has {got} ranges, system has {expected} variables")]
    Dimension { expected: usize, got: usize },
}

/// Uniform sampler over a box, with a deterministic 64-bit seed.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub ranges: Vec<(f64, f64)>,
    pub t_range: (f64, f64),
    pub count: usize,
    pub seed: u64,
    /// A point is kept only where every guard evaluates to a value > 0.
    pub guards: Vec<Expr>,
}

impl Sampler {
    pub fn new(ranges: Vec<(f64, f64)>, t_range: (f64, f64), count: usize, seed: u64) -> Sampler {
        Sampler {
            ranges,
            t_range,
            count,
            seed,
            guards: Vec::new(),
        }
    }

    pub fn with_guards(mut self, guards: Vec<Expr>) -> Sampler {
        self.guards = guards;
        self
    }

    fn check(&self, vs: &VarSet) -> Result<(), SampleError> {
        if self.count == 0 {
            return Err(SampleError::Empty);
        }
        if self.ranges.len() != vs.n() {
            return Err(SampleError::Dimension {
                expected: vs.n(),
                got: self.ranges.len(),
            });
        }
        Ok(())
    }

    /// Run `body` on every admitted point. The closure signals a domain
    /// exclusion by returning `Err`; exclusions are tallied and the sweep
    /// fails only when they exceed half the draw count.
    pub fn for_each(
        &self,
        vs: &VarSet,
        mut body: impl FnMut(&Point) -> Result<(), EvalError>,
    ) -> Result<SweepStats, SampleError> {
        self.check(vs)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut excluded = 0usize;
        let mut accepted = 0usize;
        'draws: for _ in 0..self.count {
            let u: Vec<f64> = self
                .ranges
                .iter()
                .map(|&(lo, hi)| lo + (hi - lo) * unit(&mut rng))
                .collect();
            let t = self.t_range.0 + (self.t_range.1 - self.t_range.0) * unit(&mut rng);
            let pt = Point::new(u, t);
            for g in &self.guards {
                match g.eval(vs, &pt) {
                    Ok(v) if v > 0.0 => {}
                    _ => {
                        excluded += 1;
                        continue 'draws;
                    }
                }
            }
            match body(&pt) {
                Ok(()) => accepted += 1,
                Err(_) => excluded += 1,
            }
        }
        if accepted * 2 < self.count {
            return Err(SampleError::TooManyExclusions {
                excluded,
                total: self.count,
            });
        }
        Ok(SweepStats { accepted, excluded })
    }

    /// Sweep a scalar residual and aggregate it.
    pub fn sweep(
        &self,
        vs: &VarSet,
        mut residual: impl FnMut(&Point) -> Result<f64, EvalError>,
    ) -> Result<Aggregate, SampleError> {
        let mut agg = Aggregate::default();
        let stats = self.for_each(vs, |pt| {
            let r = residual(pt)?;
            agg.record(pt, r);
            Ok(())
        })?;
        agg.accepted = stats.accepted;
        agg.excluded = stats.excluded;
        Ok(agg)
    }
}

/// 53-bit mantissa mapping to [0, 1); independent of any distribution
/// implementation so seeds stay meaningful across dependency upgrades.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / 9007199254740992.0)
}

#[derive(Debug, Clone, Copy)]
pub struct SweepStats {
    pub accepted: usize,
    pub excluded: usize,
}

/// Running max/mean/worst-point aggregation of a scalar residual.
#[derive(Debug, Clone, Default)]
pub struct Aggregate {
    pub accepted: usize,
    pub excluded: usize,
    pub max: f64,
    pub sum: f64,
    pub worst: Option<Point>,
}

impl Aggregate {
    pub fn record(&mut self, pt: &Point, residual: f64) {
        let r = residual.abs();
        self.sum += r;
        if self.worst.is_none() || r > self.max {
            self.max = r;
            self.worst = Some(pt.clone());
        }
    }

    pub fn mean(&self) -> f64 {
        if self.accepted == 0 {
            0.0
        } else {
            self.sum / self.accepted as f64
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vs2() -> VarSet {
        VarSet::new(["x", "y"], "t").unwrap()
    }

    #[test]
    fn sweep_is_deterministic() {
        let vs = vs2();
        let s = Sampler::new(vec![(0.0, 1.0), (-1.0, 1.0)], (0.0, 1.0), 50, 7);
        let mut pts_a = Vec::new();
        s.for_each(&vs, |pt| {
            pts_a.push(pt.clone());
            Ok(())
        })
        .unwrap();
        let mut pts_b = Vec::new();
        s.for_each(&vs, |pt| {
            pts_b.push(pt.clone());
            Ok(())
        })
        .unwrap();
        assert_eq!(pts_a, pts_b);
        for pt in &pts_a {
            assert!((0.0..=1.0).contains(&pt.u[0]));
            assert!((-1.0..=1.0).contains(&pt.u[1]));
            assert!((0.0..=1.0).contains(&pt.t));
        }
    }

    #[test]
    fn guards_exclude_points() {
        let vs = vs2();
        let guard = vs.parse("x - 0.5").unwrap();
        let s = Sampler::new(vec![(0.0, 1.0), (0.0, 1.0)], (0.0, 1.0), 100, 3)
            .with_guards(vec![guard]);
        let agg = s.sweep(&vs, |pt| {
            assert!(pt.u[0] > 0.5);
            Ok(0.0)
        });
        // Roughly half excluded; the sweep may or may not cross the 50%
        // failure line depending on the seed, so only check consistency.
        match agg {
            Ok(a) => assert_eq!(a.accepted + a.excluded, 100),
            Err(SampleError::TooManyExclusions { excluded, total }) => {
                assert!(excluded * 2 > total);
            }
            Err(other) => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn majority_domain_errors_fail_the_sweep() {
        let vs = vs2();
        let s = Sampler::new(vec![(0.0, 1.0), (0.0, 1.0)], (0.0, 1.0), 40, 1);
        let err = s
            .sweep(&vs, |_| Err(EvalError::Domain("always")))
            .unwrap_err();
        assert!(matches!(
            err,
            SampleError::TooManyExclusions {
                excluded: 40,
                total: 40
            }
        ));
    }

    #[test]
    fn aggregate_tracks_worst_point() {
        let vs = vs2();
        let s = Sampler::new(vec![(0.0, 1.0), (0.0, 1.0)], (0.0, 1.0), 25, 9);
        let agg = s.sweep(&vs, |pt| Ok(pt.u[0])).unwrap();
        let worst = agg.worst.as_ref().unwrap();
        assert_eq!(agg.max, worst.u[0]);
        assert!(agg.mean() <= agg.max);
    }
}
