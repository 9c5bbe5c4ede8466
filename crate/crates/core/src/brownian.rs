//! Brownian increments on uniform grids.
//!
//! A path is sampled once at its finest resolution and every coarser level is
//! obtained by summing blocks of increments, so all levels of one experiment
//! see the same underlying `W`. Coarsening by a composite factor always runs
//! through its prime factors in ascending order; `coarsen(g, 4)` and
//! `coarsen(coarsen(g, 2), 2)` therefore perform the identical floating-point
//! additions.

use crate::model::as_integer;
use crate::rng::StreamKey;
use serde::Serialize;
use std::io::{self, Read, Write};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NoiseError {
    #[error("grid misaligned: {0}")]
    GridMisaligned(String),
    #[error("t={t} is not a point of the grid with n={n} (horizon {horizon})")]
    OffGridQuery { t: f64, n: u64, horizon: f64 },
    #[error("cannot refine to n={target}: the path was sampled at n={sampled:?}")]
    RefinementUnavailable { target: u64, sampled: Option<u64> },
    #[error("invalid noise parameter: {0}")]
    InvalidParameter(String),
    #[error("path dump: {0}")]
    Io(#[from] io::Error),
}

/// Where a grid's increments came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NoiseOrigin {
    /// Drawn from the counter-based generator at `n` steps per unit time.
    Sampled { key: StreamKey, n: u64 },
    /// Read back from a binary dump; cannot be regenerated at finer levels.
    Imported { seed: u64 },
}

#[derive(Debug, Clone)]
pub struct BrownianGrid {
    m: usize,
    horizon: f64,
    n: u64,
    steps: usize,
    origin: NoiseOrigin,
    increments: Arc<[f64]>,
    prefix: Arc<[f64]>,
}

/// Number of grid steps `n·T`, which must be a positive integer.
pub fn grid_steps(n: u64, horizon: f64) -> Result<usize, NoiseError> {
    if n == 0 {
        return Err(NoiseError::GridMisaligned("n must be at least 1".into()));
    }
    match as_integer(n as f64 * horizon) {
        Some(s) if s > 0 => Ok(s as usize),
        _ => Err(NoiseError::GridMisaligned(format!(
            "n*T = {n}*{horizon} is not a positive integer"
        ))),
    }
}

/// Samples the path with index 0 of stream `seed`.
pub fn sample_path(m: usize, horizon: f64, n: u64, seed: u64) -> Result<BrownianGrid, NoiseError> {
    sample_stream(m, horizon, n, StreamKey::new(seed, 0))
}

/// Samples one path; increment `(j, c)` is `N(0, 1/n)` keyed by `(seed, path, j, c)`.
pub fn sample_stream(
    m: usize,
    horizon: f64,
    n: u64,
    key: StreamKey,
) -> Result<BrownianGrid, NoiseError> {
    if m == 0 {
        return Err(NoiseError::InvalidParameter("dimension m must be positive".into()));
    }
    let steps = grid_steps(n, horizon)?;
    let scale = (1.0 / n as f64).sqrt();
    let mut increments = Vec::with_capacity(steps * m);
    for j in 0..steps {
        for c in 0..m {
            increments.push(scale * key.standard_normal(j as u64, c as u32));
        }
    }
    Ok(BrownianGrid::from_parts(
        m,
        horizon,
        n,
        steps,
        NoiseOrigin::Sampled { key, n },
        increments,
    ))
}

impl BrownianGrid {
    /// Wraps explicitly supplied increments (row-major `[step][coordinate]`).
    pub fn from_increments(
        m: usize,
        horizon: f64,
        n: u64,
        seed: u64,
        increments: Vec<f64>,
    ) -> Result<Self, NoiseError> {
        let steps = grid_steps(n, horizon)?;
        if m == 0 || increments.len() != steps * m {
            return Err(NoiseError::InvalidParameter(format!(
                "expected {} increments for m={m}, got {}",
                steps * m,
                increments.len()
            )));
        }
        Ok(Self::from_parts(
            m,
            horizon,
            n,
            steps,
            NoiseOrigin::Imported { seed },
            increments,
        ))
    }

    fn from_parts(
        m: usize,
        horizon: f64,
        n: u64,
        steps: usize,
        origin: NoiseOrigin,
        increments: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(increments.len(), steps * m);
        let mut prefix = vec![0.0; (steps + 1) * m];
        for j in 0..steps {
            for c in 0..m {
                prefix[(j + 1) * m + c] = prefix[j * m + c] + increments[j * m + c];
            }
        }
        Self {
            m,
            horizon,
            n,
            steps,
            origin,
            increments: increments.into(),
            prefix: prefix.into(),
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Steps per unit time.
    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn origin(&self) -> NoiseOrigin {
        self.origin
    }

    pub fn seed(&self) -> u64 {
        match self.origin {
            NoiseOrigin::Sampled { key, .. } => key.seed,
            NoiseOrigin::Imported { seed } => seed,
        }
    }

    /// Stream identity shared by every level derived from one sampled path.
    pub fn stream(&self) -> Option<StreamKey> {
        match self.origin {
            NoiseOrigin::Sampled { key, .. } => Some(key),
            NoiseOrigin::Imported { .. } => None,
        }
    }

    /// Coarsening factor relative to the resolution the path was sampled at.
    pub fn level_factor(&self) -> u64 {
        match self.origin {
            NoiseOrigin::Sampled { n, .. } => n / self.n,
            NoiseOrigin::Imported { .. } => 1,
        }
    }

    /// All increments, row-major `[step][coordinate]`.
    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    #[inline]
    pub fn increment(&self, j: usize) -> &[f64] {
        &self.increments[j * self.m..(j + 1) * self.m]
    }

    /// `W(j/n)`.
    #[inline]
    pub fn value_at_index(&self, j: usize) -> &[f64] {
        &self.prefix[j * self.m..(j + 1) * self.m]
    }

    /// Grid index of `t`, if `t` is a grid point within `[0, T]`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        match as_integer(t * self.n as f64) {
            Some(j) if j >= 0 && j as usize <= self.steps => Some(j as usize),
            _ => None,
        }
    }

    /// `W(t)` for a grid point `t`.
    pub fn value_at(&self, t: f64) -> Result<Vec<f64>, NoiseError> {
        self.index_of(t)
            .map(|j| self.value_at_index(j).to_vec())
            .ok_or(NoiseError::OffGridQuery {
                t,
                n: self.n,
                horizon: self.horizon,
            })
    }

    /// Sums blocks of `r` consecutive increments.
    pub fn coarsen(&self, r: u64) -> Result<Self, NoiseError> {
        if r == 0 || !self.n.is_multiple_of(r) {
            return Err(NoiseError::GridMisaligned(format!(
                "coarsening factor {r} does not divide n={}",
                self.n
            )));
        }
        grid_steps(self.n / r, self.horizon)?;
        let mut grid = self.clone();
        for p in prime_factors(r) {
            grid = grid.coarsen_block(p);
        }
        Ok(grid)
    }

    fn coarsen_block(&self, r: u64) -> Self {
        let r = r as usize;
        let steps = self.steps / r;
        let mut out = vec![0.0; steps * self.m];
        for j in 0..steps {
            for c in 0..self.m {
                let mut acc = self.increments[(j * r) * self.m + c];
                for s in 1..r {
                    acc += self.increments[(j * r + s) * self.m + c];
                }
                out[j * self.m + c] = acc;
            }
        }
        Self::from_parts(
            self.m,
            self.horizon,
            self.n / r as u64,
            steps,
            self.origin,
            out,
        )
    }

    /// Recovers the finer level `n·r` of the same path. Only levels between
    /// this grid and the resolution the path was sampled at are reachable;
    /// there is no bridge sampling beyond it.
    pub fn refine(&self, r: u64) -> Result<Self, NoiseError> {
        if r == 0 {
            return Err(NoiseError::GridMisaligned("refinement factor must be positive".into()));
        }
        let target = self.n * r;
        match self.origin {
            NoiseOrigin::Sampled { key, n } if n % target == 0 => {
                let base = sample_stream(self.m, self.horizon, n, key)?;
                base.coarsen(n / target)
            }
            NoiseOrigin::Sampled { n, .. } => Err(NoiseError::RefinementUnavailable {
                target,
                sampled: Some(n),
            }),
            NoiseOrigin::Imported { .. } => Err(NoiseError::RefinementUnavailable {
                target,
                sampled: None,
            }),
        }
    }

    /// Binary dump: little-endian header `m: u64, T: f64, n: u64, seed: u64`
    /// followed by the increments as row-major `f64`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<(), NoiseError> {
        w.write_all(&(self.m as u64).to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        w.write_all(&self.n.to_le_bytes())?;
        w.write_all(&self.seed().to_le_bytes())?;
        for v in self.increments.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self, NoiseError> {
        let mut word = [0u8; 8];
        let mut next = |r: &mut R| -> io::Result<[u8; 8]> {
            r.read_exact(&mut word)?;
            Ok(word)
        };
        let m = u64::from_le_bytes(next(&mut r)?) as usize;
        let horizon = f64::from_le_bytes(next(&mut r)?);
        let n = u64::from_le_bytes(next(&mut r)?);
        let seed = u64::from_le_bytes(next(&mut r)?);
        if m == 0 {
            return Err(NoiseError::InvalidParameter("dump has m = 0".into()));
        }
        let steps = grid_steps(n, horizon)?;
        let mut increments = Vec::with_capacity(steps * m);
        for _ in 0..steps * m {
            increments.push(f64::from_le_bytes(next(&mut r)?));
        }
        Ok(Self::from_parts(
            m,
            horizon,
            n,
            steps,
            NoiseOrigin::Imported { seed },
            increments,
        ))
    }
}

fn prime_factors(mut r: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= r {
        while r.is_multiple_of(p) {
            out.push(p);
            r /= p;
        }
        p += 1;
    }
    if r > 1 {
        out.push(r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn factorization() {
        assert_eq!(prime_factors(1), Vec::<u64>::new());
        assert_eq!(prime_factors(12), vec![2, 2, 3]);
        assert_eq!(prime_factors(97), vec![97]);
    }

    #[test]
    fn sample_shape_and_determinism() {
        let g = sample_path(1, 1.0, 4, 11).unwrap();
        assert_eq!(g.steps(), 4);
        assert_eq!(g.increments().len(), 4);
        let h = sample_path(1, 1.0, 4, 11).unwrap();
        assert_eq!(g.increments(), h.increments());
        let other = sample_path(1, 1.0, 4, 12).unwrap();
        assert_ne!(g.increments(), other.increments());
    }

    #[test]
    fn misaligned_grid() {
        assert!(matches!(
            sample_path(1, 1.3, 4, 0),
            Err(NoiseError::GridMisaligned(_))
        ));
        let g = sample_path(1, 1.0, 8, 0).unwrap();
        assert!(matches!(g.coarsen(3), Err(NoiseError::GridMisaligned(_))));
        // 1.5 * (6/4) is not integral
        let g = sample_path(1, 1.5, 6, 0).unwrap();
        assert!(g.coarsen(4).is_err());
    }

    #[test]
    fn value_at_examples() {
        let g = sample_path(2, 1.0, 8, 5).unwrap();
        assert_eq!(g.value_at(0.0).unwrap(), vec![0.0, 0.0]);
        assert_eq!(g.value_at(0.125).unwrap(), g.increment(0).to_vec());
        let total: Vec<f64> = (0..2)
            .map(|c| {
                let mut acc = 0.0;
                for j in 0..g.steps() {
                    acc += g.increment(j)[c];
                }
                acc
            })
            .collect();
        assert_eq!(g.value_at(1.0).unwrap(), total);
        assert!(matches!(
            g.value_at(0.1),
            Err(NoiseError::OffGridQuery { .. })
        ));
        assert!(g.value_at(1.125).is_err());
    }

    #[test]
    fn coarsen_constant_increments() {
        let g = BrownianGrid::from_parts(
            1,
            1.0,
            8,
            8,
            NoiseOrigin::Imported { seed: 0 },
            vec![0.25; 8],
        );
        let c = g.coarsen(2).unwrap();
        assert_eq!(c.increments(), &[0.5; 4]);
        assert_eq!(c.n(), 4);
    }

    #[test]
    fn refine_beyond_sampled_resolution_fails() {
        let g = sample_path(1, 1.0, 8, 0).unwrap();
        assert!(matches!(
            g.refine(2),
            Err(NoiseError::RefinementUnavailable { .. })
        ));
        let coarse = g.coarsen(4).unwrap();
        assert_eq!(coarse.level_factor(), 4);
        let back = coarse.refine(4).unwrap();
        assert_eq!(back.increments(), g.increments());
    }

    #[test]
    fn binary_dump_roundtrip() {
        let g = sample_path(2, 0.5, 16, 77).unwrap();
        let mut buf = Vec::new();
        g.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 8 * 16);
        assert_eq!(&buf[..8], &2u64.to_le_bytes());
        let back = BrownianGrid::read_binary(buf.as_slice()).unwrap();
        assert_eq!(back.increments(), g.increments());
        assert_eq!(back.seed(), 77);
        assert!(back.refine(2).is_err());
        assert!(BrownianGrid::read_binary(&buf[..40]).is_err());
    }

    proptest! {
        #[test]
        fn coarse_sums_telescope(seed in any::<u64>(), m in 1usize..3, a in 0u32..4, b in 0u32..3) {
            let n = 64u64;
            let g = sample_stream(m, 2.0, n, StreamKey::new(seed, 3)).unwrap();
            let r1 = 1u64 << a;
            let r2 = 1u64 << b;
            let chained = g.coarsen(r1).unwrap().coarsen(r2).unwrap();
            let direct = g.coarsen(r1 * r2).unwrap();
            prop_assert_eq!(chained.increments(), direct.increments());
            let wt_fine = g.value_at(2.0).unwrap();
            let wt_coarse = direct.value_at(2.0).unwrap();
            for c in 0..m {
                prop_assert!((wt_fine[c] - wt_coarse[c]).abs() < 1e-12);
            }
            let refined = direct.refine(r1 * r2).unwrap();
            prop_assert_eq!(refined.increments(), g.increments());
        }
    }
}
