use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invariant, Error};
use crate::evolution::{Field, GridSpace, GridSpec, TORUS_SIDE};
use crate::time_sets::TimeSet;
use crate::Result;

/// Axis-aligned box `[lo, hi)` on the torus, one bound per axis.
///
/// Boxes may reach past `2π`; they wrap around periodically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl SensorBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        SensorBox { lo, hi }
    }

    /// The whole torus in `dim` dimensions.
    pub fn torus(dim: usize) -> Self {
        SensorBox {
            lo: vec![0.0; dim],
            hi: vec![TORUS_SIDE; dim],
        }
    }

    fn contains(&self, point: &[f64]) -> bool {
        self.lo.iter().zip(&self.hi).zip(point).all(|((&lo, &hi), &x)| {
            let width = hi - lo;
            let mut offset = (x - lo).rem_euclid(TORUS_SIDE);
            // grid points sitting on a box edge belong to the box starting there
            if TORUS_SIDE - offset < 1e-9 {
                offset = 0.0;
            }
            width >= TORUS_SIDE || offset < width - 1e-9
        })
    }
}

/// Serializable description of `t ↦ Ω(t)`: a time mesh and, per mesh piece,
/// a union of boxes (an empty list means `Ω(t) = ∅`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    pub mesh: Vec<f64>,
    pub pieces: Vec<Vec<SensorBox>>,
}

impl SensorSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.mesh.len() < 2 || self.pieces.len() + 1 != self.mesh.len() {
            return Err(invariant("sensor mesh needs one more breakpoint than pieces"));
        }
        if self.mesh[0] != 0.0 || self.mesh.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invariant("sensor mesh must start at 0 and increase strictly"));
        }
        for b in self.pieces.iter().flatten() {
            if b.lo.len() != dim || b.hi.len() != dim {
                return Err(invariant(format!("sensor box {b:?} is not {dim}-dimensional")));
            }
            if b.lo
                .iter()
                .zip(&b.hi)
                .any(|(lo, hi)| !(lo < hi) || !lo.is_finite() || !hi.is_finite())
            {
                return Err(invariant(format!("sensor box {b:?} is empty or not finite")));
            }
        }
        Ok(())
    }

    pub fn horizon(&self) -> f64 {
        *self.mesh.last().expect("nonempty mesh")
    }

    /// `Ω(t)` is the whole torus for all `t`.
    pub fn full(dim: usize, horizon: f64) -> Self {
        SensorSpec {
            mesh: vec![0.0, horizon],
            pieces: vec![vec![SensorBox::torus(dim)]],
        }
    }

    /// `Ω(t) = ∅` for all `t`.
    pub fn empty(horizon: f64) -> Self {
        SensorSpec {
            mesh: vec![0.0, horizon],
            pieces: vec![vec![]],
        }
    }

    /// Stripes `[jL + offset, jL + offset + fill·L)` across the first axis.
    pub fn stripe_boxes(dim: usize, period: f64, fill: f64, offset: f64) -> Result<Vec<SensorBox>> {
        if !(period > 0.0 && period <= TORUS_SIDE) || !(fill > 0.0 && fill <= 1.0) {
            return Err(domain(format!(
                "stripes need 0 < L <= 2π and 0 < fill <= 1, got L = {period}, fill = {fill}"
            )));
        }
        let count = (TORUS_SIDE / period - 1e-9).ceil() as usize;
        Ok((0..count)
            .map(|j| {
                let mut lo = vec![0.0; dim];
                let mut hi = vec![TORUS_SIDE; dim];
                lo[0] = offset + j as f64 * period;
                hi[0] = lo[0] + fill * period;
                SensorBox { lo, hi }
            })
            .collect())
    }

    /// Time-independent stripes of period `L` covering the fraction `fill`.
    pub fn stripes(dim: usize, horizon: f64, period: f64, fill: f64) -> Result<Self> {
        Ok(SensorSpec {
            mesh: vec![0.0, horizon],
            pieces: vec![Self::stripe_boxes(dim, period, fill, 0.0)?],
        })
    }

    /// Stripes shifted by `drift` on each of `pieces` equal time pieces.
    pub fn drifting_stripes(
        dim: usize,
        horizon: f64,
        period: f64,
        fill: f64,
        pieces: usize,
        drift: f64,
    ) -> Result<Self> {
        let pieces = pieces.max(1);
        let mesh = (0..=pieces).map(|k| horizon * k as f64 / pieces as f64).collect();
        let boxes = (0..pieces)
            .map(|k| Self::stripe_boxes(dim, period, fill, k as f64 * drift))
            .collect::<Result<_>>()?;
        Ok(SensorSpec { mesh, pieces: boxes })
    }

    /// One half of the torus (along the first axis) up to `T/2`, the other half after.
    pub fn switching_halves(dim: usize, horizon: f64) -> Self {
        let half = |start: f64| {
            let mut lo = vec![0.0; dim];
            let mut hi = vec![TORUS_SIDE; dim];
            lo[0] = start;
            hi[0] = start + TORUS_SIDE / 2.0;
            vec![SensorBox { lo, hi }]
        };
        SensorSpec {
            mesh: vec![0.0, horizon / 2.0, horizon],
            pieces: vec![half(0.0), half(TORUS_SIDE / 2.0)],
        }
    }

    /// `boxes` while `t ∈ E`, nothing otherwise.
    pub fn on_set_only(set: &TimeSet, boxes: Vec<SensorBox>) -> Self {
        let mut mesh = vec![0.0];
        let mut pieces = Vec::new();
        for iv in set.intervals() {
            if iv.start > *mesh.last().unwrap() {
                mesh.push(iv.start);
                pieces.push(vec![]);
            }
            mesh.push(iv.end);
            pieces.push(boxes.clone());
        }
        if set.horizon() > *mesh.last().unwrap() {
            mesh.push(set.horizon());
            pieces.push(vec![]);
        }
        SensorSpec { mesh, pieces }
    }

    /// Realizes the indicator functions on `grid`.
    pub fn realize(&self, grid: &GridSpace) -> Result<SensorFamily> {
        self.validate(grid.dim())?;
        let masks = self
            .pieces
            .iter()
            .map(|boxes| {
                (0..grid.len())
                    .map(|j| {
                        let c = grid.coordinates(j);
                        boxes.iter().any(|b| b.contains(&c[..grid.dim()]))
                    })
                    .collect()
            })
            .collect();
        Ok(SensorFamily {
            spec: self.clone(),
            grid: grid.clone(),
            masks,
        })
    }
}

/// `C(t) = 𝟙_{Ω(t)}` realized on a grid: one mask per mesh piece.
#[derive(Debug, Clone)]
pub struct SensorFamily {
    spec: SensorSpec,
    grid: GridSpace,
    masks: Vec<Vec<bool>>,
}

impl SensorFamily {
    pub fn spec(&self) -> &SensorSpec {
        &self.spec
    }

    pub fn grid(&self) -> &GridSpace {
        &self.grid
    }

    pub fn grid_spec(&self) -> GridSpec {
        self.grid.spec()
    }

    pub fn mesh(&self) -> &[f64] {
        &self.spec.mesh
    }

    pub fn horizon(&self) -> f64 {
        self.spec.horizon()
    }

    pub fn pieces(&self) -> usize {
        self.masks.len()
    }

    pub fn mask(&self, piece: usize) -> &[bool] {
        &self.masks[piece]
    }

    /// Mesh piece containing `t`; pieces are `[t_k, t_{k+1})` and the last one includes `T`.
    pub fn piece_at(&self, t: f64) -> Result<usize> {
        let mesh = &self.spec.mesh;
        if !(t >= 0.0 && t <= self.horizon()) {
            return Err(domain(format!("t = {t} outside [0, {}]", self.horizon())));
        }
        Ok((mesh.partition_point(|&b| b <= t) - 1).min(self.pieces() - 1))
    }

    /// `C(t) x`: pointwise product with the indicator of `Ω(t)`.
    pub fn apply(&self, t: f64, x: &Field) -> Result<Field> {
        if x.len() != self.grid.len() {
            return Err(Error::GridMismatch("field does not match the sensor grid".into()));
        }
        Ok(self.apply_piece(self.piece_at(t)?, x))
    }

    pub fn apply_piece(&self, piece: usize, x: &Field) -> Field {
        let zero = Complex64::new(0.0, 0.0);
        Field(
            x.0.iter()
                .zip(&self.masks[piece])
                .map(|(&z, &on)| if on { z } else { zero })
                .collect(),
        )
    }

    /// Mesh pieces whose intersection with `E` has positive measure.
    pub fn pieces_meeting(&self, set: &TimeSet) -> Vec<usize> {
        self.spec
            .mesh
            .windows(2)
            .enumerate()
            .filter(|(_, w)| set.overlap(w[0], w[1]) > 0.0)
            .map(|(k, _)| k)
            .collect()
    }

    /// `‖C(·)‖_{E,∞}`: 1 if some `Ω(t)`, `t ∈ E`, is nonempty on the grid, else 0.
    pub fn sup_norm_on(&self, set: &TimeSet) -> f64 {
        if self
            .pieces_meeting(set)
            .into_iter()
            .any(|k| self.masks[k].iter().any(|&b| b))
        {
            1.0
        } else {
            0.0
        }
    }
}
