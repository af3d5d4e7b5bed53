use std::fmt::Write as _;

use serde::Serialize;

use super::DynamicsError;

/// Sampled solution with cubic Hermite dense output.
///
/// Samples are stored flat: state `i` occupies `states[i*n..(i+1)*n]`, and
/// `slopes` holds the field value at each sample.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    dimension: usize,
    times: Vec<f64>,
    states: Vec<f64>,
    #[serde(skip)]
    slopes: Vec<f64>,
    /// Integration stopped early on leaving the escape box.
    pub escaped: bool,
    /// Richardson estimate of the error at the final time, when computed.
    pub error_estimate: Option<f64>,
    /// Time at which integration started (either end of the support).
    pub start_time: f64,
}

impl Trajectory {
    pub(crate) fn with_capacity(dimension: usize, cap: usize, start_time: f64) -> Self {
        Trajectory {
            dimension,
            times: Vec::with_capacity(cap),
            states: Vec::with_capacity(cap * dimension),
            slopes: Vec::with_capacity(cap * dimension),
            escaped: false,
            error_estimate: None,
            start_time,
        }
    }

    pub(crate) fn push(&mut self, t: f64, x: &[f64], slope: &[f64]) {
        self.times.push(t);
        self.states.extend_from_slice(x);
        self.slopes.extend_from_slice(slope);
    }

    /// Reverses sample order so that times increase.
    pub(crate) fn reverse_in_place(&mut self) {
        let n = self.dimension;
        self.times.reverse();
        for buf in [&mut self.states, &mut self.slopes] {
            let mut rows: Vec<&[f64]> = buf.chunks(n).collect();
            rows.reverse();
            *buf = rows.concat();
        }
    }

    /// A constant trajectory, used for equilibria.
    pub fn constant(x: &[f64], t0: f64, t1: f64) -> Self {
        let zero = vec![0.0; x.len()];
        let mut tr = Trajectory::with_capacity(x.len(), 2, t0);
        tr.push(t0.min(t1), x, &zero);
        if t1 != t0 {
            tr.push(t0.max(t1), x, &zero);
        }
        tr
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn states(&self) -> impl Iterator<Item = &[f64]> {
        self.states.chunks(self.dimension)
    }

    pub fn t_min(&self) -> f64 {
        self.times[0]
    }

    pub fn t_max(&self) -> f64 {
        *self.times.last().expect("nonempty trajectory")
    }

    /// The state where integration stopped.
    pub fn end_state(&self) -> &[f64] {
        if self.start_time <= self.t_min() {
            self.state(self.len() - 1)
        } else {
            self.state(0)
        }
    }

    /// The time where integration stopped.
    pub fn end_time(&self) -> f64 {
        if self.start_time <= self.t_min() {
            self.t_max()
        } else {
            self.t_min()
        }
    }

    /// Dense output at `t`; never extrapolates.
    pub fn at(&self, t: f64) -> Result<Vec<f64>, DynamicsError> {
        let mut out = vec![0.0; self.dimension];
        self.at_into(t, &mut out)?;
        Ok(out)
    }

    pub fn at_into(&self, t: f64, out: &mut [f64]) -> Result<(), DynamicsError> {
        let (lo, hi) = (self.t_min(), self.t_max());
        if !(t >= lo && t <= hi) {
            return Err(DynamicsError::OutsideSupport { t, lo, hi });
        }
        let n = self.dimension;
        if self.len() == 1 {
            out.copy_from_slice(self.state(0));
            return Ok(());
        }
        let i = match self.times.partition_point(|&s| s <= t) {
            0 => 0,
            k if k >= self.len() => self.len() - 2,
            k => k - 1,
        };
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let s2 = s * s;
        let s3 = s2 * s;
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let x0 = &self.states[i * n..(i + 1) * n];
        let x1 = &self.states[(i + 1) * n..(i + 2) * n];
        let d0 = &self.slopes[i * n..(i + 1) * n];
        let d1 = &self.slopes[(i + 1) * n..(i + 2) * n];
        for k in 0..n {
            out[k] = h00 * x0[k] + h * h10 * d0[k] + h01 * x1[k] + h * h11 * d1[k];
        }
        Ok(())
    }

    /// Largest Euclidean distance between the samples and `p`.
    pub fn sup_distance_to(&self, p: &[f64]) -> f64 {
        self.states()
            .map(|x| super::norm_diff(x, p))
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,x1,...,xn` and 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t");
        for k in 1..=self.dimension {
            let _ = write!(s, ",x{k}");
        }
        s.push('\n');
        for (i, &t) in self.times.iter().enumerate() {
            let _ = write!(s, "{t:.16e}");
            for v in self.state(i) {
                let _ = write!(s, ",{v:.16e}");
            }
            s.push('\n');
        }
        s
    }
}
