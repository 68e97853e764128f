//! Densities tabulated on rectangular grids with trapezoid weights.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::SquareMatrix;
use crate::optimize::par_sum;
use crate::scalar::{from_usize, lit, log_sum_exp, norm2, Real};

/// Coordinate frame of a grid: parameter space, or local coordinates
/// `h = sqrt(n) (theta - theta_star)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Frame<T> {
    Theta,
    Lan { theta_star: Vec<T>, n: usize },
}

impl<T: Real> Frame<T> {
    fn coordinate_prefix(&self) -> &'static str {
        match self {
            Frame::Theta => "theta",
            Frame::Lan { .. } => "h",
        }
    }
}

/// Normalised density on a product grid, stored as log values.
///
/// Nodes are ordered row-major (last axis fastest). Zero density is allowed
/// as `-inf`; NaN and `+inf` are not.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDensity<T> {
    axes: Vec<Vec<T>>,
    log_values: Vec<T>,
    weights: Vec<T>,
    frame: Frame<T>,
}

/// Trapezoid weights along one axis.
pub fn trapezoid_weights<T: Real>(axis: &[T]) -> Vec<T> {
    let m = axis.len();
    let half = lit::<T>(0.5);
    (0..m)
        .map(|i| {
            let left = if i == 0 { axis[0] } else { axis[i - 1] };
            let right = if i + 1 == m { axis[m - 1] } else { axis[i + 1] };
            half * (right - left)
        })
        .collect()
}

/// `m` equally spaced nodes from `lo` to `hi` inclusive.
pub fn linspace<T: Real>(lo: T, hi: T, m: usize) -> Vec<T> {
    assert!(m >= 2);
    let span = hi - lo;
    let last = from_usize::<T>(m - 1);
    (0..m)
        .map(|i| {
            if i + 1 == m {
                hi
            } else {
                lo + span * from_usize::<T>(i) / last
            }
        })
        .collect()
}

/// Largest supported grid dimension.
pub const MAX_DIM: usize = 4;

fn validate_axes<T: Real>(axes: &[Vec<T>]) -> Result<()> {
    if axes.is_empty() || axes.len() > MAX_DIM {
        return Err(Error::InvalidArgument(format!(
            "grid needs between 1 and {MAX_DIM} axes, got {}",
            axes.len()
        )));
    }
    for (j, a) in axes.iter().enumerate() {
        if a.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "axis {j} has fewer than 2 nodes"
            )));
        }
        if a.iter().any(|x| !x.is_finite()) || a.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!(
                "axis {j} is not strictly increasing and finite"
            )));
        }
    }
    Ok(())
}

fn product_weights<T: Real>(axes: &[Vec<T>]) -> Vec<T> {
    let per_axis: Vec<Vec<T>> = axes.iter().map(|a| trapezoid_weights(a)).collect();
    let mut weights = vec![T::one()];
    for w in &per_axis {
        weights = weights
            .iter()
            .flat_map(|&acc| w.iter().map(move |&x| acc * x))
            .collect();
    }
    weights
}

impl<T: Real> GridDensity<T> {
    /// Normalises `log_values` (one per node) so the trapezoid integral is 1.
    pub fn new(axes: Vec<Vec<T>>, frame: Frame<T>, log_values: Vec<T>) -> Result<Self> {
        let mut g = Self::from_normalized(axes, frame, log_values)?;
        let log_z = log_sum_exp(
            g.weights
                .iter()
                .zip(&g.log_values)
                .map(|(&w, &lv)| w.ln() + lv),
        );
        if !log_z.is_finite() {
            return Err(Error::InvalidArgument(
                "density has no mass on the grid".into(),
            ));
        }
        for lv in &mut g.log_values {
            *lv -= log_z;
        }
        Ok(g)
    }

    /// Tabulates `log_fn` at every node (in parallel) and normalises.
    pub fn from_log_fn(
        axes: Vec<Vec<T>>,
        frame: Frame<T>,
        log_fn: impl Fn(&[T]) -> T + Sync,
    ) -> Result<Self> {
        validate_axes(&axes)?;
        let len: usize = axes.iter().map(Vec::len).product();
        let log_values: Vec<T> = (0..len)
            .into_par_iter()
            .map_init(
                || vec![T::zero(); axes.len()],
                |buf, i| {
                    node_of(&axes, i, buf);
                    log_fn(buf)
                },
            )
            .collect();
        Self::new(axes, frame, log_values)
    }

    /// Takes log values that are already normalised; no rescaling.
    pub(crate) fn from_normalized(
        axes: Vec<Vec<T>>,
        frame: Frame<T>,
        log_values: Vec<T>,
    ) -> Result<Self> {
        validate_axes(&axes)?;
        let len: usize = axes.iter().map(Vec::len).product();
        if log_values.len() != len {
            return Err(Error::InvalidArgument(format!(
                "{} log values for a grid of {len} nodes",
                log_values.len()
            )));
        }
        if let Some(i) = log_values
            .iter()
            .position(|v| v.is_nan() || *v == T::infinity())
        {
            let mut node = vec![T::zero(); axes.len()];
            node_of(&axes, i, &mut node);
            return Err(Error::NonFinite {
                theta: crate::scalar::vec_to_f64(&node),
            });
        }
        if let Frame::Lan { theta_star, n } = &frame {
            if theta_star.len() != axes.len() || *n == 0 {
                return Err(Error::InvalidArgument(
                    "local frame needs theta_star of grid dimension and n >= 1".into(),
                ));
            }
        }
        let weights = product_weights(&axes);
        Ok(Self {
            axes,
            log_values,
            weights,
            frame,
        })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }

    pub fn axes(&self) -> &[Vec<T>] {
        &self.axes
    }

    pub fn frame(&self) -> &Frame<T> {
        &self.frame
    }

    pub fn log_values(&self) -> &[T] {
        &self.log_values
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Coordinates of node `i`, written into `out`.
    pub fn node_into(&self, i: usize, out: &mut [T]) {
        node_of(&self.axes, i, out);
    }

    pub fn node(&self, i: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim()];
        self.node_into(i, &mut out);
        out
    }

    pub fn density(&self, i: usize) -> T {
        self.log_values[i].exp()
    }

    /// `sum_i w_i g(h_i) f(h_i, g(h_i))` over all nodes.
    pub fn integrate(&self, f: impl Fn(&[T], T) -> T + Sync) -> T {
        let p = self.dim();
        par_sum(self.len(), |i| {
            let mut buf = [T::zero(); MAX_DIM];
            let node = &mut buf[..p];
            self.node_into(i, node);
            let d = self.density(i);
            if d == T::zero() {
                T::zero()
            } else {
                self.weights[i] * d * f(node, d)
            }
        })
    }

    pub fn total_mass(&self) -> T {
        self.integrate(|_, _| T::one())
    }

    /// First raw moment.
    pub fn mean(&self) -> Vec<T> {
        (0..self.dim())
            .map(|j| self.integrate(|h, _| h[j]))
            .collect()
    }

    /// Raw second moment matrix `E[h h^T]`.
    pub fn second_moment(&self) -> SquareMatrix<T> {
        let p = self.dim();
        let mut m = SquareMatrix::zeros(p);
        for a in 0..p {
            for b in a..p {
                let v = self.integrate(|h, _| h[a] * h[b]);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        m
    }

    pub fn covariance(&self) -> SquareMatrix<T> {
        let mu = self.mean();
        let p = self.dim();
        let mut c = SquareMatrix::zeros(p);
        for a in 0..p {
            for b in a..p {
                let v = self.integrate(|h, _| (h[a] - mu[a]) * (h[b] - mu[b]));
                c[(a, b)] = v;
                c[(b, a)] = v;
            }
        }
        c
    }

    /// `int ||h||_2^order g(h) dh`; `order` may be fractional.
    pub fn abs_moment(&self, order: T) -> Result<T> {
        if order < T::zero() || order.is_nan() {
            return Err(Error::InvalidArgument(format!(
                "moment order must be non-negative, got {order}"
            )));
        }
        let v = if order == T::zero() {
            self.total_mass()
        } else {
            self.integrate(|h, _| norm2(h).powf(order))
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFiniteMoment {
                order: order.to_f64().unwrap_or(f64::NAN),
            })
        }
    }

    /// Mass carried by nodes within two cells of the grid boundary.
    pub fn boundary_mass(&self) -> T {
        let sizes: Vec<usize> = self.axes.iter().map(Vec::len).collect();
        par_sum(self.len(), |i| {
            let mut rem = i;
            let mut edge = false;
            for &m in sizes.iter().rev() {
                let k = rem % m;
                rem /= m;
                edge |= k < 2 || k + 2 >= m;
            }
            if edge {
                self.weights[i] * self.density(i)
            } else {
                T::zero()
            }
        })
    }

    /// Errors unless `other` has the same axes (up to `1e-12` relative).
    pub fn check_same_axes(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::GridMismatch(format!(
                "dimensions {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        let tol = lit::<T>(1e-12);
        for (j, (a, b)) in self.axes.iter().zip(&other.axes).enumerate() {
            if a.len() != b.len() {
                return Err(Error::GridMismatch(format!(
                    "axis {j} has {} and {} nodes",
                    a.len(),
                    b.len()
                )));
            }
            if a.iter()
                .zip(b)
                .any(|(&x, &y)| (x - y).abs() > tol * T::one().max(x.abs()))
            {
                return Err(Error::GridMismatch(format!("axis {j} nodes differ")));
            }
        }
        Ok(())
    }

    /// `sum_i w_i s(h_i) |a(h_i) - b(h_i)|` for `a = self`, `b = other` on shared axes.
    pub fn weighted_abs_difference(
        &self,
        other: &Self,
        weight: impl Fn(&[T]) -> T + Sync,
    ) -> Result<T> {
        self.check_same_axes(other)?;
        let p = self.dim();
        Ok(par_sum(self.len(), |i| {
            let diff = (self.density(i) - other.density(i)).abs();
            if diff == T::zero() {
                return T::zero();
            }
            let mut buf = [T::zero(); MAX_DIM];
            let node = &mut buf[..p];
            self.node_into(i, node);
            self.weights[i] * weight(node) * diff
        }))
    }

    /// Writes a `#` metadata line, a header row and one row per node.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        match &self.frame {
            Frame::Theta => writeln!(w, "# frame=theta")?,
            Frame::Lan { theta_star, n } => {
                let ts: Vec<String> = theta_star.iter().map(|t| t.to_string()).collect();
                writeln!(w, "# frame=h n={n} theta_star={}", ts.join(";"))?
            }
        }
        let mut wtr = csv::Writer::from_writer(w);
        let prefix = self.frame.coordinate_prefix();
        let mut header: Vec<String> = (1..=self.dim()).map(|j| format!("{prefix}_{j}")).collect();
        header.push("log_value".into());
        wtr.write_record(&header)?;
        let mut node = vec![T::zero(); self.dim()];
        for i in 0..self.len() {
            self.node_into(i, &mut node);
            let mut rec: Vec<String> = node.iter().map(|x| x.to_string()).collect();
            rec.push(self.log_values[i].to_string());
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    /// Reads the format of [`GridDensity::write_csv`].
    pub fn read_csv<R: BufRead>(mut r: R) -> Result<Self> {
        let mut meta = String::new();
        r.read_line(&mut meta)?;
        let meta = meta
            .trim()
            .strip_prefix('#')
            .ok_or_else(|| Error::Parse("missing '# frame=' metadata line".into()))?;
        let mut frame_tag = None;
        let mut n = None;
        let mut theta_star = None;
        for kv in meta.split_whitespace() {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("bad metadata entry {kv:?}")))?;
            match k {
                "frame" => frame_tag = Some(v.to_string()),
                "n" => {
                    n = Some(
                        v.parse::<usize>()
                            .map_err(|e| Error::Parse(e.to_string()))?,
                    )
                }
                "theta_star" => {
                    let ts: std::result::Result<Vec<f64>, _> =
                        v.split(';').map(str::parse::<f64>).collect();
                    theta_star = Some(
                        ts.map_err(|e| Error::Parse(e.to_string()))?
                            .into_iter()
                            .map(lit::<T>)
                            .collect::<Vec<T>>(),
                    );
                }
                _ => return Err(Error::Parse(format!("unknown metadata key {k:?}"))),
            }
        }
        let frame = match frame_tag.as_deref() {
            Some("theta") => Frame::Theta,
            Some("h") => Frame::Lan {
                theta_star: theta_star
                    .ok_or_else(|| Error::Parse("h frame without theta_star".into()))?,
                n: n.ok_or_else(|| Error::Parse("h frame without n".into()))?,
            },
            other => return Err(Error::Parse(format!("unknown frame {other:?}"))),
        };
        let mut rdr = csv::Reader::from_reader(r);
        let dim = rdr.headers()?.len().saturating_sub(1);
        if dim == 0 {
            return Err(Error::Parse("no coordinate columns".into()));
        }
        let mut coords: Vec<Vec<T>> = Vec::new();
        let mut log_values = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let vals: std::result::Result<Vec<f64>, _> =
                rec.iter().map(|s| s.trim().parse::<f64>()).collect();
            let vals = vals.map_err(|e| Error::Parse(e.to_string()))?;
            if vals.len() != dim + 1 {
                return Err(Error::Parse("ragged grid row".into()));
            }
            coords.push(vals[..dim].iter().map(|&v| lit(v)).collect());
            log_values.push(lit(vals[dim]));
        }
        let mut axes: Vec<Vec<T>> = vec![Vec::new(); dim];
        for (j, axis) in axes.iter_mut().enumerate() {
            let mut vals: Vec<T> = coords.iter().map(|c| c[j]).collect();
            vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            vals.dedup();
            *axis = vals;
        }
        let g = Self::from_normalized(axes, frame, log_values)?;
        let mut node = vec![T::zero(); dim];
        for (i, c) in coords.iter().enumerate() {
            g.node_into(i, &mut node);
            if node != *c {
                return Err(Error::Parse(format!("row {} is out of grid order", i + 1)));
            }
        }
        Ok(g)
    }
}

/// Coordinates of flat node `i` (row-major) on `axes`.
pub(crate) fn node_of<T: Real>(axes: &[Vec<T>], i: usize, out: &mut [T]) {
    let mut rem = i;
    for j in (0..axes.len()).rev() {
        let m = axes[j].len();
        out[j] = axes[j][rem % m];
        rem /= m;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn std_normal(m: usize, half: f64) -> GridDensity<f64> {
        GridDensity::from_log_fn(vec![linspace(-half, half, m)], Frame::Theta, |h| {
            -0.5 * h[0] * h[0]
        })
        .unwrap()
    }

    #[test]
    fn trapezoid_weights_sum_to_span() {
        let w = trapezoid_weights(&[0.0, 0.5, 2.0, 3.0]);
        assert_eq!(w, vec![0.25, 1.0, 1.25, 0.5]);
    }

    #[test]
    fn normalisation_and_moments() {
        let g = std_normal(4001, 12.0);
        assert!((g.total_mass() - 1.0).abs() < 1e-12);
        assert!((g.abs_moment(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((g.abs_moment(2.0).unwrap() - 1.0).abs() < 1e-10);
        assert!(g.mean()[0].abs() < 1e-14);
        assert!(g.abs_moment(-1.0).is_err());
    }

    #[test]
    fn two_dimensional_covariance() {
        let axes = vec![linspace(-10.0, 10.0, 201), linspace(-10.0, 10.0, 201)];
        // covariance [[1, 0.5], [0.5, 1]]
        let g = GridDensity::from_log_fn(axes, Frame::Theta, |h| {
            let (a, b) = (h[0], h[1]);
            -(a * a - a * b + b * b) / (2.0 * 0.75)
        })
        .unwrap();
        let c: SquareMatrix<f64> = g.covariance();
        assert!((c[(0, 0)] - 1.0).abs() < 1e-8);
        assert!((c[(0, 1)] - 0.5).abs() < 1e-8);
    }

    #[test]
    fn mismatched_axes_are_reported() {
        let a = std_normal(101, 5.0);
        let b = std_normal(103, 5.0);
        assert!(matches!(a.check_same_axes(&b), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn nan_log_value_is_rejected() {
        let r = GridDensity::new(
            vec![linspace(0.0, 1.0, 3)],
            Frame::Theta,
            vec![0.0, f64::NAN, 0.0],
        );
        assert!(r.is_err());
    }

    #[test]
    fn zero_density_nodes_are_allowed() {
        let g = GridDensity::new(
            vec![linspace(0.0, 1.0, 3)],
            Frame::Theta,
            vec![f64::NEG_INFINITY, 0.0, 0.0],
        )
        .unwrap();
        assert!((g.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn boundary_mass_of_a_centred_density_is_tiny() {
        let g = std_normal(401, 12.0);
        assert!(g.boundary_mass() < 1e-25);
        let off = GridDensity::from_log_fn(vec![linspace(-1.0, 1.0, 101)], Frame::Theta, |h| h[0])
            .unwrap();
        assert!(off.boundary_mass() > 1e-3);
    }

    proptest! {
        #[test]
        fn csv_round_trip(
            m in 3usize..30,
            shift in -3.0f64..3.0,
            n in 1usize..500,
            lan in any::<bool>(),
        ) {
            let frame = if lan {
                Frame::Lan { theta_star: vec![shift], n }
            } else {
                Frame::Theta
            };
            let g = GridDensity::from_log_fn(vec![linspace(-4.0, 4.0, m)], frame, |h| {
                -(h[0] - shift).powi(2)
            })
            .unwrap();
            let mut buf = Vec::new();
            g.write_csv(&mut buf).unwrap();
            let back = GridDensity::<f64>::read_csv(buf.as_slice()).unwrap();
            prop_assert_eq!(g, back);
        }
    }
}
