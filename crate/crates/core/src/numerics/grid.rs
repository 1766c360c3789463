//! Gauss–Legendre rules, composite panel grids, closed contours and sampled functions.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Gauss–Legendre rule on [-1, 1] with barycentric and differentiation data.
#[derive(Debug, Clone)]
pub struct LegendreRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    bary: Vec<f64>,
    diff: Vec<f64>,
}

impl LegendreRule {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidInput(format!(
                "Gauss-Legendre rule needs n >= 2, got {n}"
            )));
        }
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = nf * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        let bary: Vec<f64> = (0..n)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                s * ((1.0 - nodes[j] * nodes[j]) * weights[j]).sqrt()
            })
            .collect();
        let mut diff = vec![0.0; n * n];
        for i in 0..n {
            let mut diag = 0.0;
            for j in 0..n {
                if i != j {
                    let d = bary[j] / bary[i] / (nodes[i] - nodes[j]);
                    diff[i * n + j] = d;
                    diag -= d;
                }
            }
            diff[i * n + i] = diag;
        }
        Ok(Self {
            nodes,
            weights,
            bary,
            diff,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Barycentric interpolation of `values` at the reference point `s` (complex allowed).
    pub fn interpolate(&self, values: &[Complex64], s: Complex64) -> Complex64 {
        let mut num = Complex64::new(0.0, 0.0);
        let mut den = Complex64::new(0.0, 0.0);
        for (j, (&x, &v)) in self.nodes.iter().zip(&self.bary).enumerate() {
            let d = s - x;
            if d == Complex64::new(0.0, 0.0) {
                return values[j];
            }
            let t = v / d;
            num += t * values[j];
            den += t;
        }
        num / den
    }

    /// Spectral derivative on the reference interval.
    pub fn differentiate(&self, values: &[Complex64]) -> Vec<Complex64> {
        let n = self.len();
        (0..n)
            .map(|i| (0..n).map(|j| values[j] * self.diff[i * n + j]).sum())
            .collect()
    }
}

/// One Gauss–Legendre panel of a composite interval grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub start: usize,
    pub len: usize,
}

/// A closed, anticlockwise integration contour.
#[derive(Debug, Clone, PartialEq)]
pub enum Contour {
    Ellipse {
        center: Complex64,
        semi_real: f64,
        semi_imag: f64,
    },
    Polyline {
        vertices: Vec<Complex64>,
    },
}

impl Contour {
    /// Default contour around [-q, q] kept inside the analyticity strip of width c.
    pub fn default_for(q: f64, c: f64) -> Self {
        Contour::Ellipse {
            center: Complex64::new(0.0, 0.0),
            semi_real: 1.4 * q,
            semi_imag: 0.5 * (0.5 * c).min(q),
        }
    }

    /// Winding number of the contour around `z`.
    pub fn winding(&self, z: Complex64) -> i64 {
        match self {
            Contour::Ellipse {
                center,
                semi_real,
                semi_imag,
            } => {
                let d = z - center;
                let r = (d.re / semi_real).powi(2) + (d.im / semi_imag).powi(2);
                i64::from(r < 1.0)
            }
            Contour::Polyline { vertices } => {
                let n = vertices.len();
                let mut total = 0.0;
                for k in 0..n {
                    let a = vertices[k] - z;
                    let b = vertices[(k + 1) % n] - z;
                    total += (b / a).arg();
                }
                (total / (2.0 * PI)).round() as i64
            }
        }
    }

    /// Checks closure, orientation and enclosure of `[lo, hi]` on the real axis.
    pub fn validate_encloses(&self, lo: f64, hi: f64) -> Result<()> {
        match self {
            Contour::Ellipse {
                semi_real,
                semi_imag,
                ..
            } => {
                if !(*semi_real > 0.0 && *semi_imag > 0.0) {
                    return Err(Error::Geometry("ellipse semi-axes must be positive".into()));
                }
            }
            Contour::Polyline { vertices } => {
                if vertices.len() < 3 {
                    return Err(Error::Geometry("polyline needs at least 3 vertices".into()));
                }
                let n = vertices.len();
                let area: f64 = (0..n)
                    .map(|k| {
                        let a = vertices[k];
                        let b = vertices[(k + 1) % n];
                        a.re * b.im - b.re * a.im
                    })
                    .sum();
                if area <= 0.0 {
                    return Err(Error::Geometry("polyline must be anticlockwise".into()));
                }
            }
        }
        for k in 0..=32 {
            let x = lo + (hi - lo) * k as f64 / 32.0;
            if self.winding(Complex64::new(x, 0.0)) != 1 {
                return Err(Error::Geometry(format!(
                    "contour does not enclose the point {x}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Layout {
    Interval {
        panels: Vec<Panel>,
        rule: Arc<LegendreRule>,
    },
    Closed(Contour),
}

/// Quadrature nodes and weights; immutable once built.
#[derive(Debug, Clone)]
pub struct Grid {
    nodes: Vec<Complex64>,
    weights: Vec<Complex64>,
    layout: Layout,
}

impl Grid {
    /// Gauss–Legendre grid with `n` nodes on `[a, b]`.
    pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Self> {
        Self::composite(&[a, b], n)
    }

    /// Composite Gauss–Legendre grid with `n` nodes on each panel between consecutive breaks.
    pub fn composite(breaks: &[f64], n: usize) -> Result<Self> {
        if breaks.len() < 2 {
            return Err(Error::InvalidInput("need at least two breakpoints".into()));
        }
        let rule = Arc::new(LegendreRule::new(n)?);
        let mut nodes = Vec::with_capacity(n * (breaks.len() - 1));
        let mut weights = Vec::with_capacity(nodes.capacity());
        let mut panels = Vec::with_capacity(breaks.len() - 1);
        for w in breaks.windows(2) {
            let (a, b) = (w[0], w[1]);
            if !(b > a) || !a.is_finite() || !b.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "panel breaks must be finite and strictly increasing ({a}, {b})"
                )));
            }
            let half = 0.5 * (b - a);
            let mid = 0.5 * (a + b);
            panels.push(Panel {
                a,
                b,
                start: nodes.len(),
                len: n,
            });
            for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
                nodes.push(Complex64::new(mid + half * x, 0.0));
                weights.push(Complex64::new(half * wt, 0.0));
            }
        }
        Ok(Self {
            nodes,
            weights,
            layout: Layout::Interval { panels, rule },
        })
    }

    /// Quadrature on a closed contour: periodic trapezoid for ellipses,
    /// per-edge Gauss–Legendre for polylines.
    pub fn contour(contour: &Contour, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::InvalidInput("contour needs at least 4 nodes".into()));
        }
        let mut nodes = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        match contour {
            Contour::Ellipse {
                center,
                semi_real,
                semi_imag,
            } => {
                let dt = 2.0 * PI / n as f64;
                for k in 0..n {
                    let t = dt * k as f64;
                    let (s, c) = t.sin_cos();
                    nodes.push(center + Complex64::new(semi_real * c, semi_imag * s));
                    weights.push(Complex64::new(-semi_real * s, semi_imag * c) * dt);
                }
            }
            Contour::Polyline { vertices } => {
                let m = vertices.len();
                let per_edge = (n / m).max(2);
                let rule = LegendreRule::new(per_edge)?;
                for k in 0..m {
                    let a = vertices[k];
                    let b = vertices[(k + 1) % m];
                    let half = 0.5 * (b - a);
                    let mid = 0.5 * (a + b);
                    for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
                        nodes.push(mid + half * x);
                        weights.push(half * wt);
                    }
                }
            }
        }
        Ok(Self {
            nodes,
            weights,
            layout: Layout::Closed(contour.clone()),
        })
    }

    pub fn nodes(&self) -> &[Complex64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[Complex64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Real abscissae of an interval grid.
    pub fn real_nodes(&self) -> Vec<f64> {
        self.nodes.iter().map(|z| z.re).collect()
    }

    pub fn is_interval(&self) -> bool {
        matches!(self.layout, Layout::Interval { .. })
    }

    pub fn panels(&self) -> &[Panel] {
        match &self.layout {
            Layout::Interval { panels, .. } => panels,
            Layout::Closed(_) => &[],
        }
    }

    /// The closed contour behind a contour grid.
    pub fn contour_shape(&self) -> Option<&Contour> {
        match &self.layout {
            Layout::Closed(c) => Some(c),
            Layout::Interval { .. } => None,
        }
    }

    pub fn rule(&self) -> Option<&LegendreRule> {
        match &self.layout {
            Layout::Interval { rule, .. } => Some(rule),
            Layout::Closed(_) => None,
        }
    }

    /// Support `[a, b]` of an interval grid.
    pub fn support(&self) -> Option<(f64, f64)> {
        let p = self.panels();
        Some((p.first()?.a, p.last()?.b))
    }

    /// Σ w_i f_i.
    pub fn integrate(&self, values: &[Complex64]) -> Complex64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    /// Index of the panel containing the real point `x`.
    pub fn panel_index(&self, x: f64) -> Option<usize> {
        let panels = self.panels();
        let (lo, hi) = self.support()?;
        if x < lo || x > hi {
            return None;
        }
        let k = panels.partition_point(|p| p.b < x);
        Some(k.min(panels.len() - 1))
    }
}

/// Values sampled on the nodes of a shared grid.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl SampledFunction {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if grid.len() < 2 || values.len() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "sampled function needs matching lengths >= 2 (grid {}, values {})",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn<F: FnMut(Complex64) -> Complex64>(grid: Arc<Grid>, f: F) -> Result<Self> {
        let values = grid.nodes().iter().copied().map(f).collect();
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn nodes(&self) -> &[Complex64] {
        self.grid.nodes()
    }

    pub fn weights(&self) -> &[Complex64] {
        self.grid.weights()
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn integral(&self) -> Complex64 {
        self.grid.integrate(&self.values)
    }

    pub fn map<F: FnMut(Complex64, Complex64) -> Complex64>(&self, mut f: F) -> Self {
        let values = self
            .grid
            .nodes()
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| f(x, v))
            .collect();
        Self {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Polynomial interpolation inside the panel containing `x`.
    pub fn interpolate(&self, x: f64) -> Result<Complex64> {
        let k = self
            .grid
            .panel_index(x)
            .ok_or_else(|| Error::InvalidInput(format!("{x} outside the grid support")))?;
        let p = self.grid.panels()[k];
        let rule = self.grid.rule().expect("interval grid");
        let s = (2.0 * x - p.a - p.b) / (p.b - p.a);
        Ok(rule.interpolate(
            &self.values[p.start..p.start + p.len],
            Complex64::new(s, 0.0),
        ))
    }

    /// Panel-wise spectral derivative.
    pub fn derivative(&self) -> Result<Self> {
        let rule = self
            .grid
            .rule()
            .ok_or_else(|| Error::InvalidInput("derivative needs an interval grid".into()))?;
        let mut out = Vec::with_capacity(self.len());
        for p in self.grid.panels() {
            let scale = 2.0 / (p.b - p.a);
            out.extend(
                rule.differentiate(&self.values[p.start..p.start + p.len])
                    .into_iter()
                    .map(|d| d * scale),
            );
        }
        Self::new(self.grid.clone(), out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule() {
        let g = Grid::gauss_legendre(2, -1.0, 1.0).unwrap();
        let r = 1.0 / 3f64.sqrt();
        assert!((g.nodes()[0].re + r).abs() < 1e-15);
        assert!((g.nodes()[1].re - r).abs() < 1e-15);
        assert!((g.weights()[0].re - 1.0).abs() < 1e-15);
        assert!((g.weights()[1].re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn weights_sum_and_polynomial_exactness() {
        for &n in &[3usize, 17, 64, 96, 200] {
            let g = Grid::gauss_legendre(n, -0.7, 2.3).unwrap();
            let s: f64 = g.weights().iter().map(|w| w.re).sum();
            assert!((s - 3.0).abs() < 1e-14, "n={n}");
        }
        let g = Grid::gauss_legendre(64, 0.0, 1.0).unwrap();
        let v: Vec<Complex64> = g.nodes().iter().map(|x| x.powi(3)).collect();
        assert!((g.integrate(&v).re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn kernel_integral_matches_antiderivative() {
        let c = 1.0;
        let k = |x: Complex64| 2.0 * c / (x * x + c * c);
        let i64_ = {
            let g = Grid::gauss_legendre(64, -1.0, 1.0).unwrap();
            let v: Vec<_> = g.nodes().iter().map(|&x| k(x)).collect();
            g.integrate(&v).re
        };
        let i128_ = {
            let g = Grid::gauss_legendre(128, -1.0, 1.0).unwrap();
            let v: Vec<_> = g.nodes().iter().map(|&x| k(x)).collect();
            g.integrate(&v).re
        };
        assert!((i64_ - i128_).abs() < 1e-12);
        assert!((i64_ - PI).abs() < 1e-12);
    }

    #[test]
    fn nodes_strictly_increasing() {
        let g = Grid::composite(&[-2.0, -0.5, 0.1, 3.0], 20).unwrap();
        let x = g.real_nodes();
        assert!(x.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(g.panels().len(), 3);
    }

    #[test]
    fn interpolation_and_derivative() {
        let g = Arc::new(Grid::composite(&[-1.0, 0.0, 0.5, 2.0], 24).unwrap());
        let f = SampledFunction::from_fn(g, |x| (x * 1.3).sin() * x.exp()).unwrap();
        for &x in &[-0.93, -0.2, 0.0, 0.77, 1.99] {
            let want = (x * 1.3f64).sin() * x.exp();
            assert!((f.interpolate(x).unwrap().re - want).abs() < 1e-13);
        }
        let d = f.derivative().unwrap();
        for (x, v) in d.nodes().iter().zip(d.values()) {
            let want = 1.3 * (x * 1.3).cos() * x.exp() + (x * 1.3).sin() * x.exp();
            assert!((v - want).norm() < 1e-11);
        }
        assert!(f.interpolate(2.5).is_err());
    }

    #[test]
    fn ellipse_integrates_analytic_functions() {
        let c = Contour::default_for(1.0, 1.0);
        c.validate_encloses(-1.0, 1.0).unwrap();
        let g = Grid::contour(&c, 256).unwrap();
        // ∮ dz / (z - 0.3) = 2πi, ∮ z^2 dz = 0
        let v: Vec<_> = g.nodes().iter().map(|z| 1.0 / (z - 0.3)).collect();
        assert!((g.integrate(&v) - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-12);
        let v: Vec<_> = g.nodes().iter().map(|z| z * z).collect();
        assert!(g.integrate(&v).norm() < 1e-13);
    }

    #[test]
    fn polyline_orientation_and_enclosure() {
        let square = Contour::Polyline {
            vertices: vec![
                Complex64::new(-2.0, -1.0),
                Complex64::new(2.0, -1.0),
                Complex64::new(2.0, 1.0),
                Complex64::new(-2.0, 1.0),
            ],
        };
        square.validate_encloses(-1.0, 1.0).unwrap();
        assert!(square.validate_encloses(-3.0, 1.0).is_err());
        let reversed = Contour::Polyline {
            vertices: vec![
                Complex64::new(-2.0, 1.0),
                Complex64::new(2.0, 1.0),
                Complex64::new(2.0, -1.0),
                Complex64::new(-2.0, -1.0),
            ],
        };
        assert!(reversed.validate_encloses(-1.0, 1.0).is_err());
        let g = Grid::contour(&square, 128).unwrap();
        let v: Vec<_> = g.nodes().iter().map(|z| 1.0 / z).collect();
        assert!((g.integrate(&v) - Complex64::new(0.0, 2.0 * PI)).norm() < 1e-12);
    }
}
