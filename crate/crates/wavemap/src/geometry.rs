//! Target manifolds for wave maps.
//!
//! Every target exposes the Christoffel contraction `Γ(φ)(X, Y)` that drives
//! the null-coordinate equation `φ_uv = -Γ(φ)(φ_u, φ_v)`, the metric used to
//! measure tangent vectors, and (for embedded targets) a retraction.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Truncation tolerance for analytic chart series.
pub const SERIES_TOLERANCE: f64 = 1e-12;

/// Retraction leaves vectors whose norm is this close to one untouched,
/// which makes it idempotent in floating point.
const UNIT_SLACK: f64 = 4.0 * f64::EPSILON;

#[derive(Debug, Clone)]
pub enum TargetManifold {
    /// Unit sphere `S^{m-1}` in ambient coordinates of `R^m`.
    Sphere { m: usize },
    /// Arclength coordinate on the circle.
    CircleIntrinsic,
    /// Euclidean space; used for scalar model equations and free waves.
    Flat { dim: usize },
    /// Round `S^2` in stereographic coordinates, closed form.
    Stereographic,
    /// General chart given by truncated power series.
    Chart(Arc<AnalyticChart>),
}

/// Serializable description of a target, written into file headers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TargetDescriptor {
    Sphere { m: usize },
    CircleIntrinsic,
    Flat { dim: usize },
    Stereographic,
    StereographicSeries { radius: f64 },
    Chart { name: String, dim: usize, c: f64, r: f64, radius: f64 },
}

impl TargetDescriptor {
    pub fn build(&self) -> Result<TargetManifold> {
        match self {
            TargetDescriptor::Sphere { m } => TargetManifold::sphere_extrinsic(*m),
            TargetDescriptor::CircleIntrinsic => Ok(TargetManifold::circle_intrinsic()),
            TargetDescriptor::Flat { dim } => TargetManifold::flat(*dim),
            TargetDescriptor::Stereographic => Ok(TargetManifold::Stereographic),
            TargetDescriptor::StereographicSeries { radius } => {
                Ok(TargetManifold::Chart(Arc::new(AnalyticChart::stereographic_s2(*radius)?)))
            }
            TargetDescriptor::Chart { name, .. } => {
                invalid(format!("chart '{name}' cannot be rebuilt from its descriptor"))
            }
        }
    }
}

impl TargetManifold {
    pub fn sphere_extrinsic(m: usize) -> Result<Self> {
        if m < 2 {
            return invalid(format!("sphere needs ambient dimension m >= 2, got {m}"));
        }
        Ok(TargetManifold::Sphere { m })
    }

    pub fn circle_intrinsic() -> Self {
        TargetManifold::CircleIntrinsic
    }

    pub fn flat(dim: usize) -> Result<Self> {
        if dim == 0 {
            return invalid("flat target needs dim >= 1");
        }
        Ok(TargetManifold::Flat { dim })
    }

    pub fn analytic_chart(chart: AnalyticChart) -> Self {
        TargetManifold::Chart(Arc::new(chart))
    }

    /// Number of coordinates stored per lattice node.
    pub fn chart_dim(&self) -> usize {
        match self {
            TargetManifold::Sphere { m } => *m,
            TargetManifold::CircleIntrinsic => 1,
            TargetManifold::Flat { dim } => *dim,
            TargetManifold::Stereographic => 2,
            TargetManifold::Chart(c) => c.dim,
        }
    }

    pub fn is_sphere(&self) -> bool {
        matches!(self, TargetManifold::Sphere { .. })
    }

    pub fn has_embedding(&self) -> bool {
        self.is_sphere()
    }

    pub fn descriptor(&self) -> TargetDescriptor {
        match self {
            TargetManifold::Sphere { m } => TargetDescriptor::Sphere { m: *m },
            TargetManifold::CircleIntrinsic => TargetDescriptor::CircleIntrinsic,
            TargetManifold::Flat { dim } => TargetDescriptor::Flat { dim: *dim },
            TargetManifold::Stereographic => TargetDescriptor::Stereographic,
            TargetManifold::Chart(c) => TargetDescriptor::Chart {
                name: c.name.clone(),
                dim: c.dim,
                c: c.certificate.c,
                r: c.certificate.r,
                radius: c.radius,
            },
        }
    }

    /// Radius within which chart evaluations are trusted.
    pub fn analyticity_radius(&self) -> f64 {
        match self {
            TargetManifold::Chart(c) => c.radius,
            _ => f64::INFINITY,
        }
    }

    pub fn check_domain(&self, p: &[f64]) -> Result<()> {
        if let TargetManifold::Chart(c) = self {
            c.check_domain(p)?;
        }
        Ok(())
    }

    /// Writes `Γ(p)(x, y)` into `out`.
    pub fn contract_into(&self, p: &[f64], x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            TargetManifold::Sphere { .. } => {
                let dot: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
                for (o, pk) in out.iter_mut().zip(p) {
                    *o = pk * dot;
                }
            }
            TargetManifold::CircleIntrinsic | TargetManifold::Flat { .. } => {
                out.iter_mut().for_each(|o| *o = 0.0);
            }
            TargetManifold::Stereographic => {
                // conformal metric e^{2w} δ with ∂_i w = -2 x_i / (1 + |x|^2)
                let s = 1.0 + p[0] * p[0] + p[1] * p[1];
                let dw = [-2.0 * p[0] / s, -2.0 * p[1] / s];
                let xdw = x[0] * dw[0] + x[1] * dw[1];
                let ydw = y[0] * dw[0] + y[1] * dw[1];
                let xy = x[0] * y[0] + x[1] * y[1];
                for k in 0..2 {
                    out[k] = x[k] * ydw + y[k] * xdw - xy * dw[k];
                }
            }
            TargetManifold::Chart(c) => c.contract_into(p, x, y, out)?,
        }
        Ok(())
    }

    pub fn contract(&self, p: &[f64], x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.chart_dim()];
        self.contract_into(p, x, y, &mut out)?;
        Ok(out)
    }

    /// Full symbol array `Γ^k_{ab}(p)`, stored `[k][a][b]`.
    pub fn christoffel(&self, p: &[f64]) -> Result<Vec<f64>> {
        let d = self.chart_dim();
        if let TargetManifold::Chart(c) = self {
            return c.christoffel(p);
        }
        let mut gam = vec![0.0; d * d * d];
        let mut ea = vec![0.0; d];
        let mut eb = vec![0.0; d];
        let mut out = vec![0.0; d];
        for a in 0..d {
            for b in 0..d {
                ea.iter_mut().for_each(|v| *v = 0.0);
                eb.iter_mut().for_each(|v| *v = 0.0);
                ea[a] = 1.0;
                eb[b] = 1.0;
                self.contract_into(p, &ea, &eb, &mut out)?;
                for k in 0..d {
                    gam[(k * d + a) * d + b] = out[k];
                }
            }
        }
        Ok(gam)
    }

    /// Metric matrix `h_{ab}(p)`, row-major.
    pub fn metric(&self, p: &[f64]) -> Result<Vec<f64>> {
        let d = self.chart_dim();
        match self {
            TargetManifold::Stereographic => {
                let s = 1.0 + p[0] * p[0] + p[1] * p[1];
                let c = 4.0 / (s * s);
                Ok(vec![c, 0.0, 0.0, c])
            }
            TargetManifold::Chart(c) => c.metric(p),
            _ => {
                let mut h = vec![0.0; d * d];
                for a in 0..d {
                    h[a * d + a] = 1.0;
                }
                Ok(h)
            }
        }
    }

    /// `|v|_h` at base point `p`.
    pub fn metric_length(&self, p: &[f64], v: &[f64]) -> Result<f64> {
        match self {
            TargetManifold::Sphere { .. }
            | TargetManifold::CircleIntrinsic
            | TargetManifold::Flat { .. } => Ok(v.iter().map(|a| a * a).sum::<f64>().sqrt()),
            TargetManifold::Stereographic => {
                let s = 1.0 + p[0] * p[0] + p[1] * p[1];
                Ok(2.0 / s * (v[0] * v[0] + v[1] * v[1]).sqrt())
            }
            TargetManifold::Chart(_) => {
                let d = self.chart_dim();
                let h = self.metric(p)?;
                let mut q = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        q += h[a * d + b] * v[a] * v[b];
                    }
                }
                Ok(q.max(0.0).sqrt())
            }
        }
    }

    /// `h_p(x, y)`.
    pub fn metric_inner(&self, p: &[f64], x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            TargetManifold::Sphere { .. }
            | TargetManifold::CircleIntrinsic
            | TargetManifold::Flat { .. } => Ok(x.iter().zip(y).map(|(a, b)| a * b).sum()),
            TargetManifold::Stereographic => {
                let s = 1.0 + p[0] * p[0] + p[1] * p[1];
                Ok(4.0 / (s * s) * (x[0] * y[0] + x[1] * y[1]))
            }
            TargetManifold::Chart(_) => {
                let d = self.chart_dim();
                let h = self.metric(p)?;
                let mut q = 0.0;
                for a in 0..d {
                    for b in 0..d {
                        q += h[a * d + b] * x[a] * y[b];
                    }
                }
                Ok(q)
            }
        }
    }

    /// Projects onto the manifold; identity for chart targets.
    pub fn retract_in_place(&self, p: &mut [f64]) {
        if let TargetManifold::Sphere { .. } = self {
            let n = p.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 0.0 && (n - 1.0).abs() > UNIT_SLACK {
                p.iter_mut().for_each(|a| *a /= n);
            }
        }
    }

    pub fn retract(&self, p: &[f64]) -> Vec<f64> {
        let mut q = p.to_vec();
        self.retract_in_place(&mut q);
        q
    }
}

/// A tangent vector with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    pub base: Vec<f64>,
    pub components: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Vec<f64>, components: Vec<f64>) -> Self {
        Self { base, components }
    }
}

pub fn metric_length(m: &TargetManifold, v: &TangentVector) -> Result<f64> {
    let d = m.chart_dim();
    if v.base.len() != d || v.components.len() != d {
        return invalid(format!("tangent vector has wrong dimension for chart_dim {d}"));
    }
    m.check_domain(&v.base)?;
    m.metric_length(&v.base, &v.components)
}

/// Exponential coefficient bound `|c_α| <= C r^{-|α|}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesCertificate {
    pub c: f64,
    pub r: f64,
}

/// Multivariate power series stored as sparse monomials sorted by degree.
#[derive(Debug, Clone, Default)]
pub struct PowerSeries {
    terms: Vec<(Vec<u32>, f64)>,
    degrees: Vec<u32>,
}

impl PowerSeries {
    pub fn new(mut terms: Vec<(Vec<u32>, f64)>) -> Self {
        terms.retain(|(_, c)| *c != 0.0);
        terms.sort_by_key(|(e, _)| e.iter().sum::<u32>());
        let degrees = terms.iter().map(|(e, _)| e.iter().sum()).collect();
        Self { terms, degrees }
    }

    pub fn constant(c: f64, dim: usize) -> Self {
        Self::new(vec![(vec![0; dim], c)])
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn max_degree(&self) -> u32 {
        self.degrees.last().copied().unwrap_or(0)
    }

    fn eval(&self, powers: &[Vec<f64>], max_degree: u32) -> f64 {
        let mut acc = 0.0;
        for ((exps, c), &deg) in self.terms.iter().zip(&self.degrees) {
            if deg > max_degree {
                break;
            }
            let mut mono = *c;
            for (var, &e) in exps.iter().enumerate() {
                mono *= powers[var][e as usize];
            }
            acc += mono;
        }
        acc
    }
}

/// General chart manifold with series-evaluated metric and symbols.
#[derive(Debug, Clone)]
pub struct AnalyticChart {
    pub name: String,
    pub dim: usize,
    metric: Vec<PowerSeries>,
    christoffel: Vec<PowerSeries>,
    pub certificate: SeriesCertificate,
    pub radius: f64,
    stored_degree: u32,
    /// Stored series are polynomials with no tail.
    complete: bool,
}

impl AnalyticChart {
    /// Builds a chart from metric series `h_{ab}` (`dim²` entries, row-major)
    /// and symbol series `Γ^k_{ab}` (`dim³` entries, `[k][a][b]`).
    ///
    /// The series are treated as exact up to the largest stored degree; the
    /// certificate bounds the discarded tail.
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        metric: Vec<PowerSeries>,
        christoffel: Vec<PowerSeries>,
        certificate: SeriesCertificate,
        radius: f64,
    ) -> Result<Self> {
        if dim == 0 || metric.len() != dim * dim || christoffel.len() != dim * dim * dim {
            return invalid("series arrays do not match the chart dimension");
        }
        if !(certificate.c > 0.0 && certificate.r > 0.0) {
            return invalid("certificate constants must be positive");
        }
        if !(radius > 0.0 && radius < certificate.r) {
            return invalid(format!(
                "radius {radius} must lie in (0, r) with r = {}",
                certificate.r
            ));
        }
        for s in metric.iter().chain(&christoffel) {
            for (exps, c) in s.terms() {
                if exps.len() != dim {
                    return invalid("monomial exponent length differs from chart dimension");
                }
                let deg: u32 = exps.iter().sum();
                let bound = certificate.c * certificate.r.powi(-(deg as i32));
                if c.abs() > bound * (1.0 + 1e-12) {
                    return Err(Error::SeriesBound(format!(
                        "|{c}| > {bound} at degree {deg}"
                    )));
                }
            }
        }
        let stored_degree = metric
            .iter()
            .chain(&christoffel)
            .map(PowerSeries::max_degree)
            .max()
            .unwrap_or(0);
        Ok(Self {
            name: name.into(),
            dim,
            metric,
            christoffel,
            certificate,
            radius,
            stored_degree,
            complete: false,
        })
    }

    /// Marks the stored series as complete polynomials, so evaluation never
    /// needs degrees beyond the stored ones.
    pub fn into_complete(mut self) -> Self {
        self.complete = true;
        self
    }

    /// Flat chart: `h = δ`, `Γ = 0`.
    pub fn flat(dim: usize, radius: f64) -> Result<Self> {
        let mut metric = Vec::with_capacity(dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                metric.push(PowerSeries::constant(if a == b { 1.0 } else { 0.0 }, dim));
            }
        }
        let christoffel = vec![PowerSeries::default(); dim * dim * dim];
        Self::new(
            "flat",
            dim,
            metric,
            christoffel,
            SeriesCertificate { c: 1.0, r: 2.0 * radius },
            radius,
        )
        .map(Self::into_complete)
    }

    /// Round `S^2` in stereographic coordinates, expanded around the origin.
    ///
    /// `h = 4 δ / (1 + |x|²)²`; the series converge for `|x| < 1` and the
    /// certificate uses `r = 0.7`.
    pub fn stereographic_s2(radius: f64) -> Result<Self> {
        const STORED: u32 = 240;
        let r = 0.7;
        let binom = binomial_table(STORED as usize / 2 + 1);
        // (x1² + x2²)^k expanded
        let sq_power = |k: usize| -> Vec<(Vec<u32>, f64)> {
            (0..=k)
                .map(|a| (vec![2 * a as u32, 2 * (k - a) as u32], binom[k][a]))
                .collect()
        };
        let mut conformal = Vec::new();
        let mut dw = [Vec::new(), Vec::new()];
        for k in 0..=(STORED as usize / 2) {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            for (e, c) in sq_power(k) {
                conformal.push((e.clone(), 4.0 * (k as f64 + 1.0) * sign * c));
                if 2 * k + 1 <= STORED as usize {
                    for (i, dwi) in dw.iter_mut().enumerate() {
                        let mut ei = e.clone();
                        ei[i] += 1;
                        dwi.push((ei, -2.0 * sign * c));
                    }
                }
            }
        }
        let zero = PowerSeries::default();
        let h = PowerSeries::new(conformal);
        let metric = vec![h.clone(), zero.clone(), zero.clone(), h];
        let dws = [PowerSeries::new(dw[0].clone()), PowerSeries::new(dw[1].clone())];
        let neg = |s: &PowerSeries| {
            PowerSeries::new(s.terms().iter().map(|(e, c)| (e.clone(), -c)).collect())
        };
        // Γ^k_{ab} = δ_{ka} ∂_b w + δ_{kb} ∂_a w - δ_{ab} ∂_k w
        let mut christoffel = Vec::with_capacity(8);
        for k in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    let mut terms: Vec<(Vec<u32>, f64)> = Vec::new();
                    if k == a {
                        terms.extend(dws[b].terms().iter().cloned());
                    }
                    if k == b {
                        terms.extend(dws[a].terms().iter().cloned());
                    }
                    if a == b {
                        terms.extend(neg(&dws[k]).terms().iter().cloned());
                    }
                    christoffel.push(merge_terms(terms));
                }
            }
        }
        Self::new(
            "stereographic-s2",
            2,
            metric,
            christoffel,
            SeriesCertificate { c: 12.0, r },
            radius,
        )
    }

    pub fn check_domain(&self, p: &[f64]) -> Result<()> {
        let norm: f64 = p.iter().map(|a| a.abs()).sum();
        if !(norm < self.radius) {
            return Err(Error::OutsideDomain { norm, radius: self.radius });
        }
        Ok(())
    }

    /// Smallest degree whose certified tail is below the tolerance.
    pub fn truncation_degree(&self, p: &[f64]) -> Result<u32> {
        self.check_domain(p)?;
        let q: f64 = p.iter().map(|a| a.abs()).sum::<f64>() / self.certificate.r;
        if q == 0.0 {
            return Ok(0);
        }
        // tail after degree K is at most C q^{K+1} / (1 - q)
        let target = SERIES_TOLERANCE * (1.0 - q) / self.certificate.c;
        let k = (target.ln() / q.ln()).ceil() - 1.0;
        let k = k.max(0.0) as u32;
        if self.complete {
            return Ok(k.min(self.stored_degree));
        }
        if k > self.stored_degree {
            return invalid(format!(
                "truncation degree {k} exceeds stored degree {}",
                self.stored_degree
            ));
        }
        Ok(k)
    }

    fn powers(&self, p: &[f64], k: u32) -> Vec<Vec<f64>> {
        p.iter()
            .map(|&x| {
                let mut v = Vec::with_capacity(k as usize + 1);
                let mut acc = 1.0;
                for _ in 0..=k {
                    v.push(acc);
                    acc *= x;
                }
                v
            })
            .collect()
    }

    pub fn metric(&self, p: &[f64]) -> Result<Vec<f64>> {
        let k = self.truncation_degree(p)?;
        let pw = self.powers(p, k);
        Ok(self.metric.iter().map(|s| s.eval(&pw, k)).collect())
    }

    pub fn christoffel(&self, p: &[f64]) -> Result<Vec<f64>> {
        let k = self.truncation_degree(p)?;
        let pw = self.powers(p, k);
        Ok(self.christoffel.iter().map(|s| s.eval(&pw, k)).collect())
    }

    fn contract_into(&self, p: &[f64], x: &[f64], y: &[f64], out: &mut [f64]) -> Result<()> {
        let d = self.dim;
        let gam = self.christoffel(p)?;
        for k in 0..d {
            let mut acc = 0.0;
            for a in 0..d {
                for b in 0..d {
                    acc += gam[(k * d + a) * d + b] * x[a] * y[b];
                }
            }
            out[k] = acc;
        }
        Ok(())
    }
}

fn merge_terms(mut terms: Vec<(Vec<u32>, f64)>) -> PowerSeries {
    terms.sort_by(|a, b| a.0.cmp(&b.0));
    let mut merged: Vec<(Vec<u32>, f64)> = Vec::new();
    for (e, c) in terms {
        match merged.last_mut() {
            Some((le, lc)) if *le == e => *lc += c,
            _ => merged.push((e, c)),
        }
    }
    PowerSeries::new(merged)
}

fn binomial_table(n: usize) -> Vec<Vec<f64>> {
    let mut t = vec![vec![1.0]];
    for k in 1..=n {
        let prev = &t[k - 1];
        let mut row = vec![1.0; k + 1];
        for a in 1..k {
            row[a] = prev[a - 1] + prev[a];
        }
        t.push(row);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_contraction_examples() {
        let s2 = TargetManifold::sphere_extrinsic(2).unwrap();
        assert_eq!(s2.contract(&[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]).unwrap(), vec![1.0, 0.0]);
        assert_eq!(
            s2.contract(&[1.0, 0.0], &[0.0, 1.0], &[0.0, -1.0]).unwrap(),
            vec![-1.0, 0.0]
        );
        let s3 = TargetManifold::sphere_extrinsic(3).unwrap();
        assert_eq!(
            s3.contract(&[0.0, 0.0, 1.0], &[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap(),
            vec![0.0, 0.0, 0.0]
        );
        assert!(TargetManifold::sphere_extrinsic(1).is_err());
    }

    #[test]
    fn lengths() {
        let s1 = TargetManifold::sphere_extrinsic(2).unwrap();
        let v = TangentVector::new(vec![0.0, 1.0], vec![1.0, 0.0]);
        assert_eq!(metric_length(&s1, &v).unwrap(), 1.0);
        let c = TargetManifold::circle_intrinsic();
        assert_eq!(metric_length(&c, &TangentVector::new(vec![0.3], vec![3.0])).unwrap(), 3.0);
        assert_eq!(metric_length(&c, &TangentVector::new(vec![0.3], vec![2.0])).unwrap(), 2.0);
        assert_eq!(c.contract(&[0.1], &[1.0], &[2.0]).unwrap(), vec![0.0]);
        let st = TargetManifold::Stereographic;
        let v = TangentVector::new(vec![0.0, 0.0], vec![1.0, 0.0]);
        assert_eq!(metric_length(&st, &v).unwrap(), 2.0);
        let series = TargetManifold::analytic_chart(AnalyticChart::stereographic_s2(0.6).unwrap());
        assert!((metric_length(&series, &v).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn flat_chart_matches_circle() {
        let chart = TargetManifold::analytic_chart(AnalyticChart::flat(1, 1.0).unwrap());
        let circle = TargetManifold::circle_intrinsic();
        for &x in &[-0.5, 0.0, 0.7] {
            assert_eq!(chart.metric(&[x]).unwrap(), circle.metric(&[x]).unwrap());
            assert_eq!(chart.christoffel(&[x]).unwrap(), circle.christoffel(&[x]).unwrap());
        }
    }

    #[test]
    fn stereographic_series_matches_closed_form() {
        let chart = AnalyticChart::stereographic_s2(0.6).unwrap();
        let closed = TargetManifold::Stereographic;
        for p in [[0.5, 0.0], [0.0, -0.5], [0.2, 0.25], [-0.1, 0.05]] {
            let hs = chart.metric(&p).unwrap();
            let hc = closed.metric(&p).unwrap();
            let gs = chart.christoffel(&p).unwrap();
            let gc = closed.christoffel(&p).unwrap();
            for (a, b) in hs.iter().zip(&hc).chain(gs.iter().zip(&gc)) {
                assert!((a - b).abs() < 1e-11, "{a} vs {b} at {p:?}");
            }
        }
    }

    #[test]
    fn chart_domain_guard() {
        let chart = AnalyticChart::stereographic_s2(0.6).unwrap();
        let m = TargetManifold::analytic_chart(chart);
        assert!(matches!(m.metric(&[1.2, 0.0]), Err(Error::OutsideDomain { .. })));
        let v = TangentVector::new(vec![1.2, 0.0], vec![1.0, 0.0]);
        assert!(metric_length(&m, &v).is_err());
    }

    #[test]
    fn certificate_violation_rejected() {
        let bad = PowerSeries::new(vec![(vec![3], 100.0)]);
        let r = AnalyticChart::new(
            "bad",
            1,
            vec![PowerSeries::constant(1.0, 1)],
            vec![bad],
            SeriesCertificate { c: 1.0, r: 1.0 },
            0.5,
        );
        assert!(matches!(r, Err(Error::SeriesBound(_))));
    }
}
