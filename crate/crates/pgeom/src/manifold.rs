//! Charts, coordinate fields and deterministic sample plans.
//!
//! All geometric objects are plain data: matrices or vectors of [`Expr`]
//! components with respect to the coordinate coframe. Operations take the
//! pieces they need explicitly; nothing carries a back-reference to its
//! chart.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::GeomError;
use crate::expr::{self, Evaluator, Expr, ParseError};

/// Ordered coordinate names plus a rectangular sample domain.
#[derive(Debug, Clone)]
pub struct Chart {
    coords: Vec<String>,
    domain: Vec<[f64; 2]>,
}

impl Chart {
    pub fn new(coords: Vec<String>, domain: Vec<[f64; 2]>) -> Result<Self, GeomError> {
        if coords.is_empty() {
            return Err(GeomError::InvalidChart("dimension must be >= 1".into()));
        }
        if coords.len() != domain.len() {
            return Err(GeomError::InvalidChart(format!(
                "{} coordinates but {} domain intervals",
                coords.len(),
                domain.len()
            )));
        }
        for (i, name) in coords.iter().enumerate() {
            if coords[..i].contains(name) {
                return Err(GeomError::InvalidChart(format!(
                    "duplicate coordinate name `{name}`"
                )));
            }
        }
        for (name, [lo, hi]) in coords.iter().zip(&domain) {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeomError::InvalidChart(format!(
                    "domain of `{name}` must be a finite interval [lo, hi] with lo < hi, got [{lo}, {hi}]"
                )));
            }
        }
        Ok(Chart { coords, domain })
    }

    /// Unit-cube chart `[-1, 1]^dim` with names `x1..xdim`.
    pub fn unit(dim: usize) -> Chart {
        Chart::new(
            (1..=dim).map(|i| format!("x{i}")).collect(),
            vec![[-1.0, 1.0]; dim],
        )
        .expect("valid chart")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    pub fn domain(&self) -> &[[f64; 2]] {
        &self.domain
    }

    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.coords.iter().position(|c| c == name)
    }

    /// The coordinate function `x^i` as an expression.
    pub fn var(&self, index: usize) -> Expr {
        Expr::var(self.coords[index].as_str(), index)
    }

    pub fn parse_expr(&self, src: &str) -> Result<Expr, ParseError> {
        expr::parse(src, &self.coords)
    }

    /// Concatenated chart for a product; fails on coordinate name collisions.
    pub fn concat(&self, other: &Chart) -> Result<Chart, GeomError> {
        for name in other.coords() {
            if self.coord_index(name).is_some() {
                return Err(GeomError::NameCollision(name.clone()));
            }
        }
        let mut coords = self.coords.clone();
        coords.extend_from_slice(other.coords());
        let mut domain = self.domain.clone();
        domain.extend_from_slice(other.domain());
        Chart::new(coords, domain)
    }
}

/// Deterministic list of interior sample points for a `(seed, count, domain)`
/// triple.
#[derive(Debug, Clone)]
pub struct SamplePlan {
    seed: u64,
    points: Vec<Vec<f64>>,
}

impl SamplePlan {
    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn count(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Restrict every point to the coordinate range `[lo, hi)`, projecting a
    /// product-chart plan onto one factor.
    pub fn project(&self, lo: usize, hi: usize) -> SamplePlan {
        SamplePlan {
            seed: self.seed,
            points: self.points.iter().map(|p| p[lo..hi].to_vec()).collect(),
        }
    }
}

/// Draw `count` points from a seeded uniform generator, shrunk 1% toward the
/// domain center so evaluation never lands on the boundary.
pub fn sample_plan(chart: &Chart, seed: u64, count: usize) -> Result<SamplePlan, GeomError> {
    if count == 0 {
        return Err(GeomError::EmptySamplePlan);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let p = chart
            .domain()
            .iter()
            .map(|[lo, hi]| {
                let u: f64 = rng.gen();
                let raw = lo + u * (hi - lo);
                let center = 0.5 * (lo + hi);
                center + 0.99 * (raw - center)
            })
            .collect();
        points.push(p);
    }
    Ok(SamplePlan { seed, points })
}

/// Square matrix of expressions, row-major.
#[derive(Debug, Clone)]
pub struct ExprMatrix {
    dim: usize,
    entries: Vec<Expr>,
}

impl ExprMatrix {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Expr) -> ExprMatrix {
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(f(i, j));
            }
        }
        ExprMatrix { dim, entries }
    }

    pub fn identity(dim: usize) -> ExprMatrix {
        ExprMatrix::from_fn(dim, |i, j| if i == j { Expr::one() } else { Expr::zero() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, i: usize, j: usize) -> &Expr {
        &self.entries[i * self.dim + j]
    }

    /// Numeric value of every entry at a point, row-major.
    pub fn eval<'a>(&'a self, ev: &mut Evaluator<'a>) -> Result<Vec<f64>, expr::EvalError> {
        self.entries.iter().map(|e| ev.eval(e)).collect()
    }
}

/// Inner product on the cotangent bundle: components `g^{ij} = g(dx^i, dx^j)`.
#[derive(Debug, Clone)]
pub struct Cometric {
    mat: ExprMatrix,
}

impl Cometric {
    pub fn new(mat: ExprMatrix) -> Cometric {
        Cometric { mat }
    }

    pub fn identity(dim: usize) -> Cometric {
        Cometric::new(ExprMatrix::identity(dim))
    }

    pub fn diagonal(entries: Vec<Expr>) -> Cometric {
        let dim = entries.len();
        Cometric::new(ExprMatrix::from_fn(dim, |i, j| {
            if i == j {
                entries[i].clone()
            } else {
                Expr::zero()
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn at(&self, i: usize, j: usize) -> &Expr {
        self.mat.at(i, j)
    }

    pub fn matrix(&self) -> &ExprMatrix {
        &self.mat
    }
}

/// Covariant metric `g~_{ij}`, the matrix inverse of a cometric.
#[derive(Debug, Clone)]
pub struct CovariantMetric {
    mat: ExprMatrix,
}

impl CovariantMetric {
    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn at(&self, i: usize, j: usize) -> &Expr {
        self.mat.at(i, j)
    }

    pub fn matrix(&self) -> &ExprMatrix {
        &self.mat
    }

    /// Reinterpret the component matrix as a cometric (used to check that
    /// inversion is an involution).
    pub fn as_cometric(&self) -> Cometric {
        Cometric::new(self.mat.clone())
    }
}

/// Antisymmetric bivector field: components `Pi^{ij} = Pi(dx^i, dx^j)`.
#[derive(Debug, Clone)]
pub struct BivectorField {
    mat: ExprMatrix,
}

impl BivectorField {
    /// Build from the strict upper triangle; the lower triangle and diagonal
    /// are derived, making antisymmetry violations unrepresentable.
    pub fn from_upper(dim: usize, upper: &[(usize, usize, Expr)]) -> BivectorField {
        let mut mat = ExprMatrix::from_fn(dim, |_, _| Expr::zero());
        for (i, j, e) in upper {
            assert!(
                i < j && *j < dim,
                "upper-triangle index ({i},{j}) out of range"
            );
            mat.entries[i * dim + j] = e.clone();
            mat.entries[j * dim + i] = Expr::neg(e.clone());
        }
        BivectorField { mat }
    }

    pub fn zero(dim: usize) -> BivectorField {
        BivectorField::from_upper(dim, &[])
    }

    /// 2-dimensional field with the single component `Pi^{12}`.
    pub fn r2(pi12: Expr) -> BivectorField {
        BivectorField::from_upper(2, &[(0, 1, pi12)])
    }

    /// Wrap a full component matrix. The caller is responsible for
    /// antisymmetry; `antisymmetry_residual` checks it numerically.
    pub fn from_matrix(mat: ExprMatrix) -> BivectorField {
        BivectorField { mat }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn at(&self, i: usize, j: usize) -> &Expr {
        self.mat.at(i, j)
    }

    pub fn matrix(&self) -> &ExprMatrix {
        &self.mat
    }
}

/// 1-form components `eta_i` with respect to the coordinate coframe.
#[derive(Debug, Clone)]
pub struct OneForm {
    comps: Vec<Expr>,
}

impl OneForm {
    pub fn new(comps: Vec<Expr>) -> OneForm {
        OneForm { comps }
    }

    pub fn zero(dim: usize) -> OneForm {
        OneForm::new(vec![Expr::zero(); dim])
    }

    /// The coframe element `dx^i`.
    pub fn basis(dim: usize, i: usize) -> OneForm {
        let mut comps = vec![Expr::zero(); dim];
        comps[i] = Expr::one();
        OneForm::new(comps)
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn at(&self, i: usize) -> &Expr {
        &self.comps[i]
    }

    pub fn comps(&self) -> &[Expr] {
        &self.comps
    }

    pub fn add(&self, other: &OneForm) -> OneForm {
        OneForm::new(
            self.comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn scale(&self, s: &Expr) -> OneForm {
        OneForm::new(self.comps.iter().map(|c| s * c).collect())
    }

    /// Exterior derivative of a scalar field.
    pub fn differential(f: &Expr, dim: usize) -> OneForm {
        OneForm::new((0..dim).map(|i| f.diff(i)).collect())
    }
}

/// `g(a, b) = sum_{ij} g^{ij} a_i b_j` as a scalar field.
pub fn pair_g(g: &Cometric, a: &OneForm, b: &OneForm) -> Expr {
    let dim = g.dim();
    Expr::sum((0..dim).flat_map(|i| (0..dim).map(move |j| g.at(i, j) * a.at(i) * b.at(j))))
}

/// `Pi(a, b) = sum_{ij} Pi^{ij} a_i b_j` as a scalar field.
pub fn pair_pi(pi: &BivectorField, a: &OneForm, b: &OneForm) -> Expr {
    let dim = pi.dim();
    Expr::sum((0..dim).flat_map(|i| (0..dim).map(move |j| pi.at(i, j) * a.at(i) * b.at(j))))
}

fn det_expr(m: &[Vec<Expr>]) -> Expr {
    let n = m.len();
    if n == 0 {
        return Expr::one();
    }
    if n == 1 {
        return m[0][0].clone();
    }
    let mut acc = Expr::zero();
    for col in 0..n {
        let minor: Vec<Vec<Expr>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(c, _)| *c != col)
                    .map(|(_, e)| e.clone())
                    .collect()
            })
            .collect();
        let term = Expr::mul(m[0][col].clone(), det_expr(&minor));
        acc = if col % 2 == 0 {
            Expr::add(acc, term)
        } else {
            Expr::sub(acc, term)
        };
    }
    acc
}

fn minor_det(m: &[Vec<Expr>], skip_row: usize, skip_col: usize) -> Expr {
    let sub: Vec<Vec<Expr>> = m
        .iter()
        .enumerate()
        .filter(|(r, _)| *r != skip_row)
        .map(|(_, row)| {
            row.iter()
                .enumerate()
                .filter(|(c, _)| *c != skip_col)
                .map(|(_, e)| e.clone())
                .collect()
        })
        .collect();
    det_expr(&sub)
}

/// Symbolic inverse via adjugate/determinant (dimension <= 4), verified at
/// every plan point: errors if the determinant vanishes there, and the
/// numeric product with `g` must be the identity within 1e-10.
pub fn invert_cometric(g: &Cometric, plan: &SamplePlan) -> Result<CovariantMetric, GeomError> {
    let dim = g.dim();
    if dim > 4 {
        return Err(GeomError::DimensionTooLarge(dim));
    }
    let rows: Vec<Vec<Expr>> = (0..dim)
        .map(|i| (0..dim).map(|j| g.at(i, j).clone()).collect())
        .collect();
    let det = det_expr(&rows);
    let inv = ExprMatrix::from_fn(dim, |i, j| {
        // adj(i,j) = (-1)^{i+j} * minor(j, i)
        let cof = minor_det(&rows, j, i);
        let signed = if (i + j) % 2 == 0 {
            cof
        } else {
            Expr::neg(cof)
        };
        Expr::div(signed, det.clone())
    });

    for p in plan.points() {
        let mut ev = Evaluator::new(p);
        let d = ev.eval(&det).map_err(|e| GeomError::eval_at(p, e))?;
        if d.abs() < 1e-12 {
            return Err(GeomError::SingularAtPoint {
                point: p.clone(),
                det: d.abs(),
            });
        }
        let gv = g
            .matrix()
            .eval(&mut ev)
            .map_err(|e| GeomError::eval_at(p, e))?;
        let iv = inv.eval(&mut ev).map_err(|e| GeomError::eval_at(p, e))?;
        for i in 0..dim {
            for k in 0..dim {
                let prod: f64 = (0..dim).map(|j| gv[i * dim + j] * iv[j * dim + k]).sum();
                let target = if i == k { 1.0 } else { 0.0 };
                if (prod - target).abs() > 1e-10 {
                    return Err(GeomError::SingularAtPoint {
                        point: p.clone(),
                        det: d.abs(),
                    });
                }
            }
        }
    }
    Ok(CovariantMetric { mat: inv })
}

fn numeric_leading_minor(values: &[f64], dim: usize, k: usize) -> f64 {
    // Gaussian elimination on the leading k x k block.
    let mut m: Vec<f64> = (0..k)
        .flat_map(|i| (0..k).map(move |j| values[i * dim + j]))
        .collect();
    let mut det = 1.0;
    for col in 0..k {
        let mut pivot = col;
        for r in col + 1..k {
            if m[r * k + col].abs() > m[pivot * k + col].abs() {
                pivot = r;
            }
        }
        if m[pivot * k + col] == 0.0 {
            return 0.0;
        }
        if pivot != col {
            for c in 0..k {
                m.swap(col * k + c, pivot * k + c);
            }
            det = -det;
        }
        det *= m[col * k + col];
        for r in col + 1..k {
            let factor = m[r * k + col] / m[col * k + col];
            for c in col..k {
                m[r * k + c] -= factor * m[col * k + c];
            }
        }
    }
    det
}

/// Sylvester criterion at every plan point.
pub fn check_positive_definite(g: &Cometric, plan: &SamplePlan) -> Result<(), GeomError> {
    let dim = g.dim();
    for p in plan.points() {
        let mut ev = Evaluator::new(p);
        let values = g
            .matrix()
            .eval(&mut ev)
            .map_err(|e| GeomError::eval_at(p, e))?;
        for k in 1..=dim {
            let minor = numeric_leading_minor(&values, dim, k);
            if minor <= 1e-10 {
                return Err(GeomError::NotPositiveDefinite {
                    point: p.clone(),
                    minor: k,
                    value: minor,
                });
            }
        }
    }
    Ok(())
}

/// Max of `|g^{ij} - g^{ji}|` over the plan.
pub fn symmetry_residual(g: &Cometric, plan: &SamplePlan) -> Result<f64, GeomError> {
    let dim = g.dim();
    let mut exprs = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            exprs.push(g.at(i, j) - g.at(j, i));
        }
    }
    max_abs_over_plan(&exprs, plan)
}

/// Max of `|Pi^{ij} + Pi^{ji}|` over the plan (diagonal included).
pub fn antisymmetry_residual(pi: &BivectorField, plan: &SamplePlan) -> Result<f64, GeomError> {
    let dim = pi.dim();
    let mut exprs = Vec::new();
    for i in 0..dim {
        for j in i..dim {
            exprs.push(pi.at(i, j) + pi.at(j, i));
        }
    }
    max_abs_over_plan(&exprs, plan)
}

/// Shared residual kernel: `max |e(p)|` over all expressions and plan points.
pub fn max_abs_over_plan(exprs: &[Expr], plan: &SamplePlan) -> Result<f64, GeomError> {
    let mut worst = 0.0f64;
    for p in plan.points() {
        let mut ev = Evaluator::new(p);
        for e in exprs {
            let v = ev.eval(e).map_err(|err| GeomError::eval_at(p, err))?;
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

/// The polarization set `{dx^i} U {dx^i + dx^j, i < j}`, which determines a
/// symmetric bilinear form completely from its diagonal values.
pub(crate) fn polarized_basis(dim: usize) -> Vec<OneForm> {
    let mut out: Vec<OneForm> = (0..dim).map(|i| OneForm::basis(dim, i)).collect();
    for i in 0..dim {
        for j in i + 1..dim {
            out.push(OneForm::basis(dim, i).add(&OneForm::basis(dim, j)));
        }
    }
    out
}
