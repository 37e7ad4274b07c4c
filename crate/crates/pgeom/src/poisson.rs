//! The bracket layer: sharp map, Hamiltonian fields, Casimir and Jacobi
//! residuals, the Koszul bracket on 1-forms and the Lie derivative of
//! symmetric 2-tensors.
//!
//! Sign convention, fixed once for the whole crate: the sharp map satisfies
//! `eta(sharp(omega)) = Pi(omega, eta)`, hence in components
//! `(sharp w)^j = sum_i Pi^{ij} w_i` and the Hamiltonian field of `phi` is
//! `X_phi = -sharp(d phi)`.

use crate::error::GeomError;
use crate::expr::{Evaluator, Expr};
use crate::manifold::{
    max_abs_over_plan, pair_pi, BivectorField, Cometric, ExprMatrix, OneForm, SamplePlan,
};

/// Vector field components `X^i` with respect to the coordinate frame.
#[derive(Debug, Clone)]
pub struct VectorField {
    comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(comps: Vec<Expr>) -> VectorField {
        VectorField { comps }
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

    /// Directional derivative `X(s)` of a scalar field.
    pub fn apply(&self, s: &Expr) -> Expr {
        Expr::sum(self.comps.iter().enumerate().map(|(j, xj)| xj * s.diff(j)))
    }
}

/// Symmetric 2-tensor on the cotangent bundle (e.g. the cometric, or Lie
/// derivatives of it): components `T(dx^i, dx^j)`.
#[derive(Debug, Clone)]
pub struct SymCotangentTensor2 {
    mat: ExprMatrix,
}

impl SymCotangentTensor2 {
    pub fn new(mat: ExprMatrix) -> SymCotangentTensor2 {
        SymCotangentTensor2 { mat }
    }

    pub fn from_cometric(g: &Cometric) -> SymCotangentTensor2 {
        SymCotangentTensor2 {
            mat: g.matrix().clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.mat.dim()
    }

    pub fn at(&self, i: usize, j: usize) -> &Expr {
        self.mat.at(i, j)
    }

    /// Tensorial evaluation against two 1-forms.
    pub fn apply(&self, a: &OneForm, b: &OneForm) -> Expr {
        let dim = self.dim();
        Expr::sum((0..dim).flat_map(|i| (0..dim).map(move |j| self.at(i, j) * a.at(i) * b.at(j))))
    }
}

/// `(sharp w)^j = sum_i Pi^{ij} w_i`.
pub fn sharp(pi: &BivectorField, w: &OneForm) -> VectorField {
    let dim = pi.dim();
    VectorField::new(
        (0..dim)
            .map(|j| Expr::sum((0..dim).map(|i| pi.at(i, j) * w.at(i))))
            .collect(),
    )
}

/// `sharp(w)(s)`, the anchor applied to a scalar field.
pub fn sharp_apply(pi: &BivectorField, w: &OneForm, s: &Expr) -> Expr {
    sharp(pi, w).apply(s)
}

/// Hamiltonian vector field: `X_phi(psi) = Pi(d psi, d phi)`, i.e.
/// `X^j = sum_i Pi^{ji} d_i phi`. Componentwise `X_phi = -sharp(d phi)`.
pub fn hamiltonian(pi: &BivectorField, phi: &Expr) -> VectorField {
    let dim = pi.dim();
    VectorField::new(
        (0..dim)
            .map(|j| Expr::sum((0..dim).map(|i| pi.at(j, i) * phi.diff(i))))
            .collect(),
    )
}

/// Max over the plan of the euclidean norm of `sharp(Pi, df)`; zero within
/// tolerance exactly when `f` behaves as a Casimir function on the sampled
/// domain.
pub fn casimir_residual(pi: &BivectorField, f: &Expr, plan: &SamplePlan) -> Result<f64, GeomError> {
    let dim = pi.dim();
    let field = sharp(pi, &OneForm::differential(f, dim));
    let mut worst = 0.0f64;
    for p in plan.points() {
        let mut ev = Evaluator::new(p);
        let mut sq = 0.0;
        for c in field.comps() {
            let v = ev.eval(c).map_err(|e| GeomError::eval_at(p, e))?;
            sq += v * v;
        }
        worst = worst.max(sq.sqrt());
    }
    Ok(worst)
}

/// Jacobi-identity defect of the bivector: max over samples and index
/// triples `i < j < k` of the cyclic coordinate sum
/// `|sum_l (Pi^{li} d_l Pi^{jk} + Pi^{lj} d_l Pi^{ki} + Pi^{lk} d_l Pi^{ij})|`.
///
/// Identically zero on 2-dimensional charts (no triple exists).
pub fn jacobiator_residual(pi: &BivectorField, plan: &SamplePlan) -> Result<f64, GeomError> {
    let dim = pi.dim();
    let mut exprs = Vec::new();
    for i in 0..dim {
        for j in i + 1..dim {
            for k in j + 1..dim {
                let mut acc = Expr::zero();
                for l in 0..dim {
                    acc = acc
                        + pi.at(l, i) * pi.at(j, k).diff(l)
                        + pi.at(l, j) * pi.at(k, i).diff(l)
                        + pi.at(l, k) * pi.at(i, j).diff(l);
                }
                exprs.push(acc);
            }
        }
    }
    max_abs_over_plan(&exprs, plan)
}

fn lie_along_vector(x: &VectorField, a: &OneForm) -> OneForm {
    // (L_X a)_k = sum_m (X^m d_m a_k + a_m d_k X^m)
    let dim = a.dim();
    OneForm::new(
        (0..dim)
            .map(|k| {
                Expr::sum(
                    (0..dim).flat_map(|m| [x.at(m) * a.at(k).diff(m), a.at(m) * x.at(m).diff(k)]),
                )
            })
            .collect(),
    )
}

/// Koszul bracket on 1-forms:
/// `[w, e]_Pi = L_{sharp w} e - L_{sharp e} w - d(Pi(w, e))`.
///
/// On coframe pairs this reduces to `[dx^i, dx^j]_Pi = d(Pi^{ij})`.
pub fn koszul_bracket(pi: &BivectorField, w: &OneForm, e: &OneForm) -> OneForm {
    let dim = pi.dim();
    let lw = lie_along_vector(&sharp(pi, w), e);
    let le = lie_along_vector(&sharp(pi, e), w);
    let ds = OneForm::differential(&pair_pi(pi, w, e), dim);
    OneForm::new((0..dim).map(|k| lw.at(k) - le.at(k) - ds.at(k)).collect())
}

/// Anchor-morphism defect `sharp([w,e]_Pi) - [sharp w, sharp e]` as a
/// max-norm over the plan. The identity is only claimed for Poisson
/// bivectors; callers should gate on `jacobiator_residual`.
pub fn anchor_morphism_residual(
    pi: &BivectorField,
    w: &OneForm,
    e: &OneForm,
    plan: &SamplePlan,
) -> Result<f64, GeomError> {
    let dim = pi.dim();
    let lhs = sharp(pi, &koszul_bracket(pi, w, e));
    let x = sharp(pi, w);
    let y = sharp(pi, e);
    let mut exprs = Vec::with_capacity(dim);
    for k in 0..dim {
        let commutator =
            Expr::sum((0..dim).map(|i| x.at(i) * y.at(k).diff(i) - y.at(i) * x.at(k).diff(i)));
        exprs.push(lhs.at(k) - commutator);
    }
    max_abs_over_plan(&exprs, plan)
}

/// Lie derivative of a symmetric 2-tensor along a 1-form:
/// `(L_a T)(a1, a2) = sharp(a)(T(a1, a2)) - T([a,a1]_Pi, a2) - T(a1, [a,a2]_Pi)`,
/// assembled on coframe pairs.
pub fn lie_derivative_t2(
    pi: &BivectorField,
    a: &OneForm,
    t: &SymCotangentTensor2,
) -> SymCotangentTensor2 {
    let dim = pi.dim();
    let anchor = sharp(pi, a);
    let brackets: Vec<OneForm> = (0..dim)
        .map(|i| koszul_bracket(pi, a, &OneForm::basis(dim, i)))
        .collect();
    SymCotangentTensor2::new(ExprMatrix::from_fn(dim, |i, j| {
        let lead = anchor.apply(t.at(i, j));
        let drop_i = Expr::sum((0..dim).map(|m| t.at(m, j) * brackets[i].at(m)));
        let drop_j = Expr::sum((0..dim).map(|m| t.at(i, m) * brackets[j].at(m)));
        lead - drop_i - drop_j
    }))
}
