//! Contravariant warped products: block cometric `g1 (+) g2/f^2`, block
//! bivector `Pi1 (+) Pi2`, lifts, and the closed-form oracles for the product
//! connection, Lie derivatives and their iterates.
//!
//! The product is materialized as an ordinary geometry on the concatenated
//! chart and fed through the generic machinery; the closed forms here act as
//! independent oracles. Base-factor expressions keep their coordinate
//! indices, fiber-factor expressions are shifted behind the base block.

use crate::connection::{d_form, dnorm_squared, dpi_residual, Geometry};
use crate::error::GeomError;
use crate::expr::Expr;
use crate::killing::{killing_residual, two_killing_residual, KillingReport, TwoKillingReport};
use crate::manifold::{
    max_abs_over_plan, pair_g, polarized_basis, BivectorField, Chart, Cometric, ExprMatrix,
    OneForm, SamplePlan,
};
use crate::poisson::{
    casimir_residual, koszul_bracket, lie_derivative_t2, sharp_apply, SymCotangentTensor2,
};

/// One factor of a warped product.
#[derive(Debug, Clone)]
pub struct FactorSpec {
    pub chart: Chart,
    pub g: Cometric,
    pub pi: BivectorField,
}

/// Base, fiber and a warp function over the base coordinates, positive on
/// the base domain.
#[derive(Debug, Clone)]
pub struct WarpedSpec {
    pub base: FactorSpec,
    pub fiber: FactorSpec,
    pub f: Expr,
}

impl WarpedSpec {
    /// The concatenated chart the product lives on.
    pub fn product_chart(&self) -> Result<Chart, GeomError> {
        self.base.chart.concat(&self.fiber.chart)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Factor {
    Base,
    Fiber,
}

/// A built warped product: the product geometry plus both factor geometries
/// and the warp data needed by the closed forms.
#[derive(Debug, Clone)]
pub struct WarpedGeometry {
    pub product: Geometry,
    pub base: Geometry,
    pub fiber: Geometry,
    pub f: Expr,
    n1: usize,
    n2: usize,
}

impl WarpedGeometry {
    pub fn base_dim(&self) -> usize {
        self.n1
    }

    pub fn fiber_dim(&self) -> usize {
        self.n2
    }

    pub fn dim(&self) -> usize {
        self.n1 + self.n2
    }

    /// Horizontal lift: zero-pad base components into the product range.
    pub fn horizontal(&self, w: &OneForm) -> OneForm {
        let mut comps: Vec<Expr> = w.comps().to_vec();
        comps.resize(self.dim(), Expr::zero());
        OneForm::new(comps)
    }

    /// Vertical lift: shift fiber coordinates behind the base block.
    pub fn vertical(&self, w: &OneForm) -> OneForm {
        let mut comps = vec![Expr::zero(); self.n1];
        comps.extend(w.comps().iter().map(|e| e.shift_indices(self.n1)));
        OneForm::new(comps)
    }

    /// Vertical lift of a fiber scalar field.
    pub fn vlift(&self, e: &Expr) -> Expr {
        e.shift_indices(self.n1)
    }

    /// `eta = eta1^h + eta2^v`.
    pub fn combined(&self, eta1: &OneForm, eta2: &OneForm) -> OneForm {
        self.horizontal(eta1).add(&self.vertical(eta2))
    }

    pub fn base_plan(&self, plan: &SamplePlan) -> SamplePlan {
        plan.project(0, self.n1)
    }

    pub fn fiber_plan(&self, plan: &SamplePlan) -> SamplePlan {
        plan.project(self.n1, self.n1 + self.n2)
    }

    /// `J_1 df` on the base.
    pub fn j_df(&self) -> OneForm {
        let df = OneForm::differential(&self.f, self.n1);
        crate::connection::j_endo(&self.base.gl, &self.base.pi, &df)
    }

    /// Split constant-component product forms (the polarization set) into
    /// factor-level parts.
    fn split_constant_form(&self, a: &OneForm) -> (OneForm, OneForm) {
        let a1 = OneForm::new(a.comps()[..self.n1].to_vec());
        let a2 = OneForm::new(a.comps()[self.n1..].to_vec());
        (a1, a2)
    }
}

/// Lift a factor 1-form into the product index range.
pub fn lift_form(wg: &WarpedGeometry, which: Factor, w: &OneForm) -> OneForm {
    match which {
        Factor::Base => wg.horizontal(w),
        Factor::Fiber => wg.vertical(w),
    }
}

/// Assemble the product geometry from a warped spec. `plan` must be a plan
/// over [`WarpedSpec::product_chart`].
pub fn build_warped(spec: &WarpedSpec, plan: &SamplePlan) -> Result<WarpedGeometry, GeomError> {
    let n1 = spec.base.chart.dim();
    let n2 = spec.fiber.chart.dim();
    let chart = spec.product_chart()?;

    if let Some(idx) = spec.f.max_var_index() {
        if idx >= n1 {
            return Err(GeomError::WarpUsesFiberCoordinate {
                index: idx,
                base_dim: n1,
            });
        }
    }
    let base_plan = plan.project(0, n1);
    for p in base_plan.points() {
        let v = spec.f.eval(p).map_err(|e| GeomError::eval_at(p, e))?;
        if v <= 0.0 {
            return Err(GeomError::NonPositiveWarp {
                point: p.clone(),
                value: v,
            });
        }
    }

    let dim = n1 + n2;
    let inv_f2 = spec.f.powi(-2);
    let g = Cometric::new(ExprMatrix::from_fn(dim, |i, j| {
        if i < n1 && j < n1 {
            spec.base.g.at(i, j).clone()
        } else if i >= n1 && j >= n1 {
            &inv_f2 * spec.fiber.g.at(i - n1, j - n1).shift_indices(n1)
        } else {
            Expr::zero()
        }
    }));
    let pi = BivectorField::from_matrix(ExprMatrix::from_fn(dim, |i, j| {
        if i < n1 && j < n1 {
            spec.base.pi.at(i, j).clone()
        } else if i >= n1 && j >= n1 {
            spec.fiber.pi.at(i - n1, j - n1).shift_indices(n1)
        } else {
            Expr::zero()
        }
    }));

    let product = Geometry::new(chart, g, pi, plan)?;
    let base = Geometry::new(
        spec.base.chart.clone(),
        spec.base.g.clone(),
        spec.base.pi.clone(),
        &base_plan,
    )?;
    let fiber_plan = plan.project(n1, dim);
    let fiber = Geometry::new(
        spec.fiber.chart.clone(),
        spec.fiber.g.clone(),
        spec.fiber.pi.clone(),
        &fiber_plan,
    )?;

    Ok(WarpedGeometry {
        product,
        base,
        fiber,
        f: spec.f.clone(),
        n1,
        n2,
    })
}

/// Residuals of the warped-connection block formulas, by block:
///
/// * base: `D_{w1^h} e1^h = (D^1_{w1} e1)^h`
/// * fiber: `D_{w2^v} e2^v = (D^2_{w2} e2)^v - g2(w2,e2)^v (J_1 df)^h / f^3`
/// * mixed: `D_{w1^h} e2^v = D_{e2^v} w1^h = g1(J_1 df, w1)^h e2^v / f`
#[derive(Debug, Clone)]
pub struct WarpConnectionReport {
    pub base_block: f64,
    pub fiber_block: f64,
    pub mixed_block: f64,
}

pub fn warped_connection_residual(
    wg: &WarpedGeometry,
    plan: &SamplePlan,
) -> Result<WarpConnectionReport, GeomError> {
    let (n1, n2, dim) = (wg.n1, wg.n2, wg.dim());
    let phi = wg.j_df();
    let phi_h = wg.horizontal(&phi);
    let inv_f = wg.f.powi(-1);
    let inv_f3 = wg.f.powi(-3);

    let mut base_exprs = Vec::new();
    for i in 0..n1 {
        for j in 0..n1 {
            let lhs = d_form(
                &wg.product.gamma,
                &wg.product.pi,
                &OneForm::basis(dim, i),
                &OneForm::basis(dim, j),
            );
            let rhs = wg.horizontal(&wg.base.gamma.basis_derivative(i, j));
            for k in 0..dim {
                base_exprs.push(lhs.at(k) - rhs.at(k));
            }
        }
    }

    let mut fiber_exprs = Vec::new();
    for i in 0..n2 {
        for j in 0..n2 {
            let lhs = d_form(
                &wg.product.gamma,
                &wg.product.pi,
                &OneForm::basis(dim, n1 + i),
                &OneForm::basis(dim, n1 + j),
            );
            let block = wg.vertical(&wg.fiber.gamma.basis_derivative(i, j));
            let coeff = &inv_f3 * wg.vlift(wg.fiber.g.at(i, j));
            for k in 0..dim {
                let rhs = block.at(k) - &coeff * phi_h.at(k);
                fiber_exprs.push(lhs.at(k) - rhs);
            }
        }
    }

    let mut mixed_exprs = Vec::new();
    for i in 0..n1 {
        let coeff = pair_g(&wg.base.g, &phi, &OneForm::basis(n1, i)) * &inv_f;
        for j in 0..n2 {
            let hv = d_form(
                &wg.product.gamma,
                &wg.product.pi,
                &OneForm::basis(dim, i),
                &OneForm::basis(dim, n1 + j),
            );
            let vh = d_form(
                &wg.product.gamma,
                &wg.product.pi,
                &OneForm::basis(dim, n1 + j),
                &OneForm::basis(dim, i),
            );
            for k in 0..dim {
                let rhs = if k == n1 + j {
                    coeff.clone()
                } else {
                    Expr::zero()
                };
                mixed_exprs.push(hv.at(k) - &rhs);
                mixed_exprs.push(vh.at(k) - &rhs);
            }
        }
    }

    Ok(WarpConnectionReport {
        base_block: max_abs_over_plan(&base_exprs, plan)?,
        fiber_block: max_abs_over_plan(&fiber_exprs, plan)?,
        mixed_block: max_abs_over_plan(&mixed_exprs, plan)?,
    })
}

/// Dual-route report for a split identity: the full closed form, plus the
/// collapsed form that drops the `J_1 df` correction, asserted only when the
/// warp function passes the Casimir gate.
#[derive(Debug, Clone)]
pub struct SplitReport {
    pub full: f64,
    pub casimir_collapsed: Option<f64>,
}

fn casimir_gate(wg: &WarpedGeometry, plan: &SamplePlan, tol: f64) -> Result<bool, GeomError> {
    let base_plan = wg.base_plan(plan);
    Ok(casimir_residual(&wg.base.pi, &wg.f, &base_plan)? < tol)
}

/// Lie-derivative split on the product, checked against the generic tensor
/// Lie derivative over all coframe pairs:
/// `(L_eta g^f)(a,b) = [(L^1_{eta1} g1)(a1,b1)]^h + [(L^2_{eta2} g2)(a2,b2)]^v / f^2
///  + 2 (g1(J_1 df, eta1) / f^3)^h g2(a2,b2)^v`.
pub fn warped_lie_residual(
    wg: &WarpedGeometry,
    eta1: &OneForm,
    eta2: &OneForm,
    plan: &SamplePlan,
    tol: f64,
) -> Result<SplitReport, GeomError> {
    let (n1, dim) = (wg.n1, wg.dim());
    let eta = wg.combined(eta1, eta2);
    let general = lie_derivative_t2(
        &wg.product.pi,
        &eta,
        &SymCotangentTensor2::from_cometric(&wg.product.g),
    );

    let lie_base = lie_derivative_t2(
        &wg.base.pi,
        eta1,
        &SymCotangentTensor2::from_cometric(&wg.base.g),
    );
    let lie_fiber = lie_derivative_t2(
        &wg.fiber.pi,
        eta2,
        &SymCotangentTensor2::from_cometric(&wg.fiber.g),
    );
    let phi = wg.j_df();
    let e_coef = pair_g(&wg.base.g, &phi, eta1);
    let inv_f2 = wg.f.powi(-2);
    let inv_f3 = wg.f.powi(-3);

    let closed = |a: usize, b: usize, with_correction: bool| -> Expr {
        if a < n1 && b < n1 {
            lie_base.at(a, b).clone()
        } else if a >= n1 && b >= n1 {
            let mut out = &inv_f2 * wg.vlift(lie_fiber.at(a - n1, b - n1));
            if with_correction {
                out = out
                    + Expr::constant(2.0)
                        * &e_coef
                        * &inv_f3
                        * wg.vlift(wg.fiber.g.at(a - n1, b - n1));
            }
            out
        } else {
            Expr::zero()
        }
    };

    let mut full_exprs = Vec::new();
    let mut collapsed_exprs = Vec::new();
    for a in 0..dim {
        for b in 0..dim {
            full_exprs.push(general.at(a, b) - closed(a, b, true));
            collapsed_exprs.push(general.at(a, b) - closed(a, b, false));
        }
    }
    let full = max_abs_over_plan(&full_exprs, plan)?;
    let casimir_collapsed = if casimir_gate(wg, plan, tol)? {
        Some(max_abs_over_plan(&collapsed_exprs, plan)?)
    } else {
        None
    };
    Ok(SplitReport {
        full,
        casimir_collapsed,
    })
}

/// Pairing split on the product, checked over the polarized product coframe
/// set (mixed elements exercise all three groups at once):
/// `g^f(D_a eta, a) = g1(D^1_{a1} eta1, a1)^h + (g1(J_1 df, eta1)/f^3)^h |a2|_2^2
///  + g2(D^2_{a2} eta2, a2)^v / f^2`.
pub fn warped_pairing_residual(
    wg: &WarpedGeometry,
    eta1: &OneForm,
    eta2: &OneForm,
    plan: &SamplePlan,
    tol: f64,
) -> Result<SplitReport, GeomError> {
    let dim = wg.dim();
    let eta = wg.combined(eta1, eta2);
    let phi = wg.j_df();
    let e_coef = pair_g(&wg.base.g, &phi, eta1);
    let inv_f2 = wg.f.powi(-2);
    let inv_f3 = wg.f.powi(-3);

    let mut full_exprs = Vec::new();
    let mut collapsed_exprs = Vec::new();
    for a in polarized_basis(dim) {
        let general = pair_g(
            &wg.product.g,
            &d_form(&wg.product.gamma, &wg.product.pi, &a, &eta),
            &a,
        );
        let (a1, a2) = wg.split_constant_form(&a);
        let base_term = pair_g(
            &wg.base.g,
            &d_form(&wg.base.gamma, &wg.base.pi, &a1, eta1),
            &a1,
        );
        let fiber_term = &inv_f2
            * wg.vlift(&pair_g(
                &wg.fiber.g,
                &d_form(&wg.fiber.gamma, &wg.fiber.pi, &a2, eta2),
                &a2,
            ));
        let correction = &e_coef * &inv_f3 * wg.vlift(&pair_g(&wg.fiber.g, &a2, &a2));
        full_exprs.push(&general - (&base_term + &fiber_term + correction));
        collapsed_exprs.push(general - (base_term + fiber_term));
    }
    let full = max_abs_over_plan(&full_exprs, plan)?;
    let casimir_collapsed = if casimir_gate(wg, plan, tol)? {
        Some(max_abs_over_plan(&collapsed_exprs, plan)?)
    } else {
        None
    };
    Ok(SplitReport {
        full,
        casimir_collapsed,
    })
}

/// Iterated Lie-derivative split `(L_eta L_eta g^f)(a,b)`: the generic double
/// tensor Lie derivative against the closed form assembled from the five
/// product groups
/// `P1 + P2 - P3 - P4 + 2 P5` with
/// `P1 = g^f(D_eta D_a eta, b)`, `P3 = g^f(D_{[eta,a]} eta, b)`,
/// `P5 = g^f(D_a eta, D_b eta)`, and `P2`, `P4` their `a <-> b` exchanges,
/// each expanded into factor-level terms.
pub fn warped_lie2_residual(
    wg: &WarpedGeometry,
    eta1: &OneForm,
    eta2: &OneForm,
    plan: &SamplePlan,
) -> Result<f64, GeomError> {
    let (n1, n2, dim) = (wg.n1, wg.n2, wg.dim());
    let eta = wg.combined(eta1, eta2);

    let gt = SymCotangentTensor2::from_cometric(&wg.product.g);
    let l1 = lie_derivative_t2(&wg.product.pi, &eta, &gt);
    let general = lie_derivative_t2(&wg.product.pi, &eta, &l1);

    // base-level ingredients (product-valid as-is)
    let phi = wg.j_df();
    let g1 = &wg.base.g;
    let g2 = &wg.fiber.g;
    let pi1 = &wg.base.pi;
    let pi2 = &wg.fiber.pi;
    let gam1 = &wg.base.gamma;
    let gam2 = &wg.fiber.gamma;
    let e_coef = pair_g(g1, &phi, eta1);
    let d1e_f = sharp_apply(pi1, eta1, &wg.f);
    let d1e_e = sharp_apply(pi1, eta1, &e_coef);
    let d1e_phi = d_form(gam1, pi1, eta1, &phi);
    let norm_phi = pair_g(g1, &phi, &phi);
    // fiber-level ingredients, lifted once
    let norm_eta2_v = wg.vlift(&pair_g(g2, eta2, eta2));
    let d2e_e2 = d_form(gam2, pi2, eta2, eta2);

    let inv = |n: i32| wg.f.powi(-n);

    // per-coframe-index decompositions
    struct Slot {
        a1: OneForm,
        a2: OneForm,
        a_coef: Expr,        // g1(phi, a1)
        gae_v: Expr,         // g2(a2, eta2), lifted
        d1a_e1: OneForm,     // D^1_{a1} eta1
        d2a_e2: OneForm,     // D^2_{a2} eta2 (fiber level)
        d2e_a2: OneForm,     // D^2_{eta2} a2 (fiber level)
        br1: OneForm,        // [eta1, a1] on the base
        br2: OneForm,        // [eta2, a2] on the fiber
        d1e_a: Expr,         // D^1_{eta1} g1(phi, a1)
        d1e_d1a_e1: OneForm, // D^1_{eta1} D^1_{a1} eta1
        d2e_d2a_e2: OneForm, // D^2_{eta2} D^2_{a2} eta2 (fiber level)
        d2e_gae_v: Expr,     // D^2_{eta2} g2(a2, eta2), lifted
        phi_d1a: Expr,       // g1(phi, D^1_{a1} eta1)
    }
    let slots: Vec<Slot> = (0..dim)
        .map(|idx| {
            let a1 = if idx < n1 {
                OneForm::basis(n1, idx)
            } else {
                OneForm::zero(n1)
            };
            let a2 = if idx >= n1 {
                OneForm::basis(n2, idx - n1)
            } else {
                OneForm::zero(n2)
            };
            let a_coef = pair_g(g1, &phi, &a1);
            let gae = pair_g(g2, &a2, eta2);
            let d1a_e1 = d_form(gam1, pi1, &a1, eta1);
            let d2a_e2 = d_form(gam2, pi2, &a2, eta2);
            let d2e_a2 = d_form(gam2, pi2, eta2, &a2);
            Slot {
                a_coef: a_coef.clone(),
                gae_v: wg.vlift(&gae),
                d1e_a: sharp_apply(pi1, eta1, &a_coef),
                d1e_d1a_e1: d_form(gam1, pi1, eta1, &d1a_e1),
                d2e_d2a_e2: d_form(gam2, pi2, eta2, &d2a_e2),
                d2e_gae_v: wg.vlift(&sharp_apply(pi2, eta2, &gae)),
                phi_d1a: pair_g(g1, &phi, &d1a_e1),
                br1: koszul_bracket(pi1, eta1, &a1),
                br2: koszul_bracket(pi2, eta2, &a2),
                a1,
                a2,
                d1a_e1,
                d2a_e2,
                d2e_a2,
            }
        })
        .collect();

    let pair2v = |u: &OneForm, v: &OneForm| wg.vlift(&pair_g(g2, u, v));

    let p1 = |a: &Slot, b: &Slot| -> Expr {
        let coef_eta2 = &a.d1e_a * inv(1) - &a.a_coef * &d1e_f * inv(2)
            + &a.a_coef * &e_coef * inv(2)
            + &a.phi_d1a * inv(1)
            - &norm_phi * inv(4) * &a.gae_v;
        let coef_a2 = &d1e_e * inv(1) - &e_coef * &d1e_f * inv(2) + e_coef.powi(2) * inv(2);
        let coef_phi = (Expr::constant(3.0) * &d1e_f - &e_coef) * inv(4) * &a.gae_v
            - &a.a_coef * inv(4) * &norm_eta2_v
            - pair2v(&a.d2a_e2, eta2) * inv(3)
            - &a.d2e_gae_v * inv(3);
        pair_g(g1, &a.d1e_d1a_e1, &b.a1) + pair2v(&a.d2e_d2a_e2, &b.a2) * inv(2)
            - pair_g(g1, &d1e_phi, &b.a1) * inv(3) * &a.gae_v
            + &coef_eta2 * inv(2) * pair2v(eta2, &b.a2)
            + &coef_a2 * inv(2) * pair2v(&a.a2, &b.a2)
            + (&a.a_coef * inv(1) * pair2v(&d2e_e2, &b.a2)
                + &e_coef * inv(1) * (pair2v(&a.d2a_e2, &b.a2) + pair2v(&a.d2e_a2, &b.a2)))
                * inv(2)
            + coef_phi * &b.a_coef
    };

    let p3 = |a: &Slot, b: &Slot| -> Expr {
        pair_g(g1, &d_form(gam1, pi1, &a.br1, eta1), &b.a1)
            + pair2v(&d_form(gam2, pi2, &a.br2, eta2), &b.a2) * inv(2)
            + &e_coef * inv(3) * pair2v(&a.br2, &b.a2)
            + pair_g(g1, &phi, &a.br1) * inv(3) * pair2v(eta2, &b.a2)
            - &b.a_coef * inv(3) * pair2v(eta2, &a.br2)
    };

    let p5 = |a: &Slot, b: &Slot| -> Expr {
        pair_g(g1, &a.d1a_e1, &b.d1a_e1)
            + pair2v(&a.d2a_e2, &b.d2a_e2) * inv(2)
            + &a.a_coef * inv(3) * pair2v(&b.d2a_e2, eta2)
            + &b.a_coef * inv(3) * pair2v(&a.d2a_e2, eta2)
            + &norm_phi * inv(6) * &a.gae_v * &b.gae_v
            + &a.a_coef * &b.a_coef * inv(4) * &norm_eta2_v
            + e_coef.powi(2) * inv(4) * pair2v(&a.a2, &b.a2)
            + (&a.a_coef * &e_coef * inv(4) - &a.phi_d1a * inv(3)) * &b.gae_v
            + (&b.a_coef * &e_coef * inv(4) - &b.phi_d1a * inv(3)) * &a.gae_v
            + &e_coef * inv(3) * (pair2v(&a.d2a_e2, &b.a2) + pair2v(&b.d2a_e2, &a.a2))
    };

    let mut exprs = Vec::new();
    for a in 0..dim {
        for b in 0..dim {
            let (sa, sb) = (&slots[a], &slots[b]);
            let closed = p1(sa, sb) + p1(sb, sa) - p3(sa, sb) - p3(sb, sa)
                + Expr::constant(2.0) * p5(sa, sb);
            exprs.push(general.at(a, b) - closed);
        }
    }
    max_abs_over_plan(&exprs, plan)
}

/// Riemannian-Poisson factorization: with a Casimir warp function, both
/// factors satisfy `D Pi = 0` exactly when the product does. `None` when the
/// Casimir gate fails.
#[derive(Debug, Clone)]
pub struct RpSplitReport {
    pub base: bool,
    pub fiber: bool,
    pub product: bool,
    pub base_res: f64,
    pub fiber_res: f64,
    pub product_res: f64,
}

impl RpSplitReport {
    pub fn consistent(&self) -> bool {
        (self.base && self.fiber) == self.product
    }
}

pub fn riemannian_poisson_split(
    wg: &WarpedGeometry,
    plan: &SamplePlan,
    tol: f64,
) -> Result<Option<RpSplitReport>, GeomError> {
    if !casimir_gate(wg, plan, tol)? {
        return Ok(None);
    }
    let base_res = dpi_residual(&wg.base.gamma, &wg.base.pi, &wg.base_plan(plan))?;
    let fiber_res = dpi_residual(&wg.fiber.gamma, &wg.fiber.pi, &wg.fiber_plan(plan))?;
    let product_res = dpi_residual(&wg.product.gamma, &wg.product.pi, plan)?;
    Ok(Some(RpSplitReport {
        base: base_res < tol,
        fiber: fiber_res < tol,
        product: product_res < tol,
        base_res,
        fiber_res,
        product_res,
    }))
}

/// Killing / 2-Killing verdicts for the factors and the combined lift; the
/// product verdict must equal the conjunction of the factor verdicts when
/// the warp function is Casimir.
#[derive(Debug, Clone)]
pub struct KillingSplitReport {
    pub base: KillingReport,
    pub fiber: KillingReport,
    pub product: KillingReport,
}

impl KillingSplitReport {
    pub fn consistent(&self) -> bool {
        (self.base.verdict && self.fiber.verdict) == self.product.verdict
    }
}

pub fn killing_split_check(
    wg: &WarpedGeometry,
    eta1: &OneForm,
    eta2: &OneForm,
    plan: &SamplePlan,
    tol: f64,
) -> Result<Option<KillingSplitReport>, GeomError> {
    if !casimir_gate(wg, plan, tol)? {
        return Ok(None);
    }
    let base = killing_residual(
        &wg.base.g,
        &wg.base.pi,
        &wg.base.gamma,
        eta1,
        &wg.base_plan(plan),
        tol,
    )?;
    let fiber = killing_residual(
        &wg.fiber.g,
        &wg.fiber.pi,
        &wg.fiber.gamma,
        eta2,
        &wg.fiber_plan(plan),
        tol,
    )?;
    let product = killing_residual(
        &wg.product.g,
        &wg.product.pi,
        &wg.product.gamma,
        &wg.combined(eta1, eta2),
        plan,
        tol,
    )?;
    Ok(Some(KillingSplitReport {
        base,
        fiber,
        product,
    }))
}

#[derive(Debug, Clone)]
pub struct TwoKillingSplitReport {
    pub base: TwoKillingReport,
    pub fiber: TwoKillingReport,
    pub product: TwoKillingReport,
}

impl TwoKillingSplitReport {
    pub fn consistent(&self) -> bool {
        (self.base.verdict && self.fiber.verdict) == self.product.verdict
    }
}

pub fn two_killing_split_check(
    wg: &WarpedGeometry,
    eta1: &OneForm,
    eta2: &OneForm,
    plan: &SamplePlan,
    tol: f64,
) -> Result<Option<TwoKillingSplitReport>, GeomError> {
    if !casimir_gate(wg, plan, tol)? {
        return Ok(None);
    }
    let base = two_killing_residual(
        &wg.base.g,
        &wg.base.pi,
        &wg.base.gamma,
        eta1,
        &wg.base_plan(plan),
        tol,
    )?;
    let fiber = two_killing_residual(
        &wg.fiber.g,
        &wg.fiber.pi,
        &wg.fiber.gamma,
        eta2,
        &wg.fiber_plan(plan),
        tol,
    )?;
    let product = two_killing_residual(
        &wg.product.g,
        &wg.product.pi,
        &wg.product.gamma,
        &wg.combined(eta1, eta2),
        plan,
        tol,
    )?;
    Ok(Some(TwoKillingSplitReport {
        base,
        fiber,
        product,
    }))
}

/// Norm splitting `|D eta|^2 = (|D^1 eta1|^2)^h + (|D^2 eta2|^2)^v`, gated on
/// a Casimir warp function and Killing factor forms.
pub fn dnorm_split_residual(
    wg: &WarpedGeometry,
    eta1: &OneForm,
    eta2: &OneForm,
    plan: &SamplePlan,
    tol: f64,
) -> Result<Option<f64>, GeomError> {
    if !casimir_gate(wg, plan, tol)? {
        return Ok(None);
    }
    let base_killing = killing_residual(
        &wg.base.g,
        &wg.base.pi,
        &wg.base.gamma,
        eta1,
        &wg.base_plan(plan),
        tol,
    )?;
    let fiber_killing = killing_residual(
        &wg.fiber.g,
        &wg.fiber.pi,
        &wg.fiber.gamma,
        eta2,
        &wg.fiber_plan(plan),
        tol,
    )?;
    if !(base_killing.verdict && fiber_killing.verdict) {
        return Ok(None);
    }
    let eta = wg.combined(eta1, eta2);
    let product_norm = dnorm_squared(
        &wg.product.gamma,
        &wg.product.pi,
        &wg.product.g,
        &wg.product.gl,
        &eta,
    );
    let base_norm = dnorm_squared(&wg.base.gamma, &wg.base.pi, &wg.base.g, &wg.base.gl, eta1);
    let fiber_norm = wg.vlift(&dnorm_squared(
        &wg.fiber.gamma,
        &wg.fiber.pi,
        &wg.fiber.g,
        &wg.fiber.gl,
        eta2,
    ));
    let res = max_abs_over_plan(&[product_norm - base_norm - fiber_norm], plan)?;
    Ok(Some(res))
}

/// Numeric check that the off-diagonal blocks of the product cometric and
/// bivector are identically zero expressions (structural, not sampled).
pub fn block_structure_is_exact(wg: &WarpedGeometry) -> bool {
    let (n1, dim) = (wg.n1, wg.dim());
    for i in 0..dim {
        for j in 0..dim {
            let cross = (i < n1) != (j < n1);
            if cross && (!wg.product.g.at(i, j).is_zero() || !wg.product.pi.at(i, j).is_zero()) {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::sample_plan;

    fn x(i: usize) -> Expr {
        Expr::var(format!("x{}", i + 1), i)
    }

    fn y_chart(dim: usize) -> Chart {
        Chart::new(
            (1..=dim).map(|i| format!("y{i}")).collect(),
            vec![[-1.0, 1.0]; dim],
        )
        .unwrap()
    }

    fn two_two_spec(f: Expr, pi1: Expr, pi2: Expr) -> WarpedSpec {
        WarpedSpec {
            base: FactorSpec {
                chart: Chart::unit(2),
                g: Cometric::identity(2),
                pi: BivectorField::r2(pi1),
            },
            fiber: FactorSpec {
                chart: y_chart(2),
                g: Cometric::identity(2),
                pi: BivectorField::r2(pi2),
            },
            f,
        }
    }

    fn build(spec: &WarpedSpec, seed: u64, samples: usize) -> (WarpedGeometry, SamplePlan) {
        let chart = spec.product_chart().unwrap();
        let plan = sample_plan(&chart, seed, samples).unwrap();
        (build_warped(spec, &plan).unwrap(), plan)
    }

    #[test]
    fn constant_warp_scales_fiber_block() {
        // f = 2, 1-dim fiber with identity cometric: fiber block is 1/4
        let spec = WarpedSpec {
            base: FactorSpec {
                chart: Chart::unit(2),
                g: Cometric::identity(2),
                pi: BivectorField::r2(Expr::one()),
            },
            fiber: FactorSpec {
                chart: y_chart(1),
                g: Cometric::identity(1),
                pi: BivectorField::zero(1),
            },
            f: Expr::constant(2.0),
        };
        let (wg, _) = build(&spec, 1, 8);
        assert_eq!(wg.product.g.at(2, 2).as_const(), Some(0.25));
        assert!(block_structure_is_exact(&wg));

        // f = 1: plain product
        let spec = WarpedSpec {
            f: Expr::one(),
            ..spec
        };
        let (wg, _) = build(&spec, 1, 8);
        assert_eq!(wg.product.g.at(2, 2).as_const(), Some(1.0));
    }

    #[test]
    fn constant_warp_collapses_connection_corrections() {
        // df = 0 makes any constant f Casimir even for a live base bivector;
        // all correction terms drop and the blocks decouple exactly
        let spec = two_two_spec(Expr::constant(2.0), Expr::one() + &x(0) * &x(1), x(0));
        let (wg, plan) = build(&spec, 11, 12);
        let rep = warped_connection_residual(&wg, &plan).unwrap();
        assert!(rep.base_block < 1e-10 && rep.fiber_block < 1e-10 && rep.mixed_block < 1e-10);

        // zero lifted forms: both splits vanish identically
        let z = OneForm::zero(2);
        let lie = warped_lie_residual(&wg, &z, &z, &plan, 1e-8).unwrap();
        assert_eq!(lie.full, 0.0);
        assert_eq!(lie.casimir_collapsed, Some(0.0));
        let lie2 = warped_lie2_residual(&wg, &z, &z, &plan).unwrap();
        assert_eq!(lie2, 0.0);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        // fiber coordinate inside f
        let mut spec = two_two_spec(Expr::var("y1", 2), Expr::one(), Expr::one());
        let chart = spec.product_chart().unwrap();
        let plan = sample_plan(&chart, 1, 4).unwrap();
        assert!(matches!(
            build_warped(&spec, &plan),
            Err(GeomError::WarpUsesFiberCoordinate { .. })
        ));

        // non-positive warp
        spec.f = x(0);
        assert!(matches!(
            build_warped(&spec, &plan),
            Err(GeomError::NonPositiveWarp { .. })
        ));

        // coordinate collision
        let bad = WarpedSpec {
            base: spec.base.clone(),
            fiber: FactorSpec {
                chart: Chart::unit(2),
                g: Cometric::identity(2),
                pi: BivectorField::zero(2),
            },
            f: Expr::one(),
        };
        assert!(matches!(
            bad.product_chart(),
            Err(GeomError::NameCollision(_))
        ));
    }

    #[test]
    fn lifts() {
        let spec = two_two_spec(Expr::one(), Expr::one(), Expr::one());
        let (wg, plan) = build(&spec, 2, 8);
        // zero lifts to zero
        let z = lift_form(&wg, Factor::Fiber, &OneForm::zero(2));
        assert!(z.comps().iter().all(|c| c.is_zero()));
        // base dx^1 pads with zeros
        let h = lift_form(&wg, Factor::Base, &OneForm::basis(2, 0));
        assert!(h.at(0).is_one() && h.at(1).is_zero() && h.at(2).is_zero() && h.at(3).is_zero());
        // cross-block pairings vanish identically
        let v = lift_form(&wg, Factor::Fiber, &OneForm::new(vec![x(0), x(1).powi(2)]));
        let cross = pair_g(&wg.product.g, &h, &v);
        assert_eq!(max_abs_over_plan(&[cross], &plan).unwrap(), 0.0);
    }

    #[test]
    fn warped_connection_blocks_general_case() {
        // genuinely warped: non-Casimir f and curved factor cometrics
        let spec = WarpedSpec {
            base: FactorSpec {
                chart: Chart::unit(2),
                g: Cometric::new(ExprMatrix::from_fn(2, |i, j| match (i, j) {
                    (0, 0) => Expr::one(),
                    (1, 1) => Expr::one() + x(0).powi(2),
                    _ => Expr::div(x(0), Expr::constant(2.0)),
                })),
                pi: BivectorField::r2(Expr::one() + &x(0) * &x(1)),
            },
            fiber: FactorSpec {
                chart: y_chart(2),
                g: Cometric::new(ExprMatrix::from_fn(2, |i, j| match (i, j) {
                    (0, 0) => Expr::one(),
                    (1, 1) => Expr::constant(2.0),
                    _ => Expr::div(x(0), Expr::constant(3.0)),
                })),
                pi: BivectorField::r2(x(0) - Expr::div(x(1), Expr::constant(2.0))),
            },
            f: Expr::one() + x(0).powi(2),
        };
        let (wg, plan) = build(&spec, 3, 16);
        let rep = warped_connection_residual(&wg, &plan).unwrap();
        assert!(rep.base_block < 1e-9, "base {}", rep.base_block);
        assert!(rep.fiber_block < 1e-9, "fiber {}", rep.fiber_block);
        assert!(rep.mixed_block < 1e-9, "mixed {}", rep.mixed_block);
    }

    #[test]
    fn casimir_warp_collapses_corrections() {
        // zero base bivector makes every f Casimir; corrections vanish
        let spec = WarpedSpec {
            base: FactorSpec {
                chart: Chart::unit(2),
                g: Cometric::identity(2),
                pi: BivectorField::zero(2),
            },
            fiber: FactorSpec {
                chart: y_chart(2),
                g: Cometric::identity(2),
                pi: BivectorField::r2(Expr::one() + &x(0) * &x(1)),
            },
            f: Expr::one() + x(0).powi(2),
        };
        let (wg, plan) = build(&spec, 4, 16);
        let rep = warped_connection_residual(&wg, &plan).unwrap();
        assert!(rep.fiber_block < 1e-10 && rep.mixed_block < 1e-10);

        let eta1 = OneForm::new(vec![x(1), x(0)]);
        let eta2 = OneForm::new(vec![x(0).powi(2), &x(0) * &x(1)]);
        let lie = warped_lie_residual(&wg, &eta1, &eta2, &plan, 1e-8).unwrap();
        assert!(lie.full < 1e-9);
        let collapsed = lie.casimir_collapsed.expect("gate passes");
        assert!(collapsed < 1e-10);

        let pairing = warped_pairing_residual(&wg, &eta1, &eta2, &plan, 1e-8).unwrap();
        assert!(pairing.full < 1e-9);
        assert!(pairing.casimir_collapsed.unwrap() < 1e-10);
    }

    #[test]
    fn lie_split_dual_route_non_casimir() {
        let spec = two_two_spec(
            Expr::one(),
            x(0) - Expr::div(x(1), Expr::constant(2.0)),
            Expr::one(),
        );
        let spec = WarpedSpec {
            f: Expr::one() + x(0).powi(2),
            ..spec
        };
        let (wg, plan) = build(&spec, 5, 16);
        let eta1 = OneForm::new(vec![x(1), Expr::div(&x(0) * &x(1), Expr::constant(2.0))]);
        let eta2 = OneForm::new(vec![x(1).powi(2), x(0)]);
        let rep = warped_lie_residual(&wg, &eta1, &eta2, &plan, 1e-8).unwrap();
        assert!(rep.full < 1e-8, "full split residual {}", rep.full);
        assert!(rep.casimir_collapsed.is_none(), "gate must fail for 1+x1^2");

        let pairing = warped_pairing_residual(&wg, &eta1, &eta2, &plan, 1e-8).unwrap();
        assert!(pairing.full < 1e-8, "{}", pairing.full);
    }

    #[test]
    fn iterated_lie_split_non_casimir() {
        // the deepest oracle: curved factor cometrics, non-Casimir warp
        let spec = WarpedSpec {
            base: FactorSpec {
                chart: Chart::unit(2),
                g: Cometric::new(ExprMatrix::from_fn(2, |i, j| match (i, j) {
                    (0, 0) => Expr::one(),
                    (1, 1) => Expr::one() + x(0).powi(2),
                    _ => Expr::div(x(0), Expr::constant(2.0)),
                })),
                pi: BivectorField::r2(Expr::one() + &x(0) * &x(1)),
            },
            fiber: FactorSpec {
                chart: y_chart(2),
                g: Cometric::new(ExprMatrix::from_fn(2, |i, j| match (i, j) {
                    (0, 0) => Expr::one(),
                    (1, 1) => Expr::constant(2.0),
                    _ => Expr::div(x(0), Expr::constant(3.0)),
                })),
                pi: BivectorField::r2(x(0) - Expr::div(x(1), Expr::constant(2.0))),
            },
            f: Expr::one() + x(0).powi(2),
        };
        let (wg, plan) = build(&spec, 6, 12);
        let eta1 = OneForm::new(vec![x(1), Expr::div(&x(0) * &x(1), Expr::constant(2.0))]);
        let eta2 = OneForm::new(vec![
            Expr::div(x(1).powi(2), Expr::constant(3.0)),
            Expr::div(x(0), Expr::constant(2.0)),
        ]);
        let res = warped_lie2_residual(&wg, &eta1, &eta2, &plan).unwrap();
        assert!(res < 1e-7, "iterated split residual {res}");
    }

    #[test]
    fn factorization_and_killing_splits() {
        // flat constant factors, constant warp: everything Riemannian-Poisson
        let spec = two_two_spec(Expr::constant(1.5), Expr::one(), Expr::constant(2.0));
        let (wg, plan) = build(&spec, 7, 16);
        let rp = riemannian_poisson_split(&wg, &plan, 1e-8).unwrap().unwrap();
        assert!(rp.base && rp.fiber && rp.product);
        assert!(rp.consistent());

        // Killing split: eta1 = (x1, x2) Killing on the base, constant eta2
        let eta1 = OneForm::new(vec![x(0), x(1)]);
        let eta2 = OneForm::new(vec![Expr::one(), Expr::constant(-1.0)]);
        let ks = killing_split_check(&wg, &eta1, &eta2, &plan, 1e-8)
            .unwrap()
            .unwrap();
        assert!(ks.base.verdict && ks.fiber.verdict && ks.product.verdict);
        assert!(ks.consistent());

        let k2 = two_killing_split_check(&wg, &eta1, &eta2, &plan, 1e-8)
            .unwrap()
            .unwrap();
        assert!(k2.consistent());

        // breaking the fiber form must break the product verdict
        let bad2 = OneForm::new(vec![x(1), Expr::zero()]);
        let ks = killing_split_check(&wg, &eta1, &bad2, &plan, 1e-8)
            .unwrap()
            .unwrap();
        assert!(!ks.fiber.verdict && !ks.product.verdict && ks.base.verdict);
        assert!(ks.consistent());

        // non-Casimir warp: checks are skipped
        let spec = two_two_spec(Expr::one() + x(0).powi(2), Expr::one(), Expr::one());
        let (wg, plan) = build(&spec, 8, 8);
        assert!(riemannian_poisson_split(&wg, &plan, 1e-8)
            .unwrap()
            .is_none());
        assert!(killing_split_check(&wg, &eta1, &eta2, &plan, 1e-8)
            .unwrap()
            .is_none());
    }

    #[test]
    fn norm_splitting() {
        // nontrivial Killing form on the base, constant on the fiber,
        // nonconstant Casimir warp (zero base bivector)
        let spec = WarpedSpec {
            base: FactorSpec {
                chart: Chart::unit(2),
                g: Cometric::identity(2),
                pi: BivectorField::zero(2),
            },
            fiber: FactorSpec {
                chart: y_chart(2),
                g: Cometric::identity(2),
                pi: BivectorField::r2(Expr::constant(2.0)),
            },
            f: Expr::one() + x(0).powi(2),
        };
        let (wg, plan) = build(&spec, 9, 16);
        let eta1 = OneForm::new(vec![&x(0) * &x(1), x(1)]); // any form: base D == 0
        let eta2 = OneForm::new(vec![x(0), x(1)]); // Killing for constant Pi2
        let res = dnorm_split_residual(&wg, &eta1, &eta2, &plan, 1e-8)
            .unwrap()
            .expect("gates pass");
        assert!(res < 1e-9, "norm split residual {res}");

        // zero forms: residual identically zero
        let res = dnorm_split_residual(&wg, &OneForm::zero(2), &OneForm::zero(2), &plan, 1e-8)
            .unwrap()
            .unwrap();
        assert_eq!(res, 0.0);

        // 1-dim fiber forces both factor bivectors trivial; all residuals 0
        let tiny = WarpedSpec {
            base: FactorSpec {
                chart: Chart::new(vec!["x1".into()], vec![[-1.0, 1.0]]).unwrap(),
                g: Cometric::identity(1),
                pi: BivectorField::zero(1),
            },
            fiber: FactorSpec {
                chart: Chart::new(vec!["y1".into()], vec![[-1.0, 1.0]]).unwrap(),
                g: Cometric::identity(1),
                pi: BivectorField::zero(1),
            },
            f: Expr::one() + x(0).powi(2),
        };
        let chart = tiny.product_chart().unwrap();
        let plan = sample_plan(&chart, 10, 8).unwrap();
        let wg = build_warped(&tiny, &plan).unwrap();
        let rep = warped_connection_residual(&wg, &plan).unwrap();
        assert!(rep.base_block == 0.0 && rep.fiber_block < 1e-15 && rep.mixed_block < 1e-15);
    }
}
