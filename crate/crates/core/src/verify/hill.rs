//! Evolution of `V(x, t) = B(u_1(a_1·x, t), …)` and its minimum principle.

use std::sync::Arc;
use std::time::Instant;

use crate::catalog::{ehrhard_b, Candidate, DEFAULT_MARGIN};
use crate::error::{Error, Result};
use crate::flows::{ComposedV, Datum, SpecialFlow, DEFAULT_ORDER};
use crate::grid::GridSpec;
use crate::linalg::{ColumnSystem, SymMatrix};
use crate::pde::{check_second_type_at, construct_c_for_b};
use crate::profile::ProfileFunction;
use crate::quadrature::GaussHermite;
use crate::report::{sweep, CheckReport, PointEval};

use super::gmc::check_data;
use super::supconv::{sup_convolution, Lift};

/// The Ehrhard triple `B = u_3 - Φ(α₁Φ⁻¹(u_1) + α₂Φ⁻¹(u_2))` with columns
/// `e_1, e_2, α`, the planar `C` for `α`, and `u_3` a sup-convolution
/// majorant of the first two data.
#[derive(Clone, Debug)]
pub struct HillSetup {
    pub b: Arc<dyn Candidate>,
    pub sys: ColumnSystem,
    pub c: SymMatrix,
    pub data: Vec<Arc<dyn Datum>>,
    pub eps_h: f64,
}

impl HillSetup {
    /// Fails with the admissibility condition when no `C` exists for `α`.
    pub fn ehrhard(alphas: [f64; 2], u1: Arc<dyn Datum>, u2: Arc<dyn Datum>, delta: f64, radius: f64) -> Result<Self> {
        let w = construct_c_for_b(&alphas)?;
        let profile = ProfileFunction::Gaussian;
        let sc = sup_convolution(&profile, alphas, [u1.as_ref(), u2.as_ref()], delta, radius, Lift::MaxJump)?;
        let u3: Arc<dyn Datum> = Arc::new(sc.datum()?);
        Ok(Self {
            b: Arc::new(ehrhard_b(alphas.to_vec(), profile)?),
            sys: ColumnSystem::basis_plus(&alphas)?,
            c: w.c,
            data: vec![u1, u2, u3],
            eps_h: sc.eps_h,
        })
    }
}

fn on_boundary(grid: &GridSpec, x: &[f64]) -> bool {
    grid.axes().iter().zip(x).any(|(a, &v)| v == a.lo || v == a.hi)
}

/// Minimum of `V` over `space × {t_0 = 0, …, t_{m-1} = T}`.
///
/// Requires `V(·, 0) ≥ -tol` on the space grid and the second-type condition
/// at the points `u(x, 0)`; either failing is a precondition error. The
/// report's `boundary_min` extra is the minimum over boundary grid points.
#[allow(clippy::too_many_arguments)]
pub fn hill_evolution(
    b: Arc<dyn Candidate>,
    sys: &ColumnSystem,
    c: &SymMatrix,
    data: &[Arc<dyn Datum>],
    horizon: f64,
    space: &GridSpec,
    time_samples: usize,
    tol: f64,
) -> Result<CheckReport> {
    let start = Instant::now();
    check_data(b.as_ref(), data)?;
    if space.dim() != sys.k() {
        return Err(Error::usage(format!("space grid has dimension {}, expected {}", space.dim(), sys.k())));
    }
    if !(horizon > 0.0) || time_samples < 2 {
        return Err(Error::usage("need a positive horizon and at least two time samples"));
    }
    let flows = data
        .iter()
        .enumerate()
        .map(|(j, d)| SpecialFlow::new(d.clone(), sys.column(j), c))
        .collect::<Result<Vec<_>>>()?;
    let v = ComposedV::new(b.clone(), flows)?;
    let rule = GaussHermite::new(DEFAULT_ORDER);
    let pts = space.points();

    let initial = sweep("hill-initial", &pts, tol, |x| {
        Ok(Some(PointEval::new(-v.eval(x, 0.0, &rule)?.value)))
    })?;
    if !initial.passed() {
        return Err(Error::precondition(format!(
            "V(x, 0) = {} < -{tol} at x = {:?}",
            -initial.max_residual,
            initial.argmax
        )));
    }
    let dom = b.domain().shrunk(DEFAULT_MARGIN);
    let args: Vec<Vec<f64>> = pts
        .iter()
        .map(|x| {
            v.flows
                .iter()
                .enumerate()
                .map(|(j, f)| dom.clamp_axis(j, f.datum.value(f.project(x))).0)
                .collect()
        })
        .collect();
    let second = check_second_type_at(b.as_ref(), sys, c, &args, 1e-6)?;
    if !second.passed() {
        return Err(Error::precondition(format!(
            "second-type condition fails at u = {:?} (residual {})",
            second.argmax, second.max_residual
        )));
    }

    let times: Vec<f64> = (0..time_samples).map(|i| horizon * i as f64 / (time_samples - 1) as f64).collect();
    let mut grid: Vec<Vec<f64>> = Vec::with_capacity(pts.len() * times.len());
    for x in &pts {
        for &t in &times {
            let mut p = x.clone();
            p.push(t);
            grid.push(p);
        }
    }
    let k = sys.k();
    let mut r = sweep(format!("hill[{}]", b.name()), &grid, tol, |p| {
        let e = v.eval(&p[..k], p[k], &rule)?;
        let bd = if on_boundary(space, &p[..k]) { -e.value } else { f64::NEG_INFINITY };
        Ok(Some(
            PointEval::new(-e.value)
                .with("boundary_neg_min", bd)
                .with("clamps", e.clamps as f64),
        ))
    })?;
    let min_v = -r.max_residual;
    let bmin = -r.extra("boundary_neg_min").unwrap_or(f64::NEG_INFINITY);
    r.extras.remove("boundary_neg_min");
    r = r
        .with_extra("min_v", min_v)
        .with_extra("boundary_min", bmin)
        .with_extra("initial_min", -initial.max_residual)
        .with_extra("second_type_residual", second.max_residual);
    if bmin < -tol {
        r.note(format!("boundary proxy violated: min {bmin}"));
    }
    r.settle();
    Ok(r.timed(start))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::flows::{Constant, GaussianBump, MollifiedInterval};
    use crate::pde::A1Infeasible;

    fn ehrhard_data() -> (Arc<dyn Datum>, Arc<dyn Datum>) {
        (
            Arc::new(MollifiedInterval::with_levels(-1.0, 1.0, 0.5, 0.05, 0.9).unwrap()),
            Arc::new(GaussianBump::new(0.5, 1.0, 0.7, 0.1).unwrap()),
        )
    }

    #[test]
    fn ehrhard_triple_keeps_v_nonnegative() {
        let (u1, u2) = ehrhard_data();
        let s = HillSetup::ehrhard([0.6, 0.6], u1, u2, 0.01, 10.0).unwrap();
        let space = GridSpec::uniform(2, -4.0, 4.0, 11).unwrap();
        let r = hill_evolution(s.b, &s.sys, &s.c, &s.data, 1.0, &space, 5, 1e-6).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.extra("boundary_min").unwrap() >= -1e-6);
    }

    #[test]
    fn inadmissible_coefficients_are_refused() {
        let (u1, u2) = ehrhard_data();
        match HillSetup::ehrhard([3.0, 1.0], u1, u2, 0.01, 10.0) {
            Err(Error::Infeasible(A1Infeasible::Dominant { .. })) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn constants_stay_constant() {
        let b: Arc<dyn Candidate> = Arc::new(ehrhard_b(vec![0.6, 0.6], ProfileFunction::Gaussian).unwrap());
        let alphas = [0.6, 0.6];
        let sys = ColumnSystem::basis_plus(&alphas).unwrap();
        let c = construct_c_for_b(&alphas).unwrap().c;
        let h = crate::special::norm_cdf(1.2 * crate::special::norm_inv(0.4).unwrap());
        let data: Vec<Arc<dyn Datum>> = vec![Arc::new(Constant(0.4)), Arc::new(Constant(0.4)), Arc::new(Constant(h + 0.01))];
        let space = GridSpec::uniform(2, -1.0, 1.0, 3).unwrap();
        let r = hill_evolution(b, &sys, &c, &data, 1.0, &space, 3, 1e-12).unwrap();
        assert!(r.passed());
        assert!((r.extra("min_v").unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn violated_initial_condition_is_a_precondition_error() {
        let b: Arc<dyn Candidate> = Arc::new(ehrhard_b(vec![0.6, 0.6], ProfileFunction::Gaussian).unwrap());
        let alphas = [0.6, 0.6];
        let sys = ColumnSystem::basis_plus(&alphas).unwrap();
        let c = construct_c_for_b(&alphas).unwrap().c;
        let data: Vec<Arc<dyn Datum>> = vec![Arc::new(Constant(0.4)), Arc::new(Constant(0.4)), Arc::new(Constant(0.1))];
        let space = GridSpec::uniform(2, -1.0, 1.0, 3).unwrap();
        assert!(matches!(
            hill_evolution(b, &sys, &c, &data, 1.0, &space, 3, 1e-12),
            Err(Error::Precondition(_))
        ));
    }
}
