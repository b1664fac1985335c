use serde_json::json;

use crate::algebra::QuadPoly;
use crate::error::{Error, Result};
use crate::factorize::adjacency::{adjacency_free, adjacency_strat, Adjacency};
use crate::factorize::certificate::Certificate;
use crate::factorize::finite_rank::{finite_rank_three, DEFAULT_QMAX};
use crate::factorize::kill::{kill_dominant, relabel};
use crate::factorize::transport::{component_evidence, shift_components, transport_pair, Component};
use crate::glsearch::Budget;
use crate::modulestruct::build_strat_periodic;
use crate::opcore::{CheckReport, CyclicReport, LazyOp, RepAut, RuleSpec, WindowSpec};

/// Tuning knobs shared by the pipelines.
#[derive(Debug, Clone)]
pub struct PipelineOptions {
    pub qmax: usize,
    pub budget: Budget,
    /// First pairing seed for the dominant-eigenvalue killer.
    pub seed: u64,
    pub retries: u64,
    /// Orbit depth allowed when transporting shift-pair factors.
    pub max_depth: usize,
    /// Depth of the cyclic evidence recorded per component.
    pub evidence_depth: usize,
    pub window: WindowSpec,
    pub search_support: usize,
    pub backtrack: usize,
}

impl Default for PipelineOptions {
    fn default() -> PipelineOptions {
        PipelineOptions {
            qmax: DEFAULT_QMAX,
            budget: Budget::default(),
            seed: 0,
            retries: 4,
            max_depth: 1024,
            evidence_depth: 12,
            window: WindowSpec::default(),
            search_support: 4,
            backtrack: 2,
        }
    }
}

fn check_polys(polys: &[&QuadPoly]) -> Result<()> {
    for p in polys {
        if !p.is_non_derogatory() {
            return Err(Error::DerogatoryInput);
        }
        if !p.is_split() {
            return Err(Error::NotSplit);
        }
    }
    let f = polys[0].field();
    match polys.iter().find(|p| p.field() != f) {
        Some(p) => Err(Error::FieldMismatch(f.tag(), p.field().tag())),
        None => Ok(()),
    }
}

fn evidence_checks(reports: &[CyclicReport]) -> Vec<CheckReport> {
    reports.iter().enumerate().map(|(k, r)| r.to_check(&format!("component {k}: cyclic orbit independent"))).collect()
}

/// `p, q` factors of an elementary `v`, transported onto its cyclic components.
fn elementary_pair(
    v: &LazyOp,
    components: &[Component],
    p: &QuadPoly,
    q: &QuadPoly,
    opts: &PipelineOptions,
) -> Result<(LazyOp, LazyOp, Vec<CyclicReport>)> {
    let evidence = component_evidence(v, components, opts.evidence_depth)?;
    let (f, g) = transport_pair(v, components.to_vec(), p, q, opts.max_depth)?;
    Ok((f, g, evidence))
}

/// A `(p, q)`-factorization of a direct sum of scaled shifts.
pub fn elementary_factor_pq(u: &RepAut, p: &QuadPoly, q: &QuadPoly, opts: &PipelineOptions) -> Result<Certificate> {
    check_polys(&[p, q])?;
    let components = shift_components(u)?;
    let (f, g, evidence) = elementary_pair(&LazyOp::from_aut(u), &components, p, q, opts)?;
    Ok(Certificate::seal(u, vec![f, g], opts.window, json!({ "branch": "elementary", "components": components.len() }))?
        .with_evidence(evidence_checks(&evidence)))
}

/// A `(p1, p2, p3)`-factorization.
///
/// With a dominant eigenvalue the finite-rank reduction decides. Otherwise `u` is made
/// `p1#`-adjacent to an elementary `v = a∘u`, which splits as a `(p2, p3)`-product, so that
/// `u = a⁻¹·f·g`.
pub fn factor_three(u: &RepAut, polys: [&QuadPoly; 3], opts: &PipelineOptions) -> Result<Certificate> {
    check_polys(&polys)?;
    if u.dominant_eigenvalue().is_some() {
        let cert = finite_rank_three(u, polys, opts.qmax, &opts.budget)?;
        if opts.window == WindowSpec::default() {
            return Ok(cert);
        }
        return Certificate::seal(u, cert.factors, opts.window, cert.provenance);
    }
    let p1_sharp = polys[0].reciprocal()?;
    let (adj, mut provenance): (Adjacency, _) = if u.shift_blocks().is_empty() {
        let s = build_strat_periodic(u, opts.search_support, opts.backtrack)?;
        let adj = adjacency_strat(u, &s, &p1_sharp)?;
        (adj, json!({ "branch": "torsion", "stratification": s }))
    } else {
        let adj = adjacency_free(u, &p1_sharp)?;
        let mut prov = json!({ "branch": "shift" });
        if !u.coupling().is_empty() {
            prov["evidence"] = json!("window-certified");
        }
        (adj, prov)
    };
    let (f, g, evidence) = elementary_pair(&adj.v, &adj.components, polys[1], polys[2], opts)?;
    let a_inv = LazyOp::quadratic(adj.a.invert()?.spec().clone(), polys[0].clone())?;
    provenance["roots"] = json!(polys.iter().map(|p| p.roots().map(|(x, y)| [x.to_string(), y.to_string()])).collect::<Vec<_>>());
    Ok(Certificate::seal(u, vec![a_inv, f, g], opts.window, provenance)?.with_evidence(evidence_checks(&evidence)))
}

/// A `(p1, p2, p3, p4)`-factorization; exists for every representable automorphism.
pub fn factor_four(u: &RepAut, polys: [&QuadPoly; 4], opts: &PipelineOptions) -> Result<Certificate> {
    check_polys(&polys)?;
    let rest = [polys[1], polys[2], polys[3]];
    if u.dominant_eigenvalue().is_none() {
        let (omega, _) = polys[0].roots().ok_or(Error::NotSplit)?;
        let inner = factor_three(&u.scaled(&omega.inv()?)?, rest, opts)?;
        let mut factors = vec![LazyOp::quadratic(RuleSpec::Scalar { value: omega.clone() }, polys[0].clone())?];
        factors.extend(inner.factors.iter().cloned());
        let provenance = json!({ "branch": "four_scaled", "omega": omega.to_string(), "inner": inner.provenance });
        return Ok(Certificate::seal(u, factors, opts.window, provenance)?.with_evidence(inner.report.checks));
    }
    let p1_sharp = polys[0].reciprocal()?;
    let mut trace = Vec::new();
    for seed in opts.seed..opts.seed + opts.retries.max(1) {
        let killed = kill_dominant(u, &p1_sharp, seed)?;
        let inner = match factor_three(&killed.v_rep, rest, opts) {
            Ok(c) => c,
            Err(Error::BuilderStuck(why)) => {
                trace.push(format!("seed {seed}: {why}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        let mut factors = vec![LazyOp::quadratic(killed.a.invert()?.spec().clone(), polys[0].clone())?];
        for f in &inner.factors {
            factors.push(match &killed.map {
                Some(m) => relabel(f, m)?,
                None => f.clone(),
            });
        }
        let provenance = json!({ "branch": "four_killed", "pairing_seed": seed, "retries": trace, "inner": inner.provenance });
        return Certificate::seal(u, factors, opts.window, provenance);
    }
    Err(Error::BuilderStuck(trace.join("; ")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Field;
    use crate::error::Refusal;
    use crate::factorize::certificate::verify_certificate;
    use crate::linalg::Mat;
    use crate::opcore::{BasisIndex, LinComb, Window};

    fn inv(f: Field) -> QuadPoly {
        QuadPoly::parse("t^2-1", f).unwrap()
    }

    fn reverify(u: &RepAut, cert: &Certificate) {
        assert!(cert.report.passed());
        let w = Window::for_aut(u, &WindowSpec::default().doubled());
        assert!(verify_certificate(u, cert, &w).passed());
    }

    #[test]
    fn shift_three_involutions() {
        let f = Field::prime(5).unwrap();
        let p = inv(f);
        let u = RepAut::shift(f);
        let cert = factor_three(&u, [&p, &p, &p], &PipelineOptions::default()).unwrap();
        assert_eq!(cert.factors.len(), 3);
        reverify(&u, &cert);
    }

    #[test]
    fn torsion_companion_copies() {
        let f = Field::prime(5).unwrap();
        let p = inv(f);
        let c = Mat::companion(&QuadPoly::parse("t^2-t-1", f).unwrap());
        let u = RepAut::builder(f).periodic("P0", c).build().unwrap();
        let cert = factor_three(&u, [&p, &p, &p], &PipelineOptions::default()).unwrap();
        assert_eq!(cert.provenance["branch"], "torsion");
        reverify(&u, &cert);
    }

    #[test]
    fn scalar_refused() {
        let f = Field::prime(7).unwrap();
        let p = inv(f);
        let u = RepAut::scalar(&f.from_i64(3)).unwrap();
        let r = factor_three(&u, [&p, &p, &p], &PipelineOptions::default());
        assert!(matches!(r, Err(Error::Refused(Refusal::NotAcceptable(_)))));
    }

    #[test]
    fn elementary_examples() {
        let f7 = Field::prime(7).unwrap();
        let p = inv(f7);
        let opts = PipelineOptions::default();
        let three = RepAut::builder(f7).shift("S0", f7.from_i64(3)).build().unwrap();
        reverify(&three, &elementary_factor_pq(&three, &p, &p, &opts).unwrap());
        let two = RepAut::builder(f7).shift("S0", f7.one()).shift("S1", f7.one()).build().unwrap();
        reverify(&two, &elementary_factor_pq(&two, &p, &p, &opts).unwrap());
    }

    #[test]
    fn four_factors_after_killing() {
        let f = Field::prime(7).unwrap();
        let p = inv(f);
        let e = BasisIndex::periodic("P0", 0, 0);
        let u = RepAut::builder(f)
            .periodic("P0", Mat::scalar(&f.from_i64(3), 1))
            .perturb(e.clone(), LinComb::term(BasisIndex::periodic("P0", 1, 0), f.one()))
            .build()
            .unwrap();
        let cert = factor_four(&u, [&p, &p, &p, &p], &PipelineOptions::default()).unwrap();
        assert_eq!(cert.factors.len(), 4);
        reverify(&u, &cert);
    }

    #[test]
    fn four_factors_without_dominant_eigenvalue() {
        let f = Field::prime(5).unwrap();
        let p = QuadPoly::parse("(t-1)^2", f).unwrap();
        let u = RepAut::shift(f);
        let cert = factor_four(&u, [&p, &p, &p, &p], &PipelineOptions::default()).unwrap();
        assert_eq!(cert.factors[0].spec(), &RuleSpec::Scalar { value: f.one() });
        reverify(&u, &cert);
    }
}
