use serde::{Deserialize, Serialize};

use crate::algebra::{with_field, Field, QuadPoly};
use crate::error::{Error, Result};
use crate::opcore::{
    check_annihilated, equal_on_window_named, CheckReport, LazyOp, RepAut, Report, RuleSpec, Window, WindowSpec,
};

/// A factorization `target = f_1 ⋯ f_k` with each `f_i` annihilated by its declared polynomial,
/// checked on a window of the target's basis.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub field: Field,
    pub target: RepAut,
    pub factors: Vec<LazyOp>,
    pub window: WindowSpec,
    pub report: Report,
    pub provenance: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct FactorRepr {
    annihilator: QuadPoly,
    rule: RuleSpec,
}

#[derive(Serialize, Deserialize)]
struct Repr {
    field: Field,
    target: RepAut,
    factors: Vec<FactorRepr>,
    window: WindowSpec,
    #[serde(default)]
    report: Report,
    #[serde(default)]
    provenance: serde_json::Value,
}

impl Certificate {
    /// Verifies `factors` against `target` on the window given by `spec` and seals the result.
    pub fn seal(
        target: &RepAut,
        factors: Vec<LazyOp>,
        spec: WindowSpec,
        provenance: serde_json::Value,
    ) -> Result<Certificate> {
        let mut cert = Certificate {
            field: target.field(),
            target: target.clone(),
            factors,
            window: spec,
            report: Report::default(),
            provenance,
        };
        cert.report = verify_certificate(target, &cert, &Window::for_aut(target, &spec));
        if let Some((check, failure)) = cert.report.first_failure() {
            let at = failure.index.as_ref().map(|i| format!(" at {i}")).unwrap_or_default();
            return Err(Error::VerificationFailed(format!("{}{at}: {}", check.check, failure.detail)));
        }
        Ok(cert)
    }

    /// Adds extra evidence to the stored report.
    pub fn with_evidence(mut self, checks: impl IntoIterator<Item = CheckReport>) -> Certificate {
        for c in checks {
            self.report.push(c);
        }
        self
    }

    pub fn annihilators(&self) -> Vec<QuadPoly> {
        self.factors.iter().filter_map(|f| f.annihilator().cloned()).collect()
    }

    pub fn product(&self) -> Result<LazyOp> {
        LazyOp::compose(&self.factors)
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let factors = self
            .factors
            .iter()
            .map(|f| {
                let annihilator = f
                    .annihilator()
                    .cloned()
                    .ok_or_else(|| Error::Malformed("certificate factor without annihilator".into()))?;
                Ok(FactorRepr { annihilator, rule: f.spec().clone() })
            })
            .collect::<Result<Vec<_>>>()?;
        let repr = Repr {
            field: self.field,
            target: self.target.clone(),
            factors,
            window: self.window,
            report: self.report.clone(),
            provenance: self.provenance.clone(),
        };
        serde_json::to_value(repr).map_err(|e| Error::Malformed(e.to_string()))
    }

    pub fn to_json_string(&self) -> Result<String> {
        serde_json::to_string_pretty(&self.to_json()?).map_err(|e| Error::Malformed(e.to_string()))
    }

    pub fn from_json_str(s: &str) -> Result<Certificate> {
        let v: serde_json::Value = serde_json::from_str(s).map_err(|e| Error::Malformed(e.to_string()))?;
        Certificate::from_json(v)
    }

    pub fn from_json(v: serde_json::Value) -> Result<Certificate> {
        let field: Field = v
            .get("field")
            .cloned()
            .ok_or_else(|| Error::Malformed("certificate has no field tag".into()))
            .and_then(|f| serde_json::from_value(f).map_err(|e| Error::Malformed(e.to_string())))?;
        let repr: Repr = with_field(field, || serde_json::from_value(v)).map_err(|e| Error::Malformed(e.to_string()))?;
        if repr.target.field() != field {
            return Err(Error::FieldMismatch(field.tag(), repr.target.field().tag()));
        }
        let factors = repr
            .factors
            .into_iter()
            .map(|f| LazyOp::quadratic(f.rule, f.annihilator))
            .collect::<Result<Vec<_>>>()?;
        Ok(Certificate {
            field,
            target: repr.target,
            factors,
            window: repr.window,
            report: repr.report,
            provenance: repr.provenance,
        })
    }
}

/// Re-checks a certificate against `u` on `window`, independently of how it was built.
pub fn verify_certificate(u: &RepAut, cert: &Certificate, window: &Window) -> Report {
    let mut report = Report::default();
    let mut target = CheckReport::new("certificate target matches");
    target.record(cert.target == *u, None, || "certificate was issued for a different operator".into());
    report.push(target);
    let mut count = CheckReport::new("factor count in 1..=4");
    count.record((1..=4).contains(&cert.factors.len()), None, || format!("{} factors", cert.factors.len()));
    report.push(count);
    for (k, f) in cert.factors.iter().enumerate() {
        let mut decl = CheckReport::new(format!("factor {k}: declared annihilator split and non-derogatory"));
        match f.annihilator() {
            Some(p) => {
                decl.record(p.is_split() && p.is_non_derogatory(), None, || format!("{p}"));
                report.push(decl);
                let mut r = check_annihilated(f, p, window);
                r.check = format!("factor {k}: {}", r.check);
                report.push(r);
            }
            None => {
                decl.record(false, None, || "no annihilator declared".into());
                report.push(decl);
            }
        }
    }
    if !cert.factors.is_empty() {
        match cert.product() {
            Ok(prod) => report.push(equal_on_window_named("product equals target", &prod, u, window)),
            Err(e) => {
                let mut r = CheckReport::new("product equals target");
                r.record(false, None, || e.to_string());
                report.push(r);
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat;
    use crate::opcore::{BasisIndex, BlockwiseSpec, Cell};

    fn swap_cert() -> (RepAut, Certificate) {
        let f = Field::prime(5).unwrap();
        let m = Mat::from_i64(f, &[&[0, 1], &[1, 0]]);
        let u = RepAut::builder(f).finite("F0", m.clone()).periodic("P0", Mat::identity(f, 1)).build().unwrap();
        let cell = Cell { indices: vec![BasisIndex::new("F0", 0), BasisIndex::new("F0", 1)], matrix: m };
        let rule = RuleSpec::Blockwise(BlockwiseSpec { cells: vec![cell], streams: vec![], tail: Some(f.one()) });
        let inv = QuadPoly::parse("t^2-1", f).unwrap();
        let factor = LazyOp::quadratic(rule, inv).unwrap();
        let cert = Certificate::seal(&u, vec![factor], WindowSpec::default(), serde_json::json!({"branch": "test"})).unwrap();
        (u, cert)
    }

    #[test]
    fn json_round_trip_and_reverify() {
        let (u, cert) = swap_cert();
        let s = cert.to_json_string().unwrap();
        let back = Certificate::from_json_str(&s).unwrap();
        assert_eq!(back.factors, cert.factors);
        assert_eq!(back.target, u);
        let w = Window::for_aut(&u, &WindowSpec::default().doubled());
        assert!(verify_certificate(&u, &back, &w).passed());
    }

    #[test]
    fn tampered_factor_fails_with_index() {
        let (u, cert) = swap_cert();
        let mut v = cert.to_json().unwrap();
        v["factors"][0]["rule"]["cells"][0]["matrix"]["entries"][0][0] = serde_json::json!("2");
        let bad = Certificate::from_json(v).unwrap();
        let r = verify_certificate(&u, &bad, &Window::for_aut(&u, &WindowSpec::default()));
        assert!(!r.passed());
        let (_, failure) = r.first_failure().unwrap();
        assert!(failure.index.is_some());
    }

    #[test]
    fn wrong_target_fails() {
        let (u, cert) = swap_cert();
        let f = u.field();
        let other = RepAut::builder(f).finite("F0", Mat::identity(f, 2)).periodic("P0", Mat::identity(f, 1)).build().unwrap();
        let r = verify_certificate(&other, &cert, &Window::for_aut(&other, &WindowSpec::default()));
        assert!(!r.passed());
    }
}
