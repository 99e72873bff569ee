//! Instance files: problem data, optional certificate and strong-convexity
//! modulus, as one JSON document.
//!
//! Infinite bounds encode as the strings `"inf"` / `"-inf"`; everything else
//! is plain JSON numbers. Quadratic objectives carry either a dense row-major
//! Hessian (`f = x'Hx/2 + q'x + c0`) or an `m x n` factor
//! (`f = ||Qx||^2 + q'x + c0`).

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{
    FactoredQuadratic, ObjectiveForm, Problem, QuadraticObjective, SolutionCertificate,
};

/// A problem plus whatever ground truth is known about it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: String,
    pub problem: Problem,
    pub certificate: Option<SolutionCertificate>,
    /// Analytic strong-convexity modulus (smallest Hessian eigenvalue), when
    /// the generator knows it.
    pub mu: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExtReal {
    Num(f64),
    Word(String),
}

impl ExtReal {
    fn encode(v: f64) -> Self {
        if v == f64::INFINITY {
            ExtReal::Word("inf".into())
        } else if v == f64::NEG_INFINITY {
            ExtReal::Word("-inf".into())
        } else {
            ExtReal::Num(v)
        }
    }

    fn decode(&self) -> Result<f64> {
        match self {
            ExtReal::Num(v) => Ok(*v),
            ExtReal::Word(w) => match w.as_str() {
                "inf" | "+inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                other => Err(Error::BadInstance(format!(
                    "unrecognized bound value {other:?}"
                ))),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum ObjectiveJson {
    Quadratic {
        /// Dense row-major `n*n` Hessian.
        h: Vec<f64>,
        q: Vec<f64>,
        #[serde(default)]
        c0: f64,
    },
    FactoredQuadratic {
        m: usize,
        /// Row-major `m*n` factor.
        factor: Vec<f64>,
        q: Vec<f64>,
        #[serde(default)]
        c0: f64,
    },
}

#[derive(Serialize, Deserialize)]
struct InstanceJson {
    #[serde(default)]
    name: String,
    n: usize,
    b: f64,
    l: Vec<ExtReal>,
    u: Vec<ExtReal>,
    objective: ObjectiveJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    certificate: Option<SolutionCertificate>,
}

impl Instance {
    pub fn to_json_string(&self) -> String {
        let p = &self.problem;
        let objective = match p.oracle().objective_form() {
            Some(ObjectiveForm::Dense { h, q, c0 }) => ObjectiveJson::Quadratic { h, q, c0 },
            Some(ObjectiveForm::Factored { m, factor, q, c0 }) => {
                ObjectiveJson::FactoredQuadratic { m, factor, q, c0 }
            }
            None => {
                // a foreign oracle can still serialize through its Hessian
                let h = p
                    .oracle()
                    .constant_hessian()
                    .expect("serializable instances need a quadratic oracle");
                let q = p.gradient(&vec![0.0; p.dim()]);
                let c0 = p.eval(&vec![0.0; p.dim()]);
                ObjectiveJson::Quadratic { h, q, c0 }
            }
        };
        let doc = InstanceJson {
            name: self.name.clone(),
            n: p.dim(),
            b: p.rhs(),
            l: p.lower().iter().map(|&v| ExtReal::encode(v)).collect(),
            u: p.upper().iter().map(|&v| ExtReal::encode(v)).collect(),
            objective,
            mu: self.mu,
            certificate: self.certificate.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("instance serializes")
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let doc: InstanceJson = serde_json::from_str(text)
            .map_err(|e| Error::BadInstance(format!("JSON parse error: {e}")))?;
        let lower = doc
            .l
            .iter()
            .map(ExtReal::decode)
            .collect::<Result<Vec<f64>>>()?;
        let upper = doc
            .u
            .iter()
            .map(ExtReal::decode)
            .collect::<Result<Vec<f64>>>()?;
        if lower.len() != doc.n || upper.len() != doc.n {
            return Err(Error::BadInstance(format!(
                "bound vectors must have length n = {}",
                doc.n
            )));
        }
        let oracle: Arc<dyn crate::problem::Objective> = match doc.objective {
            ObjectiveJson::Quadratic { h, q, c0 } => {
                Arc::new(QuadraticObjective::new(doc.n, h, q, c0)?)
            }
            ObjectiveJson::FactoredQuadratic { m, factor, q, c0 } => {
                Arc::new(FactoredQuadratic::new(m, doc.n, factor, q, c0)?)
            }
        };
        let problem = Problem::new(doc.b, lower, upper, oracle)?;
        if let Some(cert) = &doc.certificate {
            if cert.x_star.len() != doc.n {
                return Err(Error::BadInstance("certificate dimension mismatch".into()));
            }
        }
        Ok(Instance {
            name: doc.name,
            problem,
            certificate: doc.certificate,
            mu: doc.mu,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1_instance() -> Instance {
        let c = [0.5, 0.7, -0.2];
        let c0 = 0.5 * c.iter().map(|v| v * v).sum::<f64>();
        let oracle = QuadraticObjective::new(
            3,
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
            c.iter().map(|v| -v).collect(),
            c0,
        )
        .unwrap();
        Instance {
            name: "e1".into(),
            problem: Problem::new(1.0, vec![0.0; 3], vec![f64::INFINITY; 3], Arc::new(oracle))
                .unwrap(),
            certificate: None,
            mu: Some(1.0),
        }
    }

    #[test]
    fn round_trip_preserves_bounds_and_objective() {
        let inst = e1_instance();
        let text = inst.to_json_string();
        assert!(text.contains("\"inf\""));
        let back = Instance::from_json_str(&text).unwrap();
        assert_eq!(back.problem.dim(), 3);
        assert_eq!(back.problem.rhs(), 1.0);
        assert_eq!(back.problem.upper(), &[f64::INFINITY; 3]);
        assert_eq!(back.mu, Some(1.0));
        let x = [0.4, 0.6, 0.0];
        assert_eq!(back.problem.eval(&x), inst.problem.eval(&x));
        for i in 0..3 {
            assert_eq!(back.problem.partial(&x, i), inst.problem.partial(&x, i));
        }
    }

    #[test]
    fn factored_objective_round_trips() {
        let fq = FactoredQuadratic::new(
            2,
            3,
            vec![1.0, -0.5, 0.25, 0.0, 2.0, -1.0],
            vec![-1.0, 0.5, 2.0],
            0.0,
        )
        .unwrap();
        let inst = Instance {
            name: String::new(),
            problem: Problem::new(
                0.0,
                vec![-1.0, -1.0, -1.0],
                vec![1.0, 1.0, 1.0],
                Arc::new(fq),
            )
            .unwrap(),
            certificate: None,
            mu: None,
        };
        let text = inst.to_json_string();
        assert!(text.contains("factored_quadratic"));
        let back = Instance::from_json_str(&text).unwrap();
        let x = [0.3, -0.2, 0.9];
        assert!((back.problem.eval(&x) - inst.problem.eval(&x)).abs() < 1e-15);
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert!(Instance::from_json_str("not json").is_err());
        assert!(Instance::from_json_str("{\"n\": 2}").is_err());
        let bad_bound = r#"{"n":2,"b":1.0,"l":[0.0,"wat"],"u":[1.0,1.0],
            "objective":{"kind":"quadratic","h":[1.0,0.0,0.0,1.0],"q":[0.0,0.0]}}"#;
        assert!(Instance::from_json_str(bad_bound).is_err());
    }
}
