use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Observation model linking reported proportions to the weekly composition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Likelihood {
    /// Reverse Dirichlet-multinomial with latent sample counts.
    Rdm,
    /// Moment-matching single-stage Dirichlet.
    Mmd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prior {
    /// Independent Dirichlet(1) per week.
    DirichletFlat,
    /// Softmax of a latent AR(1) field.
    Ar1,
}

/// Every escapement estimator the crate can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    Mom,
    MomAlt,
    MomNaive,
    Bayes { likelihood: Likelihood, prior: Prior },
}

impl Method {
    /// All seven settings in results-table order.
    pub const ALL: [Method; 7] = [
        Method::Bayes { likelihood: Likelihood::Rdm, prior: Prior::DirichletFlat },
        Method::Bayes { likelihood: Likelihood::Rdm, prior: Prior::Ar1 },
        Method::Bayes { likelihood: Likelihood::Mmd, prior: Prior::DirichletFlat },
        Method::Bayes { likelihood: Likelihood::Mmd, prior: Prior::Ar1 },
        Method::Mom,
        Method::MomAlt,
        Method::MomNaive,
    ];

    pub fn is_bayesian(&self) -> bool {
        matches!(self, Method::Bayes { .. })
    }

    /// Model column of a results table.
    pub fn model_label(&self) -> &'static str {
        match self {
            Method::Mom => "MoM",
            Method::MomAlt => "MoM(Alt)",
            Method::MomNaive => "MoM(Naive)",
            Method::Bayes { likelihood: Likelihood::Rdm, .. } => "RDM",
            Method::Bayes { likelihood: Likelihood::Mmd, .. } => "MMD",
        }
    }

    /// Prior column of a results table.
    pub fn prior_label(&self) -> &'static str {
        match self {
            Method::Bayes { prior: Prior::DirichletFlat, .. } => "Dir",
            Method::Bayes { prior: Prior::Ar1, .. } => "AR(1)",
            _ => "N/A",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Mom => "mom",
            Method::MomAlt => "mom-alt",
            Method::MomNaive => "mom-naive",
            Method::Bayes { likelihood, prior } => {
                let l = match likelihood {
                    Likelihood::Rdm => "rdm",
                    Likelihood::Mmd => "mmd",
                };
                let p = match prior {
                    Prior::DirichletFlat => "dir",
                    Prior::Ar1 => "ar1",
                };
                return write!(f, "{l}-{p}");
            }
        };
        f.write_str(s)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        let s = s.to_ascii_lowercase();
        Method::ALL
            .into_iter()
            .find(|m| m.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

impl FromStr for Prior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "dir" | "dirichlet" => Ok(Prior::DirichletFlat),
            "ar1" | "ar(1)" => Ok(Prior::Ar1),
            other => Err(Error::InvalidArgument(format!("unknown prior {other:?}"))),
        }
    }
}
