//! Problems shipped with the binary, each with reference spectra.

use serde::{Deserialize, Serialize};
use sl_maslov_core::slp::{lowest_eigenvalues, Method};
use sl_maslov_core::Tolerances;

use crate::error::CliError;
use crate::format::{parse_json, BcSpec, ProblemFile};

/// `--problem bundled:<name>` selects a bundled problem.
pub const PREFIX: &str = "bundled:";
pub const REFERENCE_SCHEMA: &str = "sl-maslov/reference/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Separable solutions written down by hand.
    ClosedForm,
    /// Output of the shooting solver at the recorded tolerances.
    Computed,
}

/// Lowest eigenvalues of a bundled problem, repeated by multiplicity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReferenceSpectrum {
    pub schema: String,
    pub problem: String,
    pub bc: String,
    pub provenance: Provenance,
    pub method: Option<Method>,
    pub tolerances: Option<Tolerances>,
    pub values: Vec<f64>,
}

impl ReferenceSpectrum {
    /// Recomputes the spectrum by shooting with the default tolerances.
    pub fn compute(example: &BundledExample, bc: &str, count: usize) -> Result<Self, CliError> {
        let tol = Tolerances::default();
        let p = example.problem_file().build()?;
        let l0 = BcSpec::from_arg(bc)?.frame(p.n(), &tol)?;
        let spec = lowest_eigenvalues(&p, &l0, count, &tol)?;
        let mut values = spec.values();
        values.truncate(count);
        Ok(ReferenceSpectrum {
            schema: REFERENCE_SCHEMA.to_string(),
            problem: example.name.to_string(),
            bc: bc.to_string(),
            provenance: Provenance::Computed,
            method: Some(Method::Shooting),
            tolerances: Some(tol),
            values,
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct BundledExample {
    pub name: &'static str,
    pub description: &'static str,
    source: &'static str,
    references: &'static [(&'static str, &'static str)],
}

impl BundledExample {
    pub fn source(&self) -> &'static str {
        self.source
    }

    pub fn problem_file(&self) -> ProblemFile {
        ProblemFile::parse(self.source, self.name).expect("bundled problems parse")
    }

    /// `(file name, reference)` pairs.
    pub fn reference_spectra(&self) -> Vec<(&'static str, ReferenceSpectrum)> {
        self.references
            .iter()
            .map(|(file, text)| {
                (
                    *file,
                    parse_json::<ReferenceSpectrum>(text, file).expect("bundled references parse"),
                )
            })
            .collect()
    }
}

macro_rules! reference {
    ($file:literal) => {
        ($file, include_str!(concat!("../data/reference/", $file)))
    };
}

const EXAMPLES: [BundledExample; 4] = [
    BundledExample {
        name: "free1d",
        description: "x'' + lambda x = 0 on [0, pi]",
        source: include_str!("../data/problems/free1d.json"),
        references: &[
            reference!("free1d_dirichlet.json"),
            reference!("free1d_neumann.json"),
            reference!("free1d_periodic.json"),
            reference!("free1d_antiperiodic.json"),
        ],
    },
    BundledExample {
        name: "potential1d",
        description: "degree-6 Taylor polynomial of cos t as potential on [0, pi]",
        source: include_str!("../data/problems/potential1d.json"),
        references: &[
            reference!("potential1d_dirichlet.json"),
            reference!("potential1d_neumann.json"),
        ],
    },
    BundledExample {
        name: "double2d",
        description: "two decoupled copies of free1d",
        source: include_str!("../data/problems/double2d.json"),
        references: &[
            reference!("double2d_dirichlet.json"),
            reference!("double2d_neumann.json"),
        ],
    },
    BundledExample {
        name: "coupled2d",
        description: "n = 2 constant coefficients with P, Q, R coupled, T = 2",
        source: include_str!("../data/problems/coupled2d.json"),
        references: &[
            reference!("coupled2d_dirichlet.json"),
            reference!("coupled2d_periodic.json"),
        ],
    },
];

pub fn bundled_examples() -> &'static [BundledExample] {
    &EXAMPLES
}

pub fn find(name: &str) -> Option<&'static BundledExample> {
    EXAMPLES.iter().find(|e| e.name == name)
}
