use crate::config::ConfigErrors;

/// Process exit codes. Every failure maps to exactly one category.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// A check ran and reported FAIL.
    CheckFailed,
    Config,
    /// Unreadable or malformed input files, or unwritable outputs.
    Input,
    /// The data lies outside the domain of the method (trapped start,
    /// focal point, non-definite metric, ...).
    Precondition,
    /// A numerical terminal status other than success.
    Numerical,
    Capability,
}

impl Category {
    pub fn code(self) -> i32 {
        match self {
            Category::CheckFailed => 1,
            Category::Config => 2,
            Category::Input => 3,
            Category::Precondition => 4,
            Category::Numerical => 5,
            Category::Capability => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::CheckFailed => "check-failed",
            Category::Config => "config",
            Category::Input => "input",
            Category::Precondition => "precondition",
            Category::Numerical => "numerical",
            Category::Capability => "capability",
        }
    }

    pub fn of(e: &nullflow::Error) -> Self {
        use nullflow::Error as E;
        match e {
            E::Parse(_) | E::Io(_) => Category::Input,
            E::Parameter(_) | E::Shape(_) | E::Lattice(_) => Category::Config,
            E::Precondition { .. }
            | E::Domain(_)
            | E::Definiteness { .. }
            | E::Geometry(_)
            | E::NotANullCone { .. }
            | E::ExitedDomain { .. }
            | E::FocalPointReached { .. } => Category::Precondition,
            E::Stiffness { .. } | E::Resolution(_) | E::Reparametrization(_) => Category::Numerical,
            E::Capability(_) => Category::Capability,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(#[from] ConfigErrors),
    #[error("{0}")]
    Core(#[from] nullflow::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn category(&self) -> Category {
        match self {
            CliError::Config(_) => Category::Config,
            CliError::Core(e) => Category::of(e),
            CliError::Io(_) => Category::Input,
        }
    }

    /// Machine-readable details for the report.
    pub fn details(&self) -> serde_json::Value {
        use nullflow::Error as E;
        match self {
            CliError::Config(c) => serde_json::json!({ "errors": c.0 }),
            CliError::Core(E::Precondition { reason, nodes }) => {
                serde_json::json!({ "kind": "precondition", "reason": reason, "nodes": nodes })
            }
            CliError::Core(E::ExitedDomain { nodes }) => serde_json::json!({ "kind": "exited-domain", "nodes": nodes }),
            CliError::Core(E::FocalPointReached { lambda, last_valid }) => {
                serde_json::json!({ "kind": "focal-point", "lambda": lambda, "last_valid": last_valid })
            }
            CliError::Core(E::Stiffness { t, dt }) => serde_json::json!({ "kind": "stiffness", "t": t, "dt": dt }),
            _ => serde_json::Value::Null,
        }
    }
}
