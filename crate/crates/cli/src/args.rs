use std::path::PathBuf;

use clap::{ArgAction, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "sl-krein",
    version,
    about = "Boundary data maps, Krein formulas and spectral shifts for regular Sturm-Liouville problems"
)]
pub struct Cli {
    /// Problem document (JSON file) or preset name: free-unit, free-pi, step-q, step-p.
    #[arg(short = 'p', long, global = true)]
    pub problem: Option<String>,

    /// Integrator tolerance; for `verify`, an upper bound on every acceptance limit.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,

    /// Output file instead of stdout.
    #[arg(short = 'o', long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BdmCheck {
    /// Identity, inverse and composition through `--via`.
    Group,
    /// Smallest eigenvalue of `Im(Lambda S*)`; needs `Im z > 0`.
    Herglotz,
    /// Direct evaluation against the linear fractional form.
    Fractional,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Parametrization {
    Ab,
    Dn,
    Unitary,
    Canonical,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Basis {
    Pair,
    Gamma,
}

/// Boundary conditions are a name (dirichlet, neumann, periodic, antiperiodic,
/// kvn), a JSON document, or `@file`.
#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenvalues in a window.
    Eigs {
        #[arg(long)]
        bc: String,
        #[arg(long, num_args = 2, value_names = ["LO", "HI"], allow_negative_numbers = true, required = true)]
        window: Vec<f64>,
    },
    /// The boundary data map on a list of spectral parameters.
    Bdm {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Spectral parameters, comma separated or repeated: `--z -1,2+2i --z 0+1i`.
        #[arg(long, required = true, allow_hyphen_values = true, value_delimiter = ',', action = ArgAction::Append)]
        z: Vec<String>,
        #[arg(long, value_enum)]
        check: Option<BdmCheck>,
        /// Intermediate condition of the composition check.
        #[arg(long, default_value = "dirichlet")]
        via: String,
        #[arg(long, default_value_t = 1e-8)]
        max_residual: f64,
    },
    /// Green's function of one extension at pairs of points.
    Green {
        #[arg(long)]
        bc: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        x: Vec<f64>,
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        xp: Vec<f64>,
    },
    /// Spectral shift function from eigenvalue counting, optionally against the boundary route.
    Ssf {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        #[arg(long, allow_negative_numbers = true)]
        lmax: f64,
        /// Points at which to evaluate the boundary route.
        #[arg(long, num_args = 1.., allow_negative_numbers = true)]
        lambda: Vec<f64>,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
    },
    /// Trace formula: eigenvalue sums against the log-derivative of det Lambda.
    Trace {
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
        /// Spectral parameters, comma separated or repeated: `--z -1,2+2i --z 0+1i`.
        #[arg(long, required = true, allow_hyphen_values = true, value_delimiter = ',', action = ArgAction::Append)]
        z: Vec<String>,
        #[arg(long, default_value_t = 40)]
        n_eigs: usize,
        #[arg(long, default_value_t = 1e-6)]
        max_residual: f64,
    },
    /// Both sides of the Krein resolvent formula on three trial functions.
    Krein {
        #[arg(long, alias = "bc")]
        target: String,
        #[arg(long, default_value = "dirichlet")]
        reference: String,
        /// Spectral parameters, comma separated or repeated: `--z -1,2+2i --z 0+1i`.
        #[arg(long, required = true, allow_hyphen_values = true, value_delimiter = ',', action = ArgAction::Append)]
        z: Vec<String>,
        #[arg(long, default_value_t = 1e-6)]
        max_residual: f64,
    },
    /// Convert a boundary condition between parametrizations.
    Convert {
        #[arg(long)]
        bc: String,
        #[arg(long, value_enum, default_value_t = Parametrization::Unitary)]
        to: Parametrization,
    },
    /// Von Neumann's isometry between the deficiency spaces.
    Vn {
        #[arg(long)]
        bc: String,
        /// Use the boundary data map route with this reference condition.
        #[arg(long)]
        reference: Option<String>,
        /// Basis of the result for the boundary data map route.
        #[arg(long, value_enum, default_value_t = Basis::Gamma)]
        basis: Basis,
        #[arg(long, default_value_t = 1e-7)]
        max_residual: f64,
    },
    /// Run the built-in acceptance suite.
    Verify {
        #[arg(long, default_value = "free")]
        suite: String,
        /// Run only these criteria.
        #[arg(long, num_args = 1..)]
        criterion: Vec<u8>,
    },
}
