//! Validated run configuration.

use dops_core::exactnum::parse_rational;
use dops_core::verify::default_grid;
use dops_core::{MeixnerParams, Rational, SuiteConfig};
use serde_json::{json, Map, Value};

use crate::output::CliError;
use crate::CommonArgs;

const DEFAULT_R: usize = 2;
const DEFAULT_BETA: (i64, i64) = (3, 2);
const DEFAULT_C: (i64, i64) = (1, 2);

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// One entry for `table`, `eval` and `weights`; the grid for `verify`.
    pub params: Vec<MeixnerParams>,
    pub n_max: usize,
    pub k_max: usize,
    pub size: usize,
    pub prec: u32,
    pub tol: f64,
    /// `tol` as given on the command line, echoed in the output.
    pub tol_text: String,
    pub k_cap: usize,
}

impl RunConfig {
    /// Missing `--r`, `--beta` or `--c` fall back to r = 2, beta = 3/2, c = 1/2.
    pub fn single(args: &CommonArgs) -> Result<Self, CliError> {
        let p = explicit_params(args)?;
        Self::with_params(args, vec![p])
    }

    /// Any of `--r`, `--beta`, `--c` selects one parameter set; otherwise the default grid.
    pub fn grid(args: &CommonArgs) -> Result<Self, CliError> {
        if args.r.is_none() && args.beta.is_none() && args.c.is_none() {
            Self::with_params(args, default_grid())
        } else {
            Self::single(args)
        }
    }

    fn with_params(args: &CommonArgs, params: Vec<MeixnerParams>) -> Result<Self, CliError> {
        if args.prec < 64 {
            return Err(CliError::Usage(format!("--prec must be at least 64, got {}", args.prec)));
        }
        let tol: f64 =
            args.tol.trim().parse().map_err(|_| CliError::Usage(format!("--tol: bad number {:?}", args.tol)))?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::Usage(format!("--tol must be positive, got {}", args.tol)));
        }
        if args.n_trunc < 2 {
            return Err(CliError::Usage(format!("--N must be at least 2, got {}", args.n_trunc)));
        }
        if args.kcap == 0 {
            return Err(CliError::Usage("--kcap must be positive".into()));
        }
        Ok(RunConfig {
            params,
            n_max: args.nmax,
            k_max: args.kmax,
            size: args.n_trunc,
            prec: args.prec,
            tol,
            tol_text: args.tol.trim().to_string(),
            k_cap: args.kcap,
        })
    }

    pub fn first(&self) -> &MeixnerParams {
        &self.params[0]
    }

    pub fn suite_config(&self) -> SuiteConfig {
        SuiteConfig {
            n_max: self.n_max,
            k_max: self.k_max,
            size: self.size,
            prec: self.prec,
            tol: self.tol,
            k_cap: self.k_cap,
            ..SuiteConfig::default()
        }
    }

    /// The `params` block shared by every command.
    pub fn params_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        if let [p] = self.params.as_slice() {
            m.insert("r".into(), json!(p.r));
            m.insert("d".into(), json!(p.d()));
            m.insert("beta".into(), json!(p.beta.to_string()));
            m.insert("c".into(), json!(p.c.to_string()));
        } else {
            let grid: Vec<String> = self.params.iter().map(|p| format!("{},{},{}", p.r, p.beta, p.c)).collect();
            m.insert("grid".into(), json!(grid.join(";")));
        }
        m.insert("n_max".into(), json!(self.n_max));
        m.insert("k_max".into(), json!(self.k_max));
        m.insert("N".into(), json!(self.size));
        m.insert("precision_bits".into(), json!(self.prec));
        m.insert("tol".into(), json!(self.tol_text));
        m
    }
}

fn explicit_params(args: &CommonArgs) -> Result<MeixnerParams, CliError> {
    let r = args.r.unwrap_or(DEFAULT_R);
    let beta = match &args.beta {
        Some(s) => parse_rational(s).map_err(|e| CliError::Usage(format!("--beta: {e}")))?,
        None => Rational::from(DEFAULT_BETA),
    };
    let c = match &args.c {
        Some(s) => parse_rational(s).map_err(|e| CliError::Usage(format!("--c: {e}")))?,
        None => Rational::from(DEFAULT_C),
    };
    Ok(MeixnerParams::new(r, beta, c)?)
}
