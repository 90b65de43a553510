pub mod functionals;
pub mod functions;
pub mod oracle;
pub mod simulate;
pub mod tensor;

use crate::CliError;

pub(crate) fn require_seed(flag: Option<u64>, file: Option<u64>, command: &str) -> Result<u64, CliError> {
    flag.or(file).ok_or_else(|| CliError::Config(format!("{command} is randomised and needs --seed or `seed` in the config")))
}

pub(crate) fn positive(name: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {x}")))
    }
}
