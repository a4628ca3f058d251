//! `sweep` command: one pricing run per grid value of a single variable.

use crate::config::{RunConfig, SweepConfig};
use crate::error::{CliError, CliResult};
use crate::price::{price, Instrument};

pub const HEADER: &str = "axis_value,price,z,x,w,note";

/// CSV text (header plus one row per sweep point). Rows whose point is
/// outside the model domain keep the axis value, leave the numeric cells
/// empty and name the error in the note column.
pub fn sweep(config: &RunConfig, instrument: Instrument, spec: &SweepConfig) -> CliResult<String> {
    spec.validate()?;
    if spec.axis == crate::config::Axis::Exercise && config.option.is_none() {
        return Err(CliError::Config("option: section required to sweep E".into()));
    }
    let mut out = String::from(HEADER);
    out.push('\n');
    for value in spec.points() {
        let row = config.with_axis(spec.axis, value).and_then(|point| {
            point.validate()?;
            price(&point, instrument)
        });
        let line = match row {
            Ok(res) => {
                let d = res.diagnostics;
                format!("{value},{},{},{},{},", res.price, d.z, d.x, d.w.map(|w| w.to_string()).unwrap_or_default())
            }
            Err(CliError::Domain(err)) => format!("{value},,,,,{}", err.name()),
            Err(CliError::Config(msg)) => format!("{value},,,,,InvalidParams: {}", msg.replace([',', '\n'], ";")),
            Err(other) => return Err(other),
        };
        out.push_str(&line);
        out.push('\n');
    }
    Ok(out)
}
