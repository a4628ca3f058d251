//! `price` command.

use clap::ValueEnum;
use credbond::{
    bond_price, callable_bond_price, puttable_bond_price, zcb_price, DValues, OptionKind, OptionPricer,
};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::CliResult;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Instrument {
    Zcb,
    Bond,
    PutOption,
    CallOption,
    Puttable,
    Callable,
}

impl Instrument {
    pub fn name(self) -> &'static str {
        match self {
            Instrument::Zcb => "zcb",
            Instrument::Bond => "bond",
            Instrument::PutOption => "put-option",
            Instrument::CallOption => "call-option",
            Instrument::Puttable => "puttable",
            Instrument::Callable => "callable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub z: f64,
    pub x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub total_variance: Option<f64>,
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub boundary_l: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d_values: Option<DValues<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceOutput {
    pub instrument: Instrument,
    pub price: f64,
    pub diagnostics: Diagnostics,
    pub config_echo: RunConfig,
}

/// Prices `instrument` at the configuration's evaluation point.
pub fn price(config: &RunConfig, instrument: Instrument) -> CliResult<PriceOutput> {
    let params = config.params()?;
    let bond = config.bond_spec()?;
    let state = config.market_state();
    let maturity = bond.maturity_t;

    let (price, diagnostics) = match instrument {
        Instrument::Zcb => {
            let z = zcb_price(state.r, state.t, maturity, &params)?;
            (z, Diagnostics { z, x: state.v / z, ..Diagnostics::default() })
        }
        Instrument::Bond => straight(config)?,
        Instrument::PutOption | Instrument::CallOption => {
            let kind = if instrument == Instrument::PutOption { OptionKind::Put } else { OptionKind::Call };
            let pricer = OptionPricer::new(config.option_spec()?, bond, params)?;
            let res = pricer.price(kind, &state)?;
            let (_, straight_diag) = straight(config)?;
            let diag = Diagnostics {
                z: res.z,
                x: res.x,
                boundary_l: Some(res.boundary_l),
                d_values: res.dvalues,
                ..straight_diag
            };
            (res.price, diag)
        }
        Instrument::Puttable | Instrument::Callable => {
            let spec = config.option_spec()?;
            let (_, mut diag) = straight(config)?;
            let value = if instrument == Instrument::Puttable {
                puttable_bond_price(&state, &spec, &bond, &params)?
            } else {
                callable_bond_price(&state, &spec, &bond, &params)?
            };
            if state.t <= spec.expiry_t1 {
                let pricer = OptionPricer::new(spec, bond, params)?;
                let res = pricer.price(OptionKind::Put, &state)?;
                diag.boundary_l = Some(res.boundary_l);
                diag.d_values = res.dvalues;
            }
            (value, diag)
        }
    };
    Ok(PriceOutput { instrument, price, diagnostics, config_echo: *config })
}

fn straight(config: &RunConfig) -> CliResult<(f64, Diagnostics)> {
    let res = bond_price(&config.market_state(), &config.bond_spec()?, &config.params()?)?;
    Ok((
        res.price,
        Diagnostics {
            z: res.z,
            x: res.x,
            w: Some(res.w),
            total_variance: Some(res.total_variance),
            ..Diagnostics::default()
        },
    ))
}

/// Serialises with `indent` spaces per level, or compactly when `indent` is 0.
pub fn to_json<T: Serialize>(value: &T, indent: usize) -> String {
    if indent == 0 {
        return serde_json::to_string(value).expect("output types always serialise");
    }
    let indent_bytes = vec![b' '; indent];
    let formatter = serde_json::ser::PrettyFormatter::with_indent(&indent_bytes);
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, formatter);
    value.serialize(&mut ser).expect("output types always serialise");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}
