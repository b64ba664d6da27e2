//! Experiment configuration files.
//!
//! A config is a TOML document with the sections `[model]`, `[kernel]`,
//! `[payoff]`, `[mc]` and `[reference]`. Every section may be omitted; the
//! defaults reproduce the benchmark experiment. See `configs/benchmark.toml`.

use std::path::Path;

use rough_heston::reference::ReferenceSettings;
use rough_heston::scheme_v::VolterraOptions;
use rough_heston::scheme_x::IntegratedOptions;
use rough_heston::{Kernel, McConfig, ModelParams, Payoff, SchemeKind, Workers};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub s0: f64,
    pub v0: f64,
    pub theta: f64,
    pub lambda: f64,
    pub nu: f64,
    pub rho: f64,
    pub horizon: f64,
}

impl Default for ModelSection {
    fn default() -> Self {
        let p = ModelParams::benchmark();
        Self {
            s0: p.s0,
            v0: p.v0,
            theta: p.theta,
            lambda: p.lambda,
            nu: p.nu,
            rho: p.rho,
            horizon: p.horizon,
        }
    }
}

/// Kernel scale: a number or `"gamma_normalized"` for `1/Γ(H+1/2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scale {
    Value(f64),
    Named(String),
}

impl Scale {
    fn resolve(&self, field: &str, hurst: f64) -> Result<f64, CliError> {
        match self {
            Scale::Value(c) => Ok(*c),
            Scale::Named(name) if name == "gamma_normalized" => {
                Ok(1.0 / statrs::function::gamma::gamma(hurst + 0.5))
            }
            Scale::Named(other) => Err(CliError::config(
                field,
                format!("expected a number or \"gamma_normalized\", got \"{other}\""),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    PowerLaw {
        c: Scale,
        #[serde(rename = "H")]
        hurst: f64,
    },
    ExpDamped {
        c: Scale,
        beta: f64,
        #[serde(rename = "H")]
        hurst: f64,
    },
    Log,
    Sum {
        terms: Vec<KernelSpec>,
    },
    Product {
        factors: Vec<KernelSpec>,
    },
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec::PowerLaw {
            c: Scale::Named("gamma_normalized".into()),
            hurst: 0.1,
        }
    }
}

impl KernelSpec {
    pub fn build(&self) -> Result<Kernel, CliError> {
        self.build_at("kernel")
    }

    fn build_at(&self, field: &str) -> Result<Kernel, CliError> {
        let wrap = |e: rough_heston::Error| CliError::config(field, e.to_string());
        match self {
            KernelSpec::PowerLaw { c, hurst } => {
                Kernel::power_law(c.resolve(&format!("{field}.c"), *hurst)?, *hurst).map_err(wrap)
            }
            KernelSpec::ExpDamped { c, beta, hurst } => {
                Kernel::exponentially_damped(c.resolve(&format!("{field}.c"), *hurst)?, *beta, *hurst)
                    .map_err(wrap)
            }
            KernelSpec::Log => Ok(Kernel::log_kernel()),
            KernelSpec::Sum { terms } => {
                let built = terms
                    .iter()
                    .enumerate()
                    .map(|(i, t)| t.build_at(&format!("{field}.terms[{i}]")))
                    .collect::<Result<Vec<_>, _>>()?;
                Kernel::sum(built).map_err(wrap)
            }
            KernelSpec::Product { factors } => match factors.as_slice() {
                [a, b] => Ok(Kernel::product(
                    a.build_at(&format!("{field}.factors[0]"))?,
                    b.build_at(&format!("{field}.factors[1]"))?,
                )),
                _ => Err(CliError::config(
                    &format!("{field}.factors"),
                    format!("a product kernel takes exactly two factors, got {}", factors.len()),
                )),
            },
        }
    }
}

/// Payoff section. Kept loose so that misplaced fields get a field-level
/// message instead of a generic parse error.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayoffSpec {
    #[serde(rename = "type")]
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub strike: Option<f64>,
}

impl Default for PayoffSpec {
    fn default() -> Self {
        Self {
            kind: "european_call".into(),
            strike: Some(1.0),
        }
    }
}

impl PayoffSpec {
    pub fn build(&self, model: &ModelParams) -> Result<Payoff, CliError> {
        let strike = || {
            self.strike
                .ok_or_else(|| CliError::config("payoff.strike", format!("required for {}", self.kind)))
        };
        let wrap = |e: rough_heston::Error| CliError::config("payoff.strike", e.to_string());
        match self.kind.as_str() {
            "european_call" => Payoff::european_call(strike()?).map_err(wrap),
            "asian_call" => Payoff::asian_call(strike()?).map_err(wrap),
            "lookback_call" => Payoff::lookback_call(strike()?).map_err(wrap),
            "variance_swap" | "variance_call" if self.strike.is_some() => Err(CliError::config(
                "payoff.strike",
                format!(
                    "{} takes no strike (the variance call is struck at model.v0)",
                    self.kind
                ),
            )),
            "variance_swap" => Ok(Payoff::VarianceSwap),
            "variance_call" => Payoff::variance_call(model.v0).map_err(wrap),
            other => Err(CliError::config(
                "payoff.type",
                format!(
                    "unknown payoff `{other}`; expected european_call, asian_call, lookback_call, \
                     variance_swap or variance_call"
                ),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McSection {
    pub scheme: SchemeKind,
    pub steps: usize,
    pub num_paths: usize,
    pub clip_variance_in_x: bool,
    pub exact_theta_drift: bool,
}

impl Default for McSection {
    fn default() -> Self {
        Self {
            scheme: SchemeKind::Integrated,
            steps: 160,
            num_paths: 10_000,
            clip_variance_in_x: false,
            exact_theta_drift: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed, overridden by `--seed`.
    pub seed: u64,
    pub model: ModelSection,
    pub kernel: KernelSpec,
    pub payoff: PayoffSpec,
    pub mc: McSection,
    pub reference: ReferenceSettings,
}

/// A config with every cross-field check passed and every object built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub params: ModelParams,
    pub kernel: Kernel,
    pub payoff: Payoff,
    pub mc: McConfig,
    pub reference: ReferenceSettings,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config {
            field: "config".into(),
            reason: e.message().to_string(),
        })
    }

    pub fn resolve(&self, seed: Option<u64>, workers: Workers) -> Result<Experiment, CliError> {
        let m = &self.model;
        let params = ModelParams::new(m.s0, m.v0, m.theta, m.lambda, m.nu, m.rho, m.horizon)
            .map_err(|e| CliError::from_core("model", e))?;
        let kernel = self.kernel.build()?;
        let payoff = self.payoff.build(&params)?;
        let mut mc = McConfig::new(
            self.mc.scheme,
            self.mc.steps,
            self.mc.num_paths,
            seed.unwrap_or(self.seed),
        )
        .with_workers(workers);
        mc.volterra = VolterraOptions {
            clip_variance_in_x: self.mc.clip_variance_in_x,
        };
        mc.integrated = IntegratedOptions {
            exact_theta_drift: self.mc.exact_theta_drift,
        };
        mc.validate().map_err(|e| CliError::from_core("mc", e))?;
        let r = &self.reference;
        if !(r.damping > 0.0 && r.tail_threshold > 0.0) {
            return Err(CliError::config(
                "reference",
                "damping and tail_threshold must be positive",
            ));
        }
        Ok(Experiment {
            params,
            kernel,
            payoff,
            mc,
            reference: *r,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_benchmark() {
        let c = ExperimentConfig::parse("").unwrap();
        let e = c.resolve(None, Workers::Auto).unwrap();
        assert_eq!(e.params, ModelParams::benchmark());
        assert_eq!(e.kernel, Kernel::gamma_normalized(0.1).unwrap());
        assert_eq!(e.payoff, Payoff::EuropeanCall { strike: 1.0 });
    }

    #[test]
    fn shipped_config_matches_defaults() {
        let text = include_str!("../../../configs/benchmark.toml");
        assert_eq!(ExperimentConfig::parse(text).unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn variance_call_rejects_a_strike() {
        let c = ExperimentConfig::parse("[payoff]\ntype = \"variance_call\"\nstrike = 0.02\n").unwrap();
        let err = c.resolve(None, Workers::Auto).unwrap_err();
        assert!(err.to_string().contains("payoff.strike"), "{err}");
        let c = ExperimentConfig::parse("[payoff]\ntype = \"variance_call\"\n").unwrap();
        let e = c.resolve(None, Workers::Auto).unwrap();
        assert_eq!(e.payoff, Payoff::VarianceCall { strike: 0.02 });
    }

    #[test]
    fn composite_kernels() {
        let text = r#"
            [kernel]
            type = "sum"
            terms = [
                { type = "power_law", c = 0.5, H = 0.2 },
                { type = "product", factors = [{ type = "log" }, { type = "exp_damped", c = "gamma_normalized", beta = 1.0, H = 0.3 }] },
            ]
        "#;
        let k = ExperimentConfig::parse(text).unwrap().kernel.build().unwrap();
        assert_eq!(k.hurst_exponent(), 0.2);
    }

    #[test]
    fn field_level_messages() {
        let bad_scale = "[kernel]\ntype = \"power_law\"\nc = \"unit\"\nH = 0.1\n";
        let err = ExperimentConfig::parse(bad_scale).unwrap().kernel.build().unwrap_err();
        assert!(err.to_string().contains("kernel.c"), "{err}");
        assert!(ExperimentConfig::parse("[model]\nsigma = 1.0\n").is_err());
        let err = ExperimentConfig::parse("[model]\nrho = 2.0\n")
            .unwrap()
            .resolve(None, Workers::Auto)
            .unwrap_err();
        assert!(err.to_string().contains("rho"), "{err}");
    }
}
