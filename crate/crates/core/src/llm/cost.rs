use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LlmError, Usage};

/// USD per one million tokens.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Price {
    pub input_per_mtok: f64,
    pub output_per_mtok: f64,
}

/// Model name to price. Lookups are by exact name after alias resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PricingTable {
    #[serde(default)]
    pub models: BTreeMap<String, Price>,
    /// Alias to canonical model name.
    #[serde(default)]
    pub aliases: BTreeMap<String, String>,
}

impl Default for PricingTable {
    fn default() -> Self {
        let rows: [(&str, f64, f64, &[&str]); 5] = [
            ("gpt-5", 1.25, 10.0, &["gpt-5-2025-08-07"]),
            ("o3", 2.0, 8.0, &["gpt-o3", "o3-2025-04-16"]),
            ("gpt-4o", 2.5, 10.0, &["gpt-4o-2024-11-20"]),
            ("gemini-2.5-pro", 1.25, 15.0, &["gemini-2.5-pro-preview-05-06"]),
            ("gemini-1.5-pro", 1.25, 10.0, &["gemini-1.5-pro-002"]),
        ];
        let mut table = PricingTable {
            models: BTreeMap::new(),
            aliases: BTreeMap::new(),
        };
        for (name, i, o, aliases) in rows {
            table.models.insert(
                name.into(),
                Price {
                    input_per_mtok: i,
                    output_per_mtok: o,
                },
            );
            for a in aliases {
                table.aliases.insert((*a).into(), name.into());
            }
        }
        table
    }
}

impl PricingTable {
    /// Defaults extended (and overridden) by a TOML document of the form
    /// `[models.<name>] input_per_mtok = .. output_per_mtok = ..` plus an
    /// optional `[aliases]` table.
    pub fn with_toml(toml_text: &str) -> Result<Self, LlmError> {
        let extra: PricingTable =
            toml::from_str(toml_text).map_err(|e| LlmError::Provider(format!("pricing table: {e}")))?;
        let mut table = PricingTable::default();
        for (name, price) in extra.models {
            if !(price.input_per_mtok >= 0.0 && price.output_per_mtok >= 0.0)
                || !price.input_per_mtok.is_finite()
                || !price.output_per_mtok.is_finite()
            {
                return Err(LlmError::Provider(format!(
                    "pricing table: price for `{name}` must be finite and non-negative"
                )));
            }
            table.aliases.remove(&name);
            table.models.insert(name, price);
        }
        table.aliases.extend(extra.aliases);
        Ok(table)
    }

    pub fn price(&self, model: &str) -> Result<Price, LlmError> {
        let name = self.aliases.get(model).map(String::as_str).unwrap_or(model);
        self.models
            .get(name)
            .copied()
            .ok_or_else(|| LlmError::UnknownModel(model.to_string()))
    }
}

/// Total USD cost of a set of calls.
pub fn compute_cost(usages: &[Usage], model: &str, table: &PricingTable) -> Result<f64, LlmError> {
    let price = table.price(model)?;
    let total: Usage = usages.iter().copied().sum();
    Ok((total.input_tokens as f64 * price.input_per_mtok
        + total.output_tokens as f64 * price.output_per_mtok)
        / 1e6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn u(i: u64, o: u64) -> Usage {
        Usage {
            input_tokens: i,
            output_tokens: o,
        }
    }

    fn round3(x: f64) -> f64 {
        (x * 1000.0).round() / 1000.0
    }

    #[test]
    fn worked_costs_round_as_reported() {
        let t = PricingTable::default();
        // 1155 * 2.5e-6 + 177 * 1e-5 = 0.0046575
        let a = compute_cost(&[u(1155, 177)], "gpt-4o", &t).unwrap();
        assert!((a - 0.0046575).abs() < 1e-12);
        assert_eq!(round3(a), 0.005);
        // 1055 * 2.5e-6 + 335 * 1e-5 = 0.0059875
        let b = compute_cost(&[u(1055, 335)], "gpt-4o-2024-11-20", &t).unwrap();
        assert!((b - 0.0059875).abs() < 1e-12);
        assert_eq!(round3(b), 0.006);
    }

    #[test]
    fn empty_usage_costs_nothing() {
        assert_eq!(compute_cost(&[], "o3", &PricingTable::default()).unwrap(), 0.0);
    }

    #[test]
    fn unknown_model_is_an_error() {
        let e = compute_cost(&[u(1, 1)], "nope", &PricingTable::default());
        assert!(matches!(e, Err(LlmError::UnknownModel(m)) if m == "nope"));
    }

    #[test]
    fn aliases_resolve() {
        let t = PricingTable::default();
        assert_eq!(t.price("gpt-o3").unwrap(), t.price("o3").unwrap());
        assert_eq!(t.price("gemini-1.5-pro-002").unwrap().output_per_mtok, 10.0);
    }

    #[test]
    fn toml_extends_defaults() {
        let t = PricingTable::with_toml(
            "[models.local]\ninput_per_mtok = 0.5\noutput_per_mtok = 1.0\n[aliases]\nmine = \"local\"\n",
        )
        .unwrap();
        assert_eq!(t.price("mine").unwrap().input_per_mtok, 0.5);
        assert!(t.price("gpt-5").is_ok());
        assert!(PricingTable::with_toml("[models.x]\ninput_per_mtok = -1.0\noutput_per_mtok = 1.0\n").is_err());
    }

    proptest! {
        #[test]
        fn cost_is_additive(a in 0u64..10_000_000, b in 0u64..10_000_000, c in 0u64..10_000_000, d in 0u64..10_000_000) {
            let t = PricingTable::default();
            let whole = compute_cost(&[u(a, b), u(c, d)], "gpt-5", &t).unwrap();
            let parts = compute_cost(&[u(a, b)], "gpt-5", &t).unwrap() + compute_cost(&[u(c, d)], "gpt-5", &t).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-9 * whole.max(1.0));
            prop_assert!(whole >= 0.0);
        }
    }
}
