//! Unit conventions.
//!
//! Populations are in thousands of persons, per-capita costs in EUR per
//! person per year, expenditure and GDP in EUR millions.

/// Converts a sum of (thousands of persons × EUR per person) to EUR millions.
pub fn thousand_eur_to_eur_millions(thousand_eur: f64) -> f64 {
    thousand_eur / 1_000.0
}

/// Expenditure as a fraction of GDP.
pub fn gdp_share(eur_millions: f64, gdp_eur_millions: f64) -> f64 {
    eur_millions / gdp_eur_millions
}

/// EUR millions corresponding to a fraction of GDP.
pub fn eur_from_gdp_share(share: f64, gdp_eur_millions: f64) -> f64 {
    share * gdp_eur_millions
}

/// Fraction to percent.
pub fn percent(share: f64) -> f64 {
    share * 100.0
}
