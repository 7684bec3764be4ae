//! Fixed-width text tables.

pub struct TextTable {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl TextTable {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Self {
        TextTable {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Left-aligned first column, right-aligned numbers after it.
    pub fn render(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(String::len).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| {
                    if i == 0 {
                        format!("{c:<w$}")
                    } else {
                        format!("{c:>w$}")
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = line(&self.headers);
        let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
        out.push_str(&rule.join("  "));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&line(row));
        }
        out
    }
}

/// Monetary amounts: one decimal.
pub fn eur(x: f64) -> String {
    format!("{x:.1}")
}

/// Shares of GDP in percent: two decimals, so 0.03% stays visible.
pub fn pct(x: f64) -> String {
    format!("{x:.2}")
}

/// Dimensionless factors such as RF.
pub fn factor(x: f64) -> String {
    format!("{x:.5}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aligns_columns() {
        let mut t = TextTable::new(["component", "EUR m"]);
        t.push(vec!["crimi".into(), eur(12.345)]);
        t.push(vec!["cri".into(), eur(456.1)]);
        assert_eq!(
            t.render(),
            "component  EUR m\n---------  -----\ncrimi       12.3\ncri        456.1\n"
        );
    }

    #[test]
    fn number_formats() {
        assert_eq!(pct(0.0300001), "0.03");
        assert_eq!(eur(9426.146), "9426.1");
        assert_eq!(factor(1.027151), "1.02715");
    }
}
