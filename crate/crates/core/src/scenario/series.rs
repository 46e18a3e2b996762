use std::fmt::Write as _;
use std::path::Path;

use super::config::SeriesFormat;
use crate::error::{Error, Result};
use crate::estimates::{GrowthExponents, VolumeProfile};
use crate::ode::{residual_of_jet, BFunction};

/// A named table of equally long float columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub columns: Vec<&'static str>,
    pub data: Vec<Vec<f64>>,
}

impl Series {
    pub fn rows(&self) -> usize {
        self.data.first().map_or(0, Vec::len)
    }

    /// `(s, b, b_prime, residual)` at the interior nodes of a sampled `b`.
    pub fn from_curve(b: &BFunction) -> Series {
        let mut data = vec![Vec::new(); 4];
        if b.is_sampled() {
            for i in b.interior_nodes() {
                let j = b.node_jet(i);
                for (col, v) in data.iter_mut().zip([b.node(i), j.b, j.db, residual_of_jet(j, b.lambda())]) {
                    col.push(v);
                }
            }
        }
        Series { columns: vec!["s", "b", "b_prime", "residual"], data }
    }

    /// `(r, V, e_lower_envelope, e_upper_envelope)`; the envelopes are
    /// `V(r_0) (r / r_0)^e` anchored at the first radius.
    pub fn from_profile(profile: &VolumeProfile, exponents: Option<GrowthExponents>) -> Series {
        let mut data = vec![Vec::new(); 4];
        if let (Some(&r0), Some(&v0)) = (profile.radii.first(), profile.volumes.first()) {
            for (&r, &v) in profile.radii.iter().zip(&profile.volumes) {
                let env = |e: Option<f64>| e.map_or(f64::NAN, |e| v0 * (r / r0).powf(e));
                data[0].push(r);
                data[1].push(v);
                data[2].push(env(exponents.map(|e| e.e_lower)));
                data[3].push(env(exponents.map(|e| e.e_upper)));
            }
        }
        Series { columns: vec!["r", "V", "e_lower_envelope", "e_upper_envelope"], data }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for i in 0..self.rows() {
            let row: Vec<String> = self.data.iter().map(|c| number(c[i])).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// An object with one array per column; non-finite entries are `null`.
    pub fn to_json(&self) -> String {
        let mut out = String::from("{\n");
        for (c, (name, col)) in self.columns.iter().zip(&self.data).enumerate() {
            let values: Vec<String> =
                col.iter().map(|v| if v.is_finite() { number(*v) } else { "null".into() }).collect();
            let sep = if c + 1 == self.columns.len() { "" } else { "," };
            let _ = writeln!(out, "  \"{name}\": [{}]{sep}", values.join(", "));
        }
        out.push_str("}\n");
        out
    }

    pub fn render(&self, format: SeriesFormat) -> String {
        match format {
            SeriesFormat::Csv => self.to_csv(),
            SeriesFormat::Json => self.to_json(),
        }
    }
}

/// Seventeen significant digits.
fn number(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes `series` to `path` in `format`.
pub fn emit_series(series: &Series, path: &Path, format: SeriesFormat) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, series.render(format)).map_err(|e| Error::io(path, e))
}

/// Parses a CSV written by [`Series::to_csv`].
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines.next().unwrap_or_default().split(',').map(str::to_string).collect();
    let mut cols = vec![Vec::new(); header.len()];
    for line in lines.filter(|l| !l.is_empty()) {
        for (col, field) in cols.iter_mut().zip(line.split(',')) {
            col.push(field.parse::<f64>().map_err(|e| Error::InvalidArgument(format!("bad field {field:?}: {e}")))?);
        }
    }
    Ok((header, cols))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::{VolumeKind, VolumeMethod};

    #[test]
    fn empty_profile_is_header_only() {
        let p = VolumeProfile {
            radii: vec![],
            volumes: vec![],
            std_errors: None,
            method: VolumeMethod::Quadrature,
            kind: VolumeKind::SublevelD,
            fit: None,
        };
        let s = Series::from_profile(&p, None);
        assert_eq!(s.to_csv(), "r,V,e_lower_envelope,e_upper_envelope\n");
    }

    #[test]
    fn csv_round_trips_exactly() {
        let s = Series { columns: vec!["a", "b"], data: vec![vec![0.1, 1.0 / 3.0], vec![-2.5e-300, 7e22]] };
        let (header, cols) = parse_csv(&s.to_csv()).unwrap();
        assert_eq!(header, ["a", "b"]);
        assert_eq!(cols, s.data);
        assert!(s.to_json().contains("\"a\": [1.0000000000000001e-1, 3.3333333333333331e-1]"));
    }
}
