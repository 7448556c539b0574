//! Versioned flat-file format for trained forecaster parameters.
//!
//! Layout: a magic/version line, the model shape, the scaler, a tensor
//! catalog (name, rows, cols in storage order), then one value per line.
//! Values use Rust's shortest round-trip float formatting, so a load
//! reproduces the trained parameters bit for bit.

use lbsim_core::forecast::{LstmParameters, SeriesScaler};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

const MAGIC: &str = "lbsim-lstm v1";

pub fn render_params(params: &LstmParameters, scaler: &SeriesScaler) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "hidden_units {}", params.hidden_units());
    let _ = writeln!(out, "num_layers {}", params.num_layers());
    let _ = writeln!(out, "lookback {}", params.lookback());
    let _ = writeln!(out, "scaler_min {}", scaler.min);
    let _ = writeln!(out, "scaler_max {}", scaler.max);
    let shapes = params.tensor_shapes();
    let _ = writeln!(out, "tensors {}", shapes.len());
    for shape in &shapes {
        let _ = writeln!(out, "tensor {} {} {}", shape.name, shape.rows, shape.cols);
    }
    let _ = writeln!(out, "values {}", params.len());
    for value in params.values() {
        let _ = writeln!(out, "{value}");
    }
    out
}

pub fn parse_params(text: &str) -> Result<(LstmParameters, SeriesScaler), String> {
    let lines: Vec<&str> = text.lines().collect();
    if lines.first() != Some(&MAGIC) {
        return Err(format!("unsupported parameter file header {:?}", lines.first()));
    }
    let mut cursor = 1usize;
    let field = |name: &str, cursor: &mut usize| -> Result<String, String> {
        let line = lines.get(*cursor).ok_or_else(|| format!("missing {name}"))?;
        *cursor += 1;
        line.strip_prefix(name)
            .map(|rest| rest.trim().to_string())
            .ok_or_else(|| format!("expected `{name} ...`, found `{line}`"))
    };
    let hidden_units: usize = field("hidden_units", &mut cursor)?
        .parse()
        .map_err(|_| "bad hidden_units".to_string())?;
    let num_layers: usize = field("num_layers", &mut cursor)?
        .parse()
        .map_err(|_| "bad num_layers".to_string())?;
    let lookback: usize = field("lookback", &mut cursor)?
        .parse()
        .map_err(|_| "bad lookback".to_string())?;
    let scaler_min: f64 = field("scaler_min", &mut cursor)?
        .parse()
        .map_err(|_| "bad scaler_min".to_string())?;
    let scaler_max: f64 = field("scaler_max", &mut cursor)?
        .parse()
        .map_err(|_| "bad scaler_max".to_string())?;
    let tensor_count: usize = field("tensors", &mut cursor)?
        .parse()
        .map_err(|_| "bad tensor count".to_string())?;
    let mut declared = Vec::with_capacity(tensor_count);
    for _ in 0..tensor_count {
        let line = lines.get(cursor).ok_or("missing tensor line")?;
        cursor += 1;
        let mut parts = line.split_whitespace();
        if parts.next() != Some("tensor") {
            return Err(format!("expected tensor line, found `{line}`"));
        }
        let name = parts.next().ok_or("tensor name missing")?.to_string();
        let rows: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or("tensor rows missing")?;
        let cols: usize = parts
            .next()
            .and_then(|v| v.parse().ok())
            .ok_or("tensor cols missing")?;
        declared.push((name, rows, cols));
    }
    let value_count: usize = field("values", &mut cursor)?
        .parse()
        .map_err(|_| "bad value count".to_string())?;
    let mut values = Vec::with_capacity(value_count);
    for line in &lines[cursor.min(lines.len())..] {
        if line.trim().is_empty() {
            continue;
        }
        values.push(
            line.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad value `{line}`"))?,
        );
    }
    if values.len() != value_count {
        return Err(format!(
            "value count mismatch: header says {value_count}, file holds {}",
            values.len()
        ));
    }

    let params = LstmParameters::from_parts(hidden_units, num_layers, lookback, values)
        .map_err(|e| format!("inconsistent shapes: {e}"))?;
    let actual: Vec<(String, usize, usize)> = params
        .tensor_shapes()
        .into_iter()
        .map(|s| (s.name, s.rows, s.cols))
        .collect();
    if actual != declared {
        return Err("tensor catalog does not match the declared shape".to_string());
    }
    Ok((
        params,
        SeriesScaler {
            min: scaler_min,
            max: scaler_max,
        },
    ))
}

pub fn save_params(
    params: &LstmParameters,
    scaler: &SeriesScaler,
    path: &Path,
) -> std::io::Result<()> {
    fs::write(path, render_params(params, scaler))
}

pub fn load_params(path: &Path) -> Result<(LstmParameters, SeriesScaler), String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    parse_params(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use lbsim_core::forecast::{predict_next, train_forecaster, ModelConfig};

    #[test]
    fn trained_parameters_round_trip_bit_exactly() {
        let series: Vec<f64> = (0..40).map(|k| ((k as f64) / 9.0).sin() * 0.3 + 0.5).collect();
        let config = ModelConfig {
            seed: 11,
            ..ModelConfig::default()
        };
        let (params, scaler, _) = train_forecaster(&series, &config).unwrap();
        let text = render_params(&params, &scaler);
        let (restored, restored_scaler) = parse_params(&text).unwrap();
        assert_eq!(params.values(), restored.values());
        assert_eq!(params.lookback(), restored.lookback());
        assert_eq!(scaler, restored_scaler);

        let recent = &series[35..];
        assert_eq!(
            predict_next(&params, &scaler, recent).unwrap(),
            predict_next(&restored, &restored_scaler, recent).unwrap()
        );
    }

    #[test]
    fn corrupted_files_are_rejected() {
        assert!(parse_params("not a parameter file").is_err());
        let series = vec![0.5; 30];
        let (params, scaler, _) = train_forecaster(&series, &ModelConfig::default()).unwrap();
        let text = render_params(&params, &scaler);
        let truncated: String = text.lines().take(10).collect::<Vec<_>>().join("\n");
        assert!(parse_params(&truncated).is_err());
        let tampered = text.replace("hidden_units 5", "hidden_units 6");
        assert!(parse_params(&tampered).is_err());
    }
}
