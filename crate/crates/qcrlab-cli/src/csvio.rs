//! CSV reading and writing. Output files carry a `#`-prefixed metadata
//! header (tool version, command line, config hash) followed by a header
//! row; numeric cells use a fixed scientific format so identical
//! invocations produce byte-identical files.

use std::io::Write;

use qcrlab::estimation::IvDataset;
use qcrlab::spectroscopy::SpectrumTrace;

use crate::CliError;

/// Fixed-format numeric cell.
pub fn format_cell(value: f64) -> String {
    format!("{value:.9e}")
}

/// Write a table with metadata lines, a header, and fixed-format rows.
pub fn write_table(
    out: &mut dyn Write,
    metadata: &[(String, String)],
    columns: &[String],
    rows: &[Vec<f64>],
) -> Result<(), CliError> {
    for (key, value) in metadata {
        writeln!(out, "# {key}: {value}")?;
    }
    writeln!(out, "{}", columns.join(","))?;
    for row in rows {
        let cells: Vec<String> = row.iter().map(|v| format_cell(*v)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}

/// Standard metadata block for an output file.
pub fn standard_metadata(command_line: &str, config_hash: Option<u64>) -> Vec<(String, String)> {
    let mut meta = vec![
        (
            "qcrlab".to_string(),
            format!("v{}", env!("CARGO_PKG_VERSION")),
        ),
        ("command".to_string(), command_line.to_string()),
    ];
    if let Some(hash) = config_hash {
        meta.push(("config_hash".to_string(), format!("{hash:016x}")));
    }
    meta
}

/// Parse a two-column numeric CSV with the required header, ignoring
/// `#`-prefixed lines.
fn read_two_columns(
    text: &str,
    expected_header: [&str; 2],
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut lines = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| CliError::Data("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols.len() != 2 || cols[0] != expected_header[0] || cols[1] != expected_header[1] {
        return Err(CliError::Data(format!(
            "expected header '{},{}', got '{header}'",
            expected_header[0], expected_header[1]
        )));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, line) in lines.enumerate() {
        let mut cells = line.split(',').map(str::trim);
        let (x, y) = (cells.next(), cells.next());
        let (Some(x), Some(y)) = (x, y) else {
            return Err(CliError::Data(format!("row {}: expected two cells", i + 1)));
        };
        if cells.next().is_some() {
            return Err(CliError::Data(format!("row {}: too many cells", i + 1)));
        }
        let x: f64 = x
            .parse()
            .map_err(|_| CliError::Data(format!("row {}: '{x}' is not a number", i + 1)))?;
        let y: f64 = y
            .parse()
            .map_err(|_| CliError::Data(format!("row {}: '{y}' is not a number", i + 1)))?;
        a.push(x);
        b.push(y);
    }
    Ok((a, b))
}

/// Read an IV dataset (`v_dc_volts,current_amps`).
pub fn read_iv_csv(text: &str) -> Result<IvDataset, CliError> {
    let (v_dc, current) = read_two_columns(text, ["v_dc_volts", "current_amps"])?;
    let dataset = IvDataset {
        v_dc,
        current,
        meta: None,
    };
    dataset.validate().map_err(CliError::from)?;
    Ok(dataset)
}

/// Read a spectrum trace (`detuning_hz,magnitude`).
pub fn read_spectrum_csv(text: &str) -> Result<SpectrumTrace, CliError> {
    let (detuning, magnitude) = read_two_columns(text, ["detuning_hz", "magnitude"])?;
    let trace = SpectrumTrace {
        detuning,
        magnitude,
    };
    trace.validate().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iv_round_trip() {
        let mut buf = Vec::new();
        let rows: Vec<Vec<f64>> = (0..25)
            .map(|i| vec![i as f64 * 1e-5, i as f64 * 1e-10])
            .collect();
        write_table(
            &mut buf,
            &standard_metadata("iv --demo", Some(42)),
            &["v_dc_volts".to_string(), "current_amps".to_string()],
            &rows,
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# qcrlab: v"));
        let ds = read_iv_csv(&text).unwrap();
        assert_eq!(ds.v_dc.len(), 25);
        assert_eq!(ds.current[3], 3e-10);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let text = "volts,amps\n0.0,0.0\n";
        assert!(read_iv_csv(text).is_err());
    }

    #[test]
    fn spectrum_requires_increasing_detuning() {
        let mut text = String::from("detuning_hz,magnitude\n");
        for i in (0..20).rev() {
            text.push_str(&format!("{},1.0\n", i as f64 * 1e5));
        }
        assert!(read_spectrum_csv(&text).is_err());
    }
}
