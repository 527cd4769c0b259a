use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};

use super::run::{ReplicateRecord, SweepSummary};
use crate::diagnostics::TestVerdict;

/// Formats a float with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Pretty JSON whose floats carry 17 significant digits.
struct SignificantFormatter(PrettyFormatter<'static>);

impl Formatter for SignificantFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_array(writer)
    }

    fn end_array<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array(writer)
    }

    fn begin_array_value<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(writer, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_array_value(writer)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object(writer)
    }

    fn end_object<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object(writer)
    }

    fn begin_object_key<W: ?Sized + Write>(
        &mut self,
        writer: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(writer, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.begin_object_value(writer)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, writer: &mut W) -> io::Result<()> {
        self.0.end_object_value(writer)
    }
}

pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        SignificantFormatter(PrettyFormatter::new()),
    );
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json writes UTF-8"))
}

pub fn from_json_str<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

/// Writes `text` to `path`, or to stdout when there is no path.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn csv_string<F>(fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    fill(&mut writer)?;
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Io(io::Error::other(e.to_string())))?;
    Ok(String::from_utf8(bytes).expect("csv writes UTF-8"))
}

/// Atoms as `x1 y1;x2 y2;...`.
fn encode_atoms(atoms: &[Vec<f64>]) -> String {
    atoms
        .iter()
        .map(|a| {
            a.iter()
                .map(|&x| format_f64(x))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join(";")
}

fn decode_atoms(text: &str) -> Result<Vec<Vec<f64>>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|point| {
            point
                .split(' ')
                .map(|x| x.parse().map_err(|_| Error::parse(x, "not a number")))
                .collect()
        })
        .collect()
}

/// One row per replicate, with a `k<r>` column for each layer.
pub fn records_to_csv(records: &[ReplicateRecord]) -> Result<String> {
    let layers = records.first().map_or(0, |r| r.layers.len());
    csv_string(|w| {
        let mut header: Vec<String> = ["replicate", "n", "nonpareto"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        header.extend((0..layers).map(|r| format!("k{r}")));
        header.extend(
            ["tail", "pairs", "s", "t", "void", "atoms_total", "atoms"]
                .iter()
                .map(|s| s.to_string()),
        );
        w.write_record(&header)?;
        for rec in records {
            let mut row = vec![
                rec.replicate.to_string(),
                rec.n.to_string(),
                rec.nonpareto.to_string(),
            ];
            row.extend(rec.layers.iter().map(u64::to_string));
            row.extend([
                rec.tail.to_string(),
                rec.pairs.to_string(),
                rec.s.to_string(),
                rec.t.to_string(),
                rec.void.to_string(),
                rec.atoms_total.to_string(),
                encode_atoms(&rec.atoms),
            ]);
            w.write_record(&row)?;
        }
        Ok(())
    })
}

/// Inverse of [`records_to_csv`].
pub fn records_from_csv(text: &str) -> Result<Vec<ReplicateRecord>> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers()?.clone();
    let layers = header.iter().filter(|h| h.starts_with('k')).count();
    let int = |field: &str| -> Result<u64> {
        field
            .parse()
            .map_err(|_| Error::parse(field, "not an integer"))
    };
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row?;
        let get = |i: usize| {
            row.get(i)
                .ok_or_else(|| Error::parse(format!("column {i}"), "missing"))
        };
        let base = 3 + layers;
        records.push(ReplicateRecord {
            replicate: int(get(0)?)?,
            n: int(get(1)?)?,
            nonpareto: int(get(2)?)?,
            layers: (0..layers)
                .map(|r| int(get(3 + r)?))
                .collect::<Result<_>>()?,
            tail: int(get(base)?)?,
            pairs: int(get(base + 1)?)?,
            s: int(get(base + 2)?)?,
            t: int(get(base + 3)?)?,
            void: get(base + 4)?
                .parse()
                .map_err(|_| Error::parse(row.get(base + 4).unwrap_or(""), "not a boolean"))?,
            atoms_total: int(get(base + 5)?)?,
            atoms: decode_atoms(get(base + 6)?)?,
        });
    }
    Ok(records)
}

/// One row per verdict.
pub fn verdicts_to_csv<'a>(
    verdicts: impl IntoIterator<Item = (&'a String, &'a TestVerdict)>,
) -> Result<String> {
    let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    csv_string(|w| {
        w.write_record([
            "name",
            "pass",
            "applicable",
            "statistic",
            "threshold",
            "p_value",
            "level",
            "reference",
            "details",
        ])?;
        for (name, v) in verdicts {
            w.write_record([
                name.clone(),
                v.pass.to_string(),
                v.applicable.to_string(),
                format_f64(v.statistic),
                opt(v.threshold),
                opt(v.p_value),
                opt(v.level),
                opt(v.reference),
                v.details.clone(),
            ])?;
        }
        Ok(())
    })
}

/// One row per swept dimension.
pub fn sweep_to_csv(summary: &SweepSummary) -> Result<String> {
    csv_string(|w| {
        w.write_record([
            "d",
            "c_star",
            "c_starstar",
            "oracle_mean",
            "empirical_mean",
            "empirical_se",
            "pass",
        ])?;
        for row in &summary.rows {
            w.write_record([
                row.d.to_string(),
                format_f64(row.c_star),
                row.c_starstar.map(format_f64).unwrap_or_default(),
                format_f64(row.oracle_mean),
                format_f64(row.empirical.mean),
                format_f64(row.empirical.se_mean),
                row.verdict.pass.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Flattens any serializable value into `key,value` rows with dotted keys.
pub fn key_values_csv<T: Serialize>(value: &T) -> Result<String> {
    fn walk(prefix: &str, value: &serde_json::Value, out: &mut Vec<(String, String)>) {
        let join = |key: &str| {
            if prefix.is_empty() {
                key.to_string()
            } else {
                format!("{prefix}.{key}")
            }
        };
        match value {
            serde_json::Value::Object(map) => {
                for (k, v) in map {
                    walk(&join(k), v, out);
                }
            }
            serde_json::Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    walk(&join(&i.to_string()), v, out);
                }
            }
            serde_json::Value::Number(n) => {
                let text = match (n.as_u64(), n.as_i64(), n.as_f64()) {
                    (Some(u), _, _) => u.to_string(),
                    (_, Some(i), _) => i.to_string(),
                    (_, _, Some(f)) => format_f64(f),
                    _ => n.to_string(),
                };
                out.push((prefix.to_string(), text));
            }
            serde_json::Value::String(s) => out.push((prefix.to_string(), s.clone())),
            serde_json::Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
            serde_json::Value::Null => out.push((prefix.to_string(), String::new())),
        }
    }
    let mut rows = Vec::new();
    walk("", &serde_json::to_value(value)?, &mut rows);
    csv_string(|w| {
        w.write_record(["key", "value"])?;
        for (k, v) in rows {
            w.write_record([k, v])?;
        }
        Ok(())
    })
}

/// A named `(x, y)` series for external plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl PlotSeries {
    pub fn to_csv(&self) -> Result<String> {
        csv_string(|w| {
            w.write_record(["x", "y"])?;
            for &(x, y) in &self.points {
                w.write_record([format_f64(x), format_f64(y)])?;
            }
            Ok(())
        })
    }
}

/// Writes each series to `<dir>/<name>.csv`, or all of them to stdout
/// separated by `# <name>` lines.
pub fn emit_series(dir: Option<&Path>, series: &[PlotSeries]) -> Result<()> {
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for s in series {
                std::fs::write(dir.join(format!("{}.csv", s.name)), s.to_csv()?)?;
            }
        }
        None => {
            let mut out = io::stdout().lock();
            for s in series {
                writeln!(out, "# {}", s.name)?;
                out.write_all(s.to_csv()?.as_bytes())?;
            }
        }
    }
    Ok(())
}
