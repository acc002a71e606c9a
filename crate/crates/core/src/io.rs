//! CSV and JSON output. Every float is printed with 17 significant digits so
//! that runs diff byte for byte.

use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::sde::{PathSeries, PathStatus};

/// 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// The CSV header for a path in `d` spatial dimensions.
pub fn csv_header(d: usize) -> String {
    let mut cols = vec!["s".to_string(), "t".into(), "dt".into()];
    cols.extend((1..=d).map(|i| format!("x{i}")));
    cols.extend((1..=d).map(|i| format!("dx{i}")));
    cols.extend(["energy", "hyp_angle", "lambda", "a_func", "xi", "pnorm_err"].map(String::from));
    cols.join(",")
}

pub fn write_csv<W: Write>(series: &PathSeries, mut out: W) -> io::Result<()> {
    let n = series.n;
    writeln!(out, "{}", csv_header(n - 1))?;
    for smp in &series.samples {
        let mut row = Vec::with_capacity(2 * n + 7);
        row.push(fmt_f64(smp.s));
        row.push(fmt_f64(smp.point[0]));
        row.push(fmt_f64(smp.velocity[0]));
        row.extend(smp.point[1..n].iter().map(|&x| fmt_f64(x)));
        row.extend(smp.velocity[1..n].iter().map(|&x| fmt_f64(x)));
        for x in [smp.energy, smp.hyp_angle, smp.lambda, smp.a_func, smp.xi, smp.pnorm_err] {
            row.push(fmt_f64(x));
        }
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Trailing metadata written next to a path CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Footer {
    #[serde(flatten)]
    pub status: PathStatus,
    pub steps: u64,
    pub substeps: u64,
    pub rank_drops: u64,
    pub min_a_func: f64,
    pub n_samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Footer {
    pub fn of(series: &PathSeries, seed: Option<u64>) -> Self {
        Footer {
            status: series.status,
            steps: series.steps,
            substeps: series.substeps,
            rank_drops: series.rank_drops,
            min_a_func: series.min_a_func,
            n_samples: series.samples.len(),
            seed,
        }
    }
}

/// `run.csv` → `run.footer.json`.
pub fn footer_path(csv: &Path) -> PathBuf {
    csv.with_extension("footer.json")
}

/// Pretty JSON whose floats use [`fmt_f64`]; non-finite values become `null`.
struct FixedFloats(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*)),* $(,)?) => {
        $(fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(fmt_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    delegate!(
        begin_array(),
        end_array(),
        begin_array_value(first: bool),
        end_array_value(),
        begin_object(),
        end_object(),
        begin_object_key(first: bool),
        begin_object_value(),
        end_object_value(),
    );
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("in-memory serialization cannot fail");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_layout() {
        assert_eq!(
            csv_header(3),
            "s,t,dt,x1,x2,x3,dx1,dx2,dx3,energy,hyp_angle,lambda,a_func,xi,pnorm_err"
        );
        assert_eq!(csv_header(1), "s,t,dt,x1,dx1,energy,hyp_angle,lambda,a_func,xi,pnorm_err");
    }

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn json_floats_are_fixed_width() {
        #[derive(Serialize)]
        struct S {
            a: f64,
            b: f64,
            c: Vec<f64>,
        }
        let s = to_json(&S { a: 0.5, b: f64::NAN, c: vec![2.0] });
        assert!(s.contains("\"a\": 5.0000000000000000e-1"));
        assert!(s.contains("\"b\": null"));
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["c"][0], 2.0);
    }
}
