//! Deterministic JSON and CSV output.

use std::io;
use std::path::{Path, PathBuf};

use capdyn::Point;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter, Serializer};

pub const SCHEMA: u32 = 1;

/// Pretty printer that writes every float with 17 significant digits.
struct ExactFloats<'a>(PrettyFormatter<'a>);

macro_rules! delegate {
    ($($name:ident($($arg:ident: $ty:ty),*);)*) => {
        $(fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> io::Result<()> {
            self.0.$name(w $(, $arg)*)
        })*
    };
}

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    delegate! {
        begin_array();
        end_array();
        begin_array_value(first: bool);
        end_array_value();
        begin_object();
        end_object();
        begin_object_key(first: bool);
        begin_object_value();
        end_object_value();
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("report types serialize infallibly");
    buf.push(b'\n');
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}

/// A CSV table held in memory until the run finishes.
#[derive(Clone, Debug, PartialEq)]
pub struct Csv {
    pub suffix: &'static str,
    pub body: String,
}

impl Csv {
    pub fn new(suffix: &'static str, header: &[&str]) -> Self {
        Csv {
            suffix,
            body: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    /// `<dir>/<stem>_<suffix>.csv` next to the JSON report.
    pub fn path_for(&self, out: &Path) -> PathBuf {
        let stem = out
            .file_stem()
            .map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
        out.with_file_name(format!("{stem}_{}.csv", self.suffix))
    }
}

pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Two coordinate columns for any point; unused columns stay empty.
pub fn coords(p: &Point) -> [String; 2] {
    match p {
        Point::Angle(t) => [num(*t), String::new()],
        Point::Planar([x, y]) | Point::Torus([x, y]) => [num(*x), num(*y)],
        Point::Integer(k) => [k.to_string(), String::new()],
        Point::Sphere(_) => match p.as_planar() {
            Some([x, y]) => [num(x), num(y)],
            None => ["inf".into(), "inf".into()],
        },
        Point::Tagged { component, angle } => [component.to_string(), num(*angle)],
        Point::Cylinder { height, angle } => [num(*height), num(*angle)],
    }
}
