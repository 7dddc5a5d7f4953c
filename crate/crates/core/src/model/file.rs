//! TOML model files.
//!
//! ```toml
//! [signal]
//! family = "uniform"          # uniform | beta | table
//! support = [0.0, 1.0]
//! params = [2.0, 2.0]         # beta shapes
//! table.v = [..]              # table nodes
//! table.f = [..]              # table densities
//!
//! [kernel]
//! family = "additive_noise"   # additive_noise | power | exp_tilt | table
//! noise.family = "logistic"   # normal | logistic | laplace
//! noise.scale = 1.0
//! table.v = [..]              # type nodes
//! table.V = [..]              # value nodes
//! table.H = [[..], ..]        # one row per type node
//!
//! [grid]
//! v_points = 129
//! V_points = 129
//! endpoint_margin = 1e-4
//! tail_mass_cut = 1e-9
//!
//! [tolerances]
//! monotonicity = 1e-8
//! quadrature_rel = 1e-10
//!
//! [transform]                 # written by `seqscreen transform`
//! kind = "mean"
//! params = []
//! lattice = [[v, w, dphi], ..]
//! ```

use std::fmt::Write as _;
use std::path::Path;

use toml::{Table, Value};

use super::{GridSpec, Noise, ScreeningModel, Settings, SignalDistribution, SignalFamily, ValuationKernel};
use crate::error::{Error, Result};

/// Relabeling recorded in a derived model file.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformRecord {
    pub kind: String,
    pub params: Vec<f64>,
    /// `(v, phi(v), phi'(v))` triples.
    pub lattice: Vec<[f64; 3]>,
}

/// Contents of a model file.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub model: ScreeningModel,
    pub settings: Settings,
    pub transform: Option<TransformRecord>,
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<LoadedModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Load(format!("cannot read {}: {e}", path.display())))?;
    parse_model_file(&text)
}

const SECTIONS: &[&str] = &["signal", "kernel", "grid", "tolerances", "transform"];

pub fn parse_model_file(text: &str) -> Result<LoadedModel> {
    let root: Table = text.parse().map_err(|e: toml::de::Error| Error::Load(e.to_string()))?;
    for key in root.keys() {
        if !SECTIONS.contains(&key.as_str()) {
            return Err(unknown(text, "", key));
        }
    }
    let empty = Table::new();
    let section = |name: &str| -> Result<&Table> {
        match root.get(name) {
            None => Ok(&empty),
            Some(Value::Table(t)) => Ok(t),
            Some(_) => Err(Error::Load(format!("[{name}] must be a table"))),
        }
    };

    let signal = Section::new(text, "signal", section("signal")?, &["family", "support", "params", "table.v", "table.f"])?;
    let kernel = Section::new(
        text,
        "kernel",
        section("kernel")?,
        &["family", "support", "params", "noise.family", "noise.scale", "table.v", "table.V", "table.H"],
    )?;
    let grid = Section::new(text, "grid", section("grid")?, &["v_points", "V_points", "endpoint_margin", "tail_mass_cut"])?;
    let tol = Section::new(text, "tolerances", section("tolerances")?, &["monotonicity", "quadrature_rel"])?;
    let transform = match root.get("transform") {
        Some(_) => Some(Section::new(text, "transform", section("transform")?, &["kind", "params", "lattice"])?),
        None => None,
    };

    let signal = parse_signal(&signal)?;
    let kernel = parse_kernel(&kernel)?;
    let model = ScreeningModel::new(signal, kernel)?;

    let mut settings = Settings::default();
    if let Some(n) = grid.count("v_points")? {
        settings.grid.v_points = n;
    }
    if let Some(n) = grid.count("V_points")? {
        settings.grid.value_points = n;
    }
    if let Some(x) = grid.float("endpoint_margin")? {
        settings.grid.endpoint_margin = x;
    }
    if let Some(x) = grid.float("tail_mass_cut")? {
        settings.grid.tail_mass_cut = x;
    }
    if let Some(x) = tol.float("monotonicity")? {
        settings.tolerances.monotonicity_slack = x;
    }
    if let Some(x) = tol.float("quadrature_rel")? {
        settings.tolerances.quadrature_rel = x;
    }
    settings.validate()?;

    let transform = transform.map(|t| parse_transform(&t)).transpose()?;
    Ok(LoadedModel {
        model,
        settings,
        transform,
    })
}

fn parse_signal(s: &Section<'_>) -> Result<SignalDistribution> {
    let family = s.required_str("family")?;
    let support = s.floats("support")?;
    let interval = |v: &Option<Vec<f64>>| -> Result<(f64, f64)> {
        match v.as_deref() {
            Some([a, b]) => Ok((*a, *b)),
            Some(_) => Err(Error::Load("[signal] support must have two entries".into())),
            None => Err(Error::Load(format!("[signal] family `{family}` needs `support`"))),
        }
    };
    let params = s.floats("params")?.unwrap_or_default();
    match family {
        "uniform" => {
            no_params(s, &params)?;
            let (a, b) = interval(&support)?;
            SignalDistribution::uniform(a, b)
        }
        "beta" => {
            let (a, b) = interval(&support)?;
            match params.as_slice() {
                [alpha, beta] => SignalDistribution::beta(*alpha, *beta, a, b),
                _ => Err(Error::Load("[signal] beta needs params = [alpha, beta]".into())),
            }
        }
        "table" => {
            no_params(s, &params)?;
            let nodes = s.floats("table.v")?.ok_or_else(|| Error::Load("[signal] table needs `table.v`".into()))?;
            let dens = s.floats("table.f")?.ok_or_else(|| Error::Load("[signal] table needs `table.f`".into()))?;
            let dist = SignalDistribution::table(nodes, dens)?;
            if let Some((a, b)) = support.as_ref().map(|_| interval(&support)).transpose()? {
                let sup = dist.support();
                if sup.lower != a || sup.upper != b {
                    return Err(Error::Load(format!("[signal] support [{a}, {b}] disagrees with table nodes {sup}")));
                }
            }
            Ok(dist)
        }
        other => Err(Error::Load(format!("[signal] unknown family `{other}` (expected uniform, beta or table)"))),
    }
}

fn no_params(s: &Section<'_>, params: &[f64]) -> Result<()> {
    if params.is_empty() {
        Ok(())
    } else {
        Err(Error::Load(format!("[{}] this family takes no params", s.name)))
    }
}

fn parse_kernel(s: &Section<'_>) -> Result<ValuationKernel> {
    let family = s.required_str("family")?;
    let params = s.floats("params")?.unwrap_or_default();
    no_params(s, &params)?;
    let has_noise = s.get("noise.family").is_some() || s.get("noise.scale").is_some();
    if has_noise && family != "additive_noise" {
        return Err(Error::Load(format!("[kernel] noise.* keys only apply to additive_noise, not `{family}`")));
    }
    let kernel = match family {
        "additive_noise" => {
            let name = s.str("noise.family")?.unwrap_or("normal");
            let scale = s.float("noise.scale")?.unwrap_or(1.0);
            ValuationKernel::additive(Noise::new(name.parse()?, scale)?)
        }
        "power" => ValuationKernel::power(),
        "exp_tilt" => ValuationKernel::exp_tilt(),
        "table" => {
            let types = s.floats("table.v")?.ok_or_else(|| Error::Load("[kernel] table needs `table.v`".into()))?;
            let values = s.floats("table.V")?.ok_or_else(|| Error::Load("[kernel] table needs `table.V`".into()))?;
            let rows = s.rows("table.H")?.ok_or_else(|| Error::Load("[kernel] table needs `table.H`".into()))?;
            if rows.iter().any(|r| r.len() != values.len()) {
                return Err(Error::Load("[kernel] every table.H row needs one entry per table.V node".into()));
            }
            ValuationKernel::table(types, values, rows.concat())?
        }
        other => {
            return Err(Error::Load(format!(
                "[kernel] unknown family `{other}` (expected additive_noise, power, exp_tilt or table)"
            )))
        }
    };
    if let Some(declared) = s.floats("support")? {
        let sup = kernel.support();
        if declared.len() != 2 || declared[0] != sup.lower || declared[1] != sup.upper {
            return Err(Error::Load(format!("[kernel] declared support {declared:?} disagrees with family support {sup}")));
        }
    }
    Ok(kernel)
}

fn parse_transform(s: &Section<'_>) -> Result<TransformRecord> {
    let kind = s.required_str("kind")?.to_string();
    let params = s.floats("params")?.unwrap_or_default();
    let rows = s.rows("lattice")?.unwrap_or_default();
    let lattice = rows
        .into_iter()
        .map(|r| <[f64; 3]>::try_from(r).map_err(|_| Error::Load("[transform] lattice rows must be [v, w, dphi]".into())))
        .collect::<Result<Vec<_>>>()?;
    Ok(TransformRecord { kind, params, lattice })
}

/// One section flattened to dotted keys, checked against an allow-list.
struct Section<'a> {
    name: &'static str,
    entries: Vec<(String, &'a Value)>,
}

impl<'a> Section<'a> {
    fn new(text: &str, name: &'static str, table: &'a Table, allowed: &[&str]) -> Result<Self> {
        let mut entries = Vec::new();
        flatten("", table, &mut entries);
        for (key, _) in &entries {
            if !allowed.contains(&key.as_str()) {
                return Err(unknown(text, name, key));
            }
        }
        Ok(Self { name, entries })
    }

    fn get(&self, key: &str) -> Option<&'a Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }

    fn type_error(&self, key: &str, expected: &str) -> Error {
        Error::Load(format!("[{}] `{key}` must be {expected}", self.name))
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>> {
        self.get(key)
            .map(|v| v.as_str().ok_or_else(|| self.type_error(key, "a string")))
            .transpose()
    }

    fn required_str(&self, key: &str) -> Result<&'a str> {
        self.str(key)?
            .ok_or_else(|| Error::Load(format!("[{}] missing required key `{key}`", self.name)))
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        self.get(key)
            .map(|v| as_float(v).ok_or_else(|| self.type_error(key, "a number")))
            .transpose()
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        self.get(key)
            .map(|v| {
                v.as_integer()
                    .and_then(|n| usize::try_from(n).ok())
                    .filter(|&n| n > 0)
                    .ok_or_else(|| self.type_error(key, "a positive integer"))
            })
            .transpose()
    }

    fn floats(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key)
            .map(|v| float_array(v).ok_or_else(|| self.type_error(key, "an array of numbers")))
            .transpose()
    }

    fn rows(&self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        self.get(key)
            .map(|v| {
                v.as_array()
                    .and_then(|rows| rows.iter().map(float_array).collect::<Option<Vec<_>>>())
                    .ok_or_else(|| self.type_error(key, "an array of number arrays"))
            })
            .transpose()
    }
}

fn flatten<'a>(prefix: &str, table: &'a Table, out: &mut Vec<(String, &'a Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => out.push((key, v)),
        }
    }
}

fn as_float(v: &Value) -> Option<f64> {
    match v {
        Value::Float(x) => Some(*x),
        Value::Integer(n) => Some(*n as f64),
        _ => None,
    }
}

fn float_array(v: &Value) -> Option<Vec<f64>> {
    v.as_array()?.iter().map(as_float).collect()
}

/// Unknown-key error, with the line of its first occurrence when it can be found.
fn unknown(text: &str, section: &str, key: &str) -> Error {
    let head = key.split('.').next().unwrap_or(key);
    let mut current = String::new();
    let mut line = None;
    for (i, raw) in text.lines().enumerate() {
        let l = raw.trim();
        if let Some(name) = l.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            current = name.trim().to_string();
            if section.is_empty() && current == head {
                line = Some(i + 1);
                break;
            }
            continue;
        }
        if current == section {
            if let Some(rest) = l.strip_prefix(head) {
                if rest.starts_with(['.', '=', ' ', '\t']) {
                    line = Some(i + 1);
                    break;
                }
            }
        }
    }
    Error::UnknownKey {
        section: if section.is_empty() { "<root>".into() } else { section.into() },
        key: key.into(),
        line,
    }
}

fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

fn fmt_floats(xs: &[f64]) -> String {
    let items: Vec<String> = xs.iter().map(|&x| fmt_float(x)).collect();
    format!("[{}]", items.join(", "))
}

/// Renders a model file; parsing the output reproduces the same model,
/// settings and transform record.
pub fn write_model_file(model: &ScreeningModel, settings: &Settings, transform: Option<&TransformRecord>) -> String {
    let mut out = String::new();
    let signal = model.signal();
    let sup = signal.support();
    out.push_str("[signal]\n");
    match signal.family() {
        SignalFamily::Uniform => {
            out.push_str("family = \"uniform\"\n");
            let _ = writeln!(out, "support = {}", fmt_floats(&[sup.lower, sup.upper]));
        }
        SignalFamily::Beta => {
            out.push_str("family = \"beta\"\n");
            let _ = writeln!(out, "support = {}", fmt_floats(&[sup.lower, sup.upper]));
            let _ = writeln!(out, "params = {}", fmt_floats(&signal.params()));
        }
        SignalFamily::Table => {
            out.push_str("family = \"table\"\n");
            let (nodes, dens) = signal.table_data().expect("table signal");
            let _ = writeln!(out, "table.v = {}", fmt_floats(nodes));
            let _ = writeln!(out, "table.f = {}", fmt_floats(dens));
        }
    }

    let kernel = super::Environment::kernel(model);
    out.push_str("\n[kernel]\n");
    let _ = writeln!(out, "family = \"{}\"", kernel.family().name());
    if let Some(noise) = kernel.noise() {
        let _ = writeln!(out, "noise.family = \"{}\"", noise.family.name());
        let _ = writeln!(out, "noise.scale = {}", fmt_float(noise.scale));
    }
    if let Some((types, values, cdf)) = kernel.table_data() {
        let _ = writeln!(out, "table.v = {}", fmt_floats(types));
        let _ = writeln!(out, "table.V = {}", fmt_floats(values));
        out.push_str("table.H = [\n");
        for row in cdf.chunks(values.len()) {
            let _ = writeln!(out, "  {},", fmt_floats(row));
        }
        out.push_str("]\n");
    }

    let GridSpec {
        v_points,
        value_points,
        endpoint_margin,
        tail_mass_cut,
    } = settings.grid;
    out.push_str("\n[grid]\n");
    let _ = writeln!(out, "v_points = {v_points}");
    let _ = writeln!(out, "V_points = {value_points}");
    let _ = writeln!(out, "endpoint_margin = {}", fmt_float(endpoint_margin));
    let _ = writeln!(out, "tail_mass_cut = {}", fmt_float(tail_mass_cut));
    out.push_str("\n[tolerances]\n");
    let _ = writeln!(out, "monotonicity = {}", fmt_float(settings.tolerances.monotonicity_slack));
    let _ = writeln!(out, "quadrature_rel = {}", fmt_float(settings.tolerances.quadrature_rel));

    if let Some(t) = transform {
        out.push_str("\n[transform]\n");
        let _ = writeln!(out, "kind = \"{}\"", t.kind);
        let _ = writeln!(out, "params = {}", fmt_floats(&t.params));
        out.push_str("lattice = [\n");
        for row in &t.lattice {
            let _ = writeln!(out, "  {},", fmt_floats(row));
        }
        out.push_str("]\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{eval_kernel, Environment};

    const LOGISTIC: &str = r#"
[signal]
family = "uniform"
support = [0.0, 1.0]

[kernel]
family = "additive_noise"
noise.family = "logistic"
noise.scale = 1.0

[grid]
v_points = 17
V_points = 9
"#;

    #[test]
    fn parses_and_round_trips() {
        let loaded = parse_model_file(LOGISTIC).unwrap();
        assert_eq!(loaded.settings.grid.v_points, 17);
        assert_eq!(loaded.settings.grid.value_points, 9);
        assert_eq!(loaded.settings.grid.tail_mass_cut, 1e-9);
        let text = write_model_file(&loaded.model, &loaded.settings, None);
        let again = parse_model_file(&text).unwrap();
        assert_eq!(again.settings, loaded.settings);
        assert_eq!(again.model.describe(), loaded.model.describe());
        let p = eval_kernel(&again.model, 0.5, 0.5).unwrap();
        assert!((p.cdf - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_key_is_named_with_its_line() {
        let bad = LOGISTIC.replace("noise.family", "nois.family");
        match parse_model_file(&bad) {
            Err(Error::UnknownKey { section, key, line }) => {
                assert_eq!(section, "kernel");
                assert_eq!(key, "nois.family");
                assert_eq!(line, Some(8));
            }
            other => panic!("{other:?}"),
        }
        let bad = format!("{LOGISTIC}\n[extra]\nx = 1\n");
        assert!(matches!(parse_model_file(&bad), Err(Error::UnknownKey { .. })));
    }

    #[test]
    fn table_families_round_trip() {
        let text = r#"
[signal]
family = "table"
table.v = [0.0, 1.0, 2.0]
table.f = [1.0, 0.5, 0.25]

[kernel]
family = "table"
table.v = [0.0, 2.0]
table.V = [0.0, 0.5, 1.0]
table.H = [[0.0, 0.6, 1.0], [0.0, 0.4, 1.0]]

[transform]
kind = "affine"
params = [2.0, 1.0]
lattice = [[0.0, 1.0, 2.0]]
"#;
        let loaded = parse_model_file(text).unwrap();
        let t = loaded.transform.clone().unwrap();
        assert_eq!(t.kind, "affine");
        let again = parse_model_file(&write_model_file(&loaded.model, &loaded.settings, Some(&t))).unwrap();
        assert_eq!(again.transform, Some(t));
        let a = eval_kernel(&loaded.model, 1.0, 0.5).unwrap();
        let b = eval_kernel(&again.model, 1.0, 0.5).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_mismatched_sections() {
        let bad = LOGISTIC.replace("additive_noise", "power");
        assert!(matches!(parse_model_file(&bad), Err(Error::Load(_))));
        let bad = LOGISTIC.replace("v_points = 17", "v_points = 0");
        assert!(parse_model_file(&bad).is_err());
        assert!(matches!(parse_model_file("[signal\n"), Err(Error::Load(_))));
    }
}
