//! Example presets, convergence tables, method comparison and field output.
//!
//! Every experiment uses `f = 1`. Level `k` means `N = 2^k`.

use std::collections::BTreeMap;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::str::FromStr;

use serde::Serialize;

use crate::analysis::{self, convergence_rows, ConvergenceRow, ScalarField};
use crate::coeff::CoefficientField;
use crate::error::{Error, Result};
use crate::fdm::{self, FdmProblem};
use crate::fem::{self, FemProblem};
use crate::mesh::GridSpec;
use crate::sparse::SolverConfig;

/// Default `rel_inf` above which the two methods are reported as divergent.
/// A reporting heuristic only.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 0.1;

pub fn unit_source(_x: f64, _y: f64) -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PresetId {
    Ex1,
    Ex2,
    Ex3New,
    Ex3,
    Ex4,
    Ex5,
    Ex7,
    /// `a = 1` on a 2x2 partition: plain Poisson, handy for oracle checks.
    Uniform,
}

impl PresetId {
    pub const ALL: [PresetId; 8] = [
        PresetId::Ex1,
        PresetId::Ex2,
        PresetId::Ex3New,
        PresetId::Ex3,
        PresetId::Ex4,
        PresetId::Ex5,
        PresetId::Ex7,
        PresetId::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PresetId::Ex1 => "ex1",
            PresetId::Ex2 => "ex2",
            PresetId::Ex3New => "ex3new",
            PresetId::Ex3 => "ex3",
            PresetId::Ex4 => "ex4",
            PresetId::Ex5 => "ex5",
            PresetId::Ex7 => "ex7",
            PresetId::Uniform => "uniform",
        }
    }
}

impl FromStr for PresetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetId::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = PresetId::ALL.iter().map(|p| p.name()).collect();
                Error::usage(format!("unknown preset '{s}' (expected one of {})", names.join(", ")))
            })
    }
}

/// A named benchmark: its coefficient field and its convergence table rows.
#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub id: PresetId,
    pub coeff: CoefficientField,
    /// Levels `k` of the table rows (`h = 2^-k`); each row also solves `k + 1`.
    pub rows: RangeInclusive<u32>,
}

impl ExperimentPreset {
    pub fn get(id: PresetId) -> Self {
        let cb = |m, a, b| CoefficientField::checkerboard(m, a, b).expect("preset values are valid");
        let (coeff, rows) = match id {
            PresetId::Ex1 => (cb(2, 1e3, 1e-3), 2..=6),
            PresetId::Ex2 => (cb(4, 10.0, 1.0), 3..=6),
            PresetId::Ex3New => (cb(8, 10.0, 1.0), 4..=7),
            PresetId::Ex3 => (cb(4, 1e3, 1e-3), 3..=6),
            PresetId::Ex4 => (cb(8, 1e3, 1e-3), 4..=7),
            PresetId::Ex5 => (cb(16, 1e3, 1e-3), 5..=8),
            PresetId::Ex7 => (
                CoefficientField::from_matrix(&[
                    vec![100.0, 0.5, 10.0, 1.0],
                    vec![0.4, 1000.0, 0.35, 10.0],
                    vec![5.0, 0.45, 0.5, 1.0],
                    vec![150.0, 100.0, 1.0, 10.0],
                ])
                .expect("preset values are valid"),
                3..=6,
            ),
            PresetId::Uniform => (cb(2, 1.0, 1.0), 3..=6),
        };
        Self { id, coeff, rows }
    }

    pub fn m(&self) -> usize {
        self.coeff.m()
    }
}

/// Where a coefficient field comes from: `preset:<name>` or `file:<path>`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoeffSource {
    Preset(PresetId),
    File(PathBuf),
}

impl FromStr for CoeffSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if let Some(name) = s.strip_prefix("preset:") {
            Ok(CoeffSource::Preset(name.parse()?))
        } else if let Some(path) = s.strip_prefix("file:") {
            if path.is_empty() {
                return Err(Error::usage("file: needs a path"));
            }
            Ok(CoeffSource::File(PathBuf::from(path)))
        } else {
            Err(Error::usage(format!(
                "coefficient source '{s}' must start with preset: or file:"
            )))
        }
    }
}

/// A resolved coefficient source.
#[derive(Debug, Clone)]
pub struct Setup {
    pub label: String,
    pub coeff: CoefficientField,
    /// Table rows of the preset, when the source is a preset.
    pub default_rows: Option<RangeInclusive<u32>>,
}

impl CoeffSource {
    pub fn resolve(&self) -> Result<Setup> {
        match self {
            CoeffSource::Preset(id) => {
                let preset = ExperimentPreset::get(*id);
                Ok(Setup {
                    label: format!("preset:{}", id.name()),
                    coeff: preset.coeff,
                    default_rows: Some(preset.rows),
                })
            }
            CoeffSource::File(path) => Ok(Setup {
                label: format!("file:{}", path.display()),
                coeff: CoefficientField::load(path)?,
                default_rows: None,
            }),
        }
    }
}

impl Setup {
    /// Rows to tabulate: the preset's own range, or for files every level
    /// from the coarsest admissible grid up to `max_level`.
    pub fn rows_or(&self, max_level: u32) -> RangeInclusive<u32> {
        self.default_rows
            .clone()
            .unwrap_or_else(|| min_level(self.coeff.m())..=max_level)
    }
}

/// Smallest `k` with `2^k` a multiple of `m` and `2^k / m >= 2`.
pub fn min_level(m: usize) -> u32 {
    (1..usize::BITS - 1)
        .find(|&k| GridSpec::from_level(k, m).is_ok())
        .unwrap_or(usize::BITS - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fem,
    Fdm,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Fem => "fem",
            Method::Fdm => "fdm",
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fem" => Ok(Method::Fem),
            "fdm" => Ok(Method::Fdm),
            other => Err(Error::usage(format!("unknown method '{other}' (expected fem or fdm)"))),
        }
    }
}

/// Parses `fem`, `fdm` or `both`.
pub fn parse_methods(s: &str) -> Result<Vec<Method>> {
    match s {
        "both" => Ok(vec![Method::Fem, Method::Fdm]),
        other => Ok(vec![other.parse()?]),
    }
}

/// Parses `k0..k1` (inclusive) or a single level `k`.
pub fn parse_levels(s: &str) -> Result<RangeInclusive<u32>> {
    let bad = || Error::usage(format!("levels must look like 'k0..k1', got '{s}'"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim().trim_start_matches('=')),
        None => (s.trim(), s.trim()),
    };
    let lo: u32 = lo.parse().map_err(|_| bad())?;
    let hi: u32 = hi.parse().map_err(|_| bad())?;
    if lo > hi {
        return Err(bad());
    }
    Ok(lo..=hi)
}

/// Solves one method at level `k` with `f = 1`.
pub fn solve_level(
    coeff: &CoefficientField,
    method: Method,
    level: u32,
    solver: &SolverConfig,
) -> Result<ScalarField> {
    let grid = GridSpec::from_level(level, coeff.m())?;
    let wrap = |e: Error| match e {
        Error::Usage(_) => e,
        other => Error::Solve {
            method: method.name(),
            n: grid.n(),
            source: Box::new(other),
        },
    };
    match method {
        Method::Fem => {
            let problem = FemProblem::new(grid, coeff, &unit_source)?;
            fem::solve_fem(&problem, solver).map_err(wrap)
        }
        Method::Fdm => {
            let problem = FdmProblem::new(grid, coeff, &unit_source)?;
            fdm::solve_fdm(&problem, solver).map_err(wrap)
        }
    }
}

/// Solutions of one coefficient field, computed on demand and kept per
/// `(method, level)`.
pub struct Study<'a> {
    coeff: &'a CoefficientField,
    solver: SolverConfig,
    cache: BTreeMap<(Method, u32), ScalarField>,
}

impl<'a> Study<'a> {
    pub fn new(coeff: &'a CoefficientField, solver: SolverConfig) -> Self {
        Self {
            coeff,
            solver,
            cache: BTreeMap::new(),
        }
    }

    pub fn solution(&mut self, method: Method, level: u32) -> Result<&ScalarField> {
        if !self.cache.contains_key(&(method, level)) {
            let u = solve_level(self.coeff, method, level, &self.solver)?;
            self.cache.insert((method, level), u);
        }
        Ok(&self.cache[&(method, level)])
    }

    /// Self-convergence table over `rows`; row `k` compares levels `k` and `k+1`.
    pub fn table(&mut self, method: Method, rows: RangeInclusive<u32>) -> Result<Vec<ConvergenceRow>> {
        let mut errors = Vec::new();
        for k in rows {
            self.solution(method, k + 1)?;
            self.solution(method, k)?;
            let coarse = &self.cache[&(method, k)];
            let fine = &self.cache[&(method, k + 1)];
            errors.push((coarse.h(), analysis::self_error(coarse, fine)?));
        }
        Ok(convergence_rows(&errors))
    }
}

/// Convergence table of one method.
#[derive(Debug, Clone, Serialize)]
pub struct MethodTable {
    pub method: Method,
    pub rows: Vec<ConvergenceRow>,
}

/// Runs the self-convergence sweep for every requested method.
pub fn run_table(
    coeff: &CoefficientField,
    methods: &[Method],
    rows: RangeInclusive<u32>,
    solver: &SolverConfig,
) -> Result<Vec<MethodTable>> {
    let mut tables = Vec::with_capacity(methods.len());
    for &method in methods {
        // a fresh study per method keeps at most one method's fields in memory
        let mut study = Study::new(coeff, *solver);
        tables.push(MethodTable {
            method,
            rows: study.table(method, rows.clone())?,
        });
    }
    Ok(tables)
}

/// Scientific notation with 6 significant digits and a signed two-digit
/// exponent, e.g. `1.420512E+00`.
pub fn sci(x: f64) -> String {
    sci_digits(x, 5)
}

fn sci_digits(x: f64, decimals: usize) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    let s = format!("{x:.decimals$e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    format!("{mantissa}E{exp:+03}")
}

/// Writes tables as CSV with columns `h,e2,order2,einf,orderinf,method`.
/// Orders are blank on the first row of each method.
pub fn write_table_csv<W: Write>(tables: &[MethodTable], mut out: W) -> std::io::Result<()> {
    writeln!(out, "h,e2,order2,einf,orderinf,method")?;
    let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
    for table in tables {
        for row in &table.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                sci(row.h),
                sci(row.e2),
                opt(row.order2),
                sci(row.einf),
                opt(row.orderinf),
                table.method.name()
            )?;
        }
    }
    Ok(())
}

/// Human-readable fixed-width table: errors with 5
/// significant digits, orders rounded to 2 decimals.
pub fn format_table(tables: &[MethodTable]) -> String {
    let mut s = String::new();
    for table in tables {
        s.push_str(&format!(
            "{}\n{:>8}  {:>11}  {:>5}  {:>11}  {:>5}\n",
            table.method.name().to_uppercase(),
            "h",
            "e2",
            "order",
            "einf",
            "order"
        ));
        let ord = |v: Option<f64>| v.map(|o| format!("{:.2}", analysis::round2(o))).unwrap_or_default();
        for row in &table.rows {
            s.push_str(&format!(
                "{:>8}  {:>11}  {:>5}  {:>11}  {:>5}\n",
                format!("1/{}", (1.0 / row.h).round() as u64),
                sci_digits(row.e2, 4),
                ord(row.order2),
                sci_digits(row.einf, 4),
                ord(row.orderinf)
            ));
        }
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Similar,
    Divergent,
}

/// Finite element vs finite difference comparison at one level.
#[derive(Debug, Clone, Serialize)]
pub struct CompareReport {
    pub coeff: String,
    pub level: u32,
    pub n: usize,
    /// `max |uE - uD| / max |uE|` over nodes where both are defined.
    pub rel_inf: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub tables: Vec<MethodTable>,
}

/// Solves both methods at `level`, measures their difference, and tabulates
/// both self-convergence sweeps over `rows`.
pub fn compare(
    setup: &Setup,
    level: u32,
    rows: RangeInclusive<u32>,
    threshold: f64,
    solver: &SolverConfig,
) -> Result<CompareReport> {
    if !(threshold > 0.0) {
        return Err(Error::usage(format!("threshold must be positive, got {threshold}")));
    }
    let mut tables = Vec::new();
    let mut fields = Vec::new();
    for method in [Method::Fem, Method::Fdm] {
        let mut study = Study::new(&setup.coeff, *solver);
        tables.push(MethodTable {
            method,
            rows: study.table(method, rows.clone())?,
        });
        fields.push(study.solution(method, level)?.clone());
    }
    let (_, rel_inf) = analysis::cross_difference(&fields[0], &fields[1])?;
    Ok(CompareReport {
        coeff: setup.label.clone(),
        level,
        n: fields[0].n(),
        rel_inf,
        threshold,
        verdict: if rel_inf > threshold {
            Verdict::Divergent
        } else {
            Verdict::Similar
        },
        tables,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldFormat {
    Csv,
    Pgm,
}

impl FromStr for FieldFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(FieldFormat::Csv),
            "pgm" => Ok(FieldFormat::Pgm),
            other => Err(Error::usage(format!("unknown format '{other}' (expected csv or pgm)"))),
        }
    }
}

/// CSV rows `i,j,x,y,value,masked`; masked nodes have an empty value and
/// `masked = 1`.
pub fn write_field_csv<W: Write>(field: &ScalarField, mut out: W) -> std::io::Result<()> {
    writeln!(out, "i,j,x,y,value,masked")?;
    let n = field.n();
    for j in 0..=n {
        for i in 0..=n {
            let (x, y) = (i as f64 / n as f64, j as f64 / n as f64);
            match field.get(i, j) {
                Some(v) => writeln!(out, "{i},{j},{},{},{},0", sci(x), sci(y), sci_digits(v, 16))?,
                None => writeln!(out, "{i},{j},{},{},,1", sci(x), sci(y))?,
            }
        }
    }
    Ok(())
}

/// Grey levels of the min-max normalized field, image rows top (`j = N`) to
/// bottom. Masked nodes are 0.
pub fn heatmap(field: &ScalarField) -> Vec<u8> {
    let (lo, hi) = field
        .valid_entries()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, _, v)| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let n = field.n();
    let mut pixels = Vec::with_capacity((n + 1) * (n + 1));
    for j in (0..=n).rev() {
        for i in 0..=n {
            let level = match field.get(i, j) {
                Some(v) if span > 0.0 => (255.0 * (v - lo) / span).round() as u8,
                _ => 0,
            };
            pixels.push(level);
        }
    }
    pixels
}

/// Binary 8-bit PGM (P5) of [`heatmap`].
pub fn write_field_pgm<W: Write>(field: &ScalarField, mut out: W) -> std::io::Result<()> {
    let side = field.n() + 1;
    write!(out, "P5\n{side} {side}\n255\n")?;
    out.write_all(&heatmap(field))
}

pub fn write_field<W: Write>(field: &ScalarField, format: FieldFormat, out: W) -> std::io::Result<()> {
    match format {
        FieldFormat::Csv => write_field_csv(field, out),
        FieldFormat::Pgm => write_field_pgm(field, out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_have_expected_layouts() {
        let ex1 = ExperimentPreset::get(PresetId::Ex1);
        assert_eq!(ex1.m(), 2);
        assert_eq!(ex1.coeff.value(0, 0), 1e3);
        assert_eq!(ex1.rows, 2..=6);
        let ex5 = ExperimentPreset::get(PresetId::Ex5);
        assert_eq!((ex5.m(), ex5.rows.clone()), (16, 5..=8));
        let ex7 = ExperimentPreset::get(PresetId::Ex7);
        assert_eq!(ex7.coeff.value(3, 0), 150.0);
        assert_eq!(ex7.coeff.value(1, 2), 0.35);
        for id in PresetId::ALL {
            let p = ExperimentPreset::get(id);
            assert!(GridSpec::from_level(*p.rows.start(), p.m()).is_ok(), "{id:?}");
        }
    }

    #[test]
    fn parses_sources_and_levels() {
        assert_eq!("preset:ex3new".parse::<CoeffSource>().unwrap(), CoeffSource::Preset(PresetId::Ex3New));
        assert_eq!(
            "file:a/b.json".parse::<CoeffSource>().unwrap(),
            CoeffSource::File(PathBuf::from("a/b.json"))
        );
        assert!("preset:ex6".parse::<CoeffSource>().is_err());
        assert!("ex1".parse::<CoeffSource>().is_err());
        assert_eq!(parse_levels("2..6").unwrap(), 2..=6);
        assert_eq!(parse_levels("3..=5").unwrap(), 3..=5);
        assert_eq!(parse_levels("7").unwrap(), 7..=7);
        assert!(parse_levels("6..2").is_err());
        assert!(parse_levels("a..b").is_err());
        assert_eq!(parse_methods("both").unwrap(), vec![Method::Fem, Method::Fdm]);
        assert!(parse_methods("fvm").is_err());
    }

    #[test]
    fn min_level_respects_grid_rules() {
        assert_eq!(min_level(2), 2);
        assert_eq!(min_level(4), 3);
        assert_eq!(min_level(16), 5);
        assert_eq!(min_level(3), usize::BITS - 1);
    }

    #[test]
    fn sci_format() {
        assert_eq!(sci(1.4205), "1.42050E+00");
        assert_eq!(sci(0.25), "2.50000E-01");
        assert_eq!(sci(10.605), "1.06050E+01");
        assert_eq!(sci(0.0), "0.00000E+00");
        assert_eq!(sci(-3.0e-120), "-3.00000E-120");
    }

    #[test]
    fn csv_marks_masked_nodes() {
        let mut u = ScalarField::zeros(2);
        u.set(1, 0, 0.5);
        u.mask_out(1, 1);
        let mut buf = Vec::new();
        write_field_csv(&u, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "i,j,x,y,value,masked");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines[5], "1,1,5.00000E-01,5.00000E-01,,1");
        assert!(lines[2].ends_with(",0") && lines[2].starts_with("1,0,"));
    }

    #[test]
    fn pgm_layout() {
        let u = ScalarField::from_fn(2, |i, j| (i + 3 * j) as f64);
        let mut buf = Vec::new();
        write_field_pgm(&u, &mut buf).unwrap();
        assert!(buf.starts_with(b"P5\n3 3\n255\n"));
        let px = &buf[buf.len() - 9..];
        // top row is j = 2, so the maximum comes first at its right end
        assert_eq!(px[2], 255);
        assert_eq!(px[6], 0);
    }
}
