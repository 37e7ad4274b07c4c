//! Manifest files: TOML documents with string-valued expression fields.
//!
//! A plain manifest declares a chart, a cometric (full square matrix or
//! compact upper-triangular rows), the strict upper triangle of a Poisson
//! bivector, and named 1-forms / scalar fields. A warp manifest instead
//! points at a base and a fiber manifest and supplies the warp expression.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};

use pgeom::expr::Expr;
use pgeom::manifold::{BivectorField, Chart, Cometric, ExprMatrix, OneForm};

use crate::CliError;

#[derive(Debug, Clone)]
pub struct PlainManifest {
    pub chart: Chart,
    pub cometric: Cometric,
    pub poisson: BivectorField,
    pub forms: Vec<(String, OneForm)>,
    pub scalars: Vec<(String, Expr)>,
}

impl PlainManifest {
    pub fn form(&self, name: &str) -> Option<&OneForm> {
        self.forms.iter().find(|(n, _)| n == name).map(|(_, f)| f)
    }
}

#[derive(Debug, Clone)]
pub struct WarpManifest {
    pub base: PlainManifest,
    pub fiber: PlainManifest,
    pub f: Expr,
    /// Named 1-form on the base used as `eta1` in the split checks.
    pub eta1: Option<String>,
    /// Named 1-form on the fiber used as `eta2`.
    pub eta2: Option<String>,
}

#[derive(Debug, Clone)]
pub enum ManifestKind {
    Plain(PlainManifest),
    Warp(Box<WarpManifest>),
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub name: String,
    pub hash: String,
    pub kind: ManifestKind,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    chart: Option<RawChart>,
    cometric: Option<Vec<Vec<String>>>,
    poisson: Option<RawPoisson>,
    forms: Option<BTreeMap<String, Vec<String>>>,
    scalars: Option<BTreeMap<String, String>>,
    warp: Option<RawWarp>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChart {
    coords: Vec<String>,
    domain: BTreeMap<String, [f64; 2]>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawPoisson {
    #[serde(default)]
    upper: BTreeMap<String, String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWarp {
    base: String,
    fiber: String,
    f: String,
    eta1: Option<String>,
    eta2: Option<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

fn invalid(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Invalid {
        path: path.display().to_string(),
        message: message.into(),
    }
}

fn parse_field(path: &Path, chart: &Chart, field: &str, src: &str) -> Result<Expr, CliError> {
    chart
        .parse_expr(src)
        .map_err(|source| CliError::BadExpression {
            path: path.display().to_string(),
            field: field.to_string(),
            source,
        })
}

fn build_plain(path: &Path, raw: RawManifest) -> Result<PlainManifest, CliError> {
    let raw_chart = raw
        .chart
        .ok_or_else(|| invalid(path, "missing [chart] section"))?;
    let dim = raw_chart.coords.len();
    let mut domain = Vec::with_capacity(dim);
    for name in &raw_chart.coords {
        let interval = raw_chart
            .domain
            .get(name)
            .ok_or_else(|| invalid(path, format!("missing domain for coordinate `{name}`")))?;
        domain.push(*interval);
    }
    for name in raw_chart.domain.keys() {
        if !raw_chart.coords.contains(name) {
            return Err(invalid(
                path,
                format!("domain given for undeclared coordinate `{name}`"),
            ));
        }
    }
    let chart = Chart::new(raw_chart.coords, domain)?;

    let rows = raw
        .cometric
        .ok_or_else(|| invalid(path, "missing `cometric` matrix"))?;
    if rows.len() != dim {
        return Err(invalid(
            path,
            format!("cometric has {} rows, chart dimension is {dim}", rows.len()),
        ));
    }
    // full square rows, or compact upper-triangular rows (row i starts at
    // the diagonal and the lower triangle is completed by symmetry)
    let full = rows.iter().all(|r| r.len() == dim);
    let compact = rows.iter().enumerate().all(|(i, r)| r.len() == dim - i);
    if !(full || compact) {
        return Err(invalid(
            path,
            format!("cometric rows must all have length {dim} or form an upper triangle"),
        ));
    }
    let mut entries: Vec<Vec<Option<Expr>>> = vec![vec![None; dim]; dim];
    for (i, row) in rows.iter().enumerate() {
        for (col, src) in row.iter().enumerate() {
            let j = if full { col } else { i + col };
            let e = parse_field(path, &chart, &format!("cometric[{i}][{col}]"), src)?;
            entries[i][j] = Some(e);
        }
    }
    let cometric = Cometric::new(ExprMatrix::from_fn(dim, |i, j| match &entries[i][j] {
        Some(e) => e.clone(),
        None => entries[j][i]
            .clone()
            .expect("upper triangle covers the matrix"),
    }));

    let mut upper = Vec::new();
    for (key, src) in raw.poisson.unwrap_or_default().upper {
        let parts: Vec<&str> = key.split(',').map(str::trim).collect();
        let bad_key = || {
            invalid(
                path,
                format!("poisson.upper key `{key}` is not \"i,j\" with 1 <= i < j <= {dim}"),
            )
        };
        if parts.len() != 2 {
            return Err(bad_key());
        }
        let i: usize = parts[0].parse().map_err(|_| bad_key())?;
        let j: usize = parts[1].parse().map_err(|_| bad_key())?;
        if !(1 <= i && i < j && j <= dim) {
            return Err(bad_key());
        }
        let e = parse_field(path, &chart, &format!("poisson.upper[\"{key}\"]"), &src)?;
        upper.push((i - 1, j - 1, e));
    }
    let poisson = BivectorField::from_upper(dim, &upper);

    let mut forms = Vec::new();
    for (name, comps) in raw.forms.unwrap_or_default() {
        if comps.len() != dim {
            return Err(invalid(
                path,
                format!(
                    "form `{name}` has {} components, chart dimension is {dim}",
                    comps.len()
                ),
            ));
        }
        let parsed: Result<Vec<Expr>, CliError> = comps
            .iter()
            .enumerate()
            .map(|(k, src)| parse_field(path, &chart, &format!("forms.{name}[{k}]"), src))
            .collect();
        forms.push((name, OneForm::new(parsed?)));
    }

    let mut scalars = Vec::new();
    for (name, src) in raw.scalars.unwrap_or_default() {
        let e = parse_field(path, &chart, &format!("scalars.{name}"), &src)?;
        scalars.push((name, e));
    }

    Ok(PlainManifest {
        chart,
        cometric,
        poisson,
        forms,
        scalars,
    })
}

fn load_raw(path: &Path) -> Result<(RawManifest, Vec<u8>), CliError> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let raw: RawManifest = toml::from_str(&text).map_err(|source| CliError::Toml {
        path: path.display().to_string(),
        source: Box::new(source),
    })?;
    Ok((raw, bytes))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Load and validate a manifest file. Warp manifests pull in their base and
/// fiber manifests (paths resolved relative to the warp file) and parse the
/// warp expression against the base chart, so a fiber coordinate inside `f`
/// is rejected here.
pub fn load_manifest(path: &Path) -> Result<Manifest, CliError> {
    let (raw, bytes) = load_raw(path)?;
    let hash = sha256_hex(&bytes);
    let name = stem(path);

    if let Some(warp) = raw.warp {
        if raw.chart.is_some() || raw.cometric.is_some() {
            return Err(invalid(
                path,
                "a warp manifest takes its geometry from base and fiber; drop the chart/cometric sections",
            ));
        }
        let dir = path.parent().unwrap_or_else(|| Path::new("."));
        let base_path: PathBuf = dir.join(&warp.base);
        let fiber_path: PathBuf = dir.join(&warp.fiber);
        let base = match load_manifest(&base_path)?.kind {
            ManifestKind::Plain(p) => p,
            ManifestKind::Warp(_) => {
                return Err(invalid(path, "warp base must be a plain manifest"));
            }
        };
        let fiber = match load_manifest(&fiber_path)?.kind {
            ManifestKind::Plain(p) => p,
            ManifestKind::Warp(_) => {
                return Err(invalid(path, "warp fiber must be a plain manifest"));
            }
        };
        let f = parse_field(path, &base.chart, "warp.f", &warp.f)?;
        if let Some(eta1) = &warp.eta1 {
            if base.form(eta1).is_none() {
                return Err(invalid(
                    path,
                    format!("warp.eta1 `{eta1}` is not a form of the base manifest"),
                ));
            }
        }
        if let Some(eta2) = &warp.eta2 {
            if fiber.form(eta2).is_none() {
                return Err(invalid(
                    path,
                    format!("warp.eta2 `{eta2}` is not a form of the fiber manifest"),
                ));
            }
        }
        return Ok(Manifest {
            name,
            hash,
            kind: ManifestKind::Warp(Box::new(WarpManifest {
                base,
                fiber,
                f,
                eta1: warp.eta1,
                eta2: warp.eta2,
            })),
        });
    }

    let plain = build_plain(path, raw)?;
    Ok(Manifest {
        name,
        hash,
        kind: ManifestKind::Plain(plain),
    })
}

/// Manifest for `pg warp` invocations, assembled from two files plus
/// command-line arguments.
pub fn warp_manifest_from_parts(
    base_path: &Path,
    fiber_path: &Path,
    f_src: &str,
    eta1: Option<String>,
    eta2: Option<String>,
) -> Result<Manifest, CliError> {
    let base_loaded = load_manifest(base_path)?;
    let fiber_loaded = load_manifest(fiber_path)?;
    let base = match base_loaded.kind {
        ManifestKind::Plain(p) => p,
        ManifestKind::Warp(_) => {
            return Err(invalid(base_path, "warp base must be a plain manifest"));
        }
    };
    let fiber = match fiber_loaded.kind {
        ManifestKind::Plain(p) => p,
        ManifestKind::Warp(_) => {
            return Err(invalid(fiber_path, "warp fiber must be a plain manifest"));
        }
    };
    let f = base
        .chart
        .parse_expr(f_src)
        .map_err(|source| CliError::BadExpression {
            path: "<args>".to_string(),
            field: "--f".to_string(),
            source,
        })?;
    if let Some(name) = &eta1 {
        if base.form(name).is_none() {
            return Err(invalid(
                base_path,
                format!("--eta1 `{name}` is not a form of the base manifest"),
            ));
        }
    }
    if let Some(name) = &eta2 {
        if fiber.form(name).is_none() {
            return Err(invalid(
                fiber_path,
                format!("--eta2 `{name}` is not a form of the fiber manifest"),
            ));
        }
    }
    let canonical = format!(
        "warp|base={}|fiber={}|f={}|eta1={}|eta2={}",
        base_loaded.hash,
        fiber_loaded.hash,
        f_src,
        eta1.as_deref().unwrap_or(""),
        eta2.as_deref().unwrap_or("")
    );
    Ok(Manifest {
        name: format!("{}x{}", base_loaded.name, fiber_loaded.name),
        hash: sha256_hex(canonical.as_bytes()),
        kind: ManifestKind::Warp(Box::new(WarpManifest {
            base,
            fiber,
            f,
            eta1,
            eta2,
        })),
    })
}

/// Manifest for `pg r2`: the flat plane with one bivector component and one
/// named form.
pub fn r2_manifest_from_parts(pi_src: &str, eta_src: &str) -> Result<Manifest, CliError> {
    let chart = Chart::unit(2);
    let parse = |field: &str, src: &str| {
        chart
            .parse_expr(src)
            .map_err(|source| CliError::BadExpression {
                path: "<args>".to_string(),
                field: field.to_string(),
                source,
            })
    };
    let pi12 = parse("--pi", pi_src)?;
    let comps: Vec<&str> = eta_src.split(',').collect();
    if comps.len() != 2 {
        return Err(CliError::Invalid {
            path: "<args>".to_string(),
            message: format!("--eta expects two comma-separated components, got `{eta_src}`"),
        });
    }
    let eta = OneForm::new(vec![
        parse("--eta[0]", comps[0])?,
        parse("--eta[1]", comps[1])?,
    ]);
    let canonical = format!("r2|pi={pi_src}|eta={eta_src}");
    Ok(Manifest {
        name: "r2".to_string(),
        hash: sha256_hex(canonical.as_bytes()),
        kind: ManifestKind::Plain(PlainManifest {
            chart,
            cometric: Cometric::identity(2),
            poisson: BivectorField::r2(pi12),
            forms: vec![("eta".to_string(), eta)],
            scalars: Vec::new(),
        }),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_manifest(dir: &Path, name: &str, body: &str) -> PathBuf {
        let path = dir.join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(body.as_bytes()).unwrap();
        path
    }

    const FLAT_R2: &str = r#"
cometric = [["1", "0"], ["0", "1"]]

[chart]
coords = ["x1", "x2"]
[chart.domain]
x1 = [-1.0, 1.0]
x2 = [-1.0, 1.0]

[poisson.upper]
"1,2" = "x1"

[forms]
eta = ["x2", "x1^2"]

[scalars]
phi = "x1 + x2"
"#;

    #[test]
    fn loads_flat_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_manifest(dir.path(), "flat.toml", FLAT_R2);
        let m = load_manifest(&path).unwrap();
        assert_eq!(m.name, "flat");
        assert_eq!(m.hash.len(), 64);
        let ManifestKind::Plain(p) = &m.kind else {
            panic!("expected plain manifest");
        };
        assert_eq!(p.chart.dim(), 2);
        assert!(p.form("eta").is_some());
        assert_eq!(p.scalars.len(), 1);
        // lower triangle of the bivector is derived
        assert_eq!(p.poisson.at(1, 0).eval(&[0.5, 0.0]).unwrap(), -0.5);
    }

    #[test]
    fn compact_upper_triangle_cometric() {
        let dir = tempfile::tempdir().unwrap();
        let body = r#"
cometric = [["2", "x1"], ["3"]]

[chart]
coords = ["x1", "x2"]
[chart.domain]
x1 = [-1.0, 1.0]
x2 = [-1.0, 1.0]
"#;
        let path = write_manifest(dir.path(), "compact.toml", body);
        let m = load_manifest(&path).unwrap();
        let ManifestKind::Plain(p) = &m.kind else {
            panic!()
        };
        let pt = [0.25, 0.0];
        assert_eq!(p.cometric.at(1, 0).eval(&pt).unwrap(), 0.25);
        assert_eq!(p.cometric.at(1, 1).eval(&pt).unwrap(), 3.0);
    }

    #[test]
    fn rejects_bad_shapes_and_expressions() {
        let dir = tempfile::tempdir().unwrap();
        // 2x3 cometric
        let body = FLAT_R2.replace(
            "cometric = [[\"1\", \"0\"], [\"0\", \"1\"]]",
            "cometric = [[\"1\", \"0\", \"0\"], [\"0\", \"1\", \"0\"]]",
        );
        let path = write_manifest(dir.path(), "bad_dim.toml", &body);
        let err = load_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("length 2"), "{err}");

        // undeclared coordinate in an expression
        let body = FLAT_R2.replace("\"1,2\" = \"x1\"", "\"1,2\" = \"x3\"");
        let path = write_manifest(dir.path(), "bad_coord.toml", &body);
        let err = load_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("unknown identifier"), "{err}");

        // malformed poisson key
        let body = FLAT_R2.replace("\"1,2\" = \"x1\"", "\"2,1\" = \"x1\"");
        let path = write_manifest(dir.path(), "bad_key.toml", &body);
        assert!(load_manifest(&path).is_err());
    }

    #[test]
    fn warp_manifest_resolves_factors() {
        let dir = tempfile::tempdir().unwrap();
        write_manifest(dir.path(), "base.toml", FLAT_R2);
        let fiber = FLAT_R2.replace("x1", "y1").replace("x2", "y2");
        write_manifest(dir.path(), "fiber.toml", &fiber);
        let body = r#"
[warp]
base = "base.toml"
fiber = "fiber.toml"
f = "1 + x1^2"
eta1 = "eta"
eta2 = "eta"
"#;
        let path = write_manifest(dir.path(), "warp.toml", body);
        let m = load_manifest(&path).unwrap();
        let ManifestKind::Warp(w) = &m.kind else {
            panic!()
        };
        assert_eq!(w.base.chart.coords()[0], "x1");
        assert_eq!(w.fiber.chart.coords()[0], "y1");

        // fiber coordinate inside f is an unknown identifier for the base chart
        let body = body.replace("1 + x1^2", "1 + y1^2");
        let path = write_manifest(dir.path(), "warp_bad.toml", &body);
        let err = load_manifest(&path).unwrap_err();
        assert!(err.to_string().contains("unknown identifier"), "{err}");
    }
}
