//! Built-in symmetric spaces.
//!
//! Normalisations: round spheres have sectional curvature +1; the unitary
//! families (complex projective spaces and complex Grassmannians) use the
//! metric `-½ Re tr(XY)`, so `cp(1)` is a sphere of curvature 4 and `cp(n)` has
//! holomorphic sectional curvature 4. The `scale` multiplier rescales the metric,
//! dividing every curvature by it.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::model::{Factor, SymmetricSpaceModel, TypeTag};
use crate::error::{input, Error, Result};
use crate::numeric::Tolerances;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CatalogSpec {
    Sphere(usize),
    Euclidean(usize),
    Cp(usize),
    GrassmannianSu(usize, usize),
    Hyperbolic(usize),
    Dual(Box<CatalogSpec>),
    Product(Vec<CatalogSpec>),
}

/// A catalog parameter: an integer, or a nested model for `product` and `dual`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Param {
    Int(i64),
    Model(CatalogSpec),
}

impl From<i64> for Param {
    fn from(v: i64) -> Self {
        Param::Int(v)
    }
}

impl From<CatalogSpec> for Param {
    fn from(v: CatalogSpec) -> Self {
        Param::Model(v)
    }
}

pub const FAMILIES: &[(&str, &str)] = &[
    ("sphere", "n >= 2: SO(n+1)/SO(n), curvature 1"),
    ("euclidean", "n >= 1: flat R^n, isometry algebra so(n) + R^n"),
    ("cp", "n >= 1: SU(n+1)/S(U(1)xU(n)), holomorphic curvature 4"),
    ("grassmannian_su", "p, q >= 1 (or a single n for p = q = n): SU(p+q)/S(U(p)xU(q))"),
    ("hyperbolic", "n >= 2: noncompact dual of sphere(n), curvature -1"),
    ("dual", "one compact model: its noncompact dual"),
    ("product", "two or more models: Riemannian product"),
];

impl CatalogSpec {
    pub fn from_name(name: &str, params: &[Param]) -> Result<Self> {
        let ints = || -> Result<Vec<usize>> {
            params
                .iter()
                .map(|p| match p {
                    Param::Int(v) if *v >= 0 => Ok(*v as usize),
                    _ => input(format!("{name} takes non-negative integer parameters")),
                })
                .collect()
        };
        let one = |min: usize| -> Result<usize> {
            let v = ints()?;
            match v.as_slice() {
                [n] if *n >= min => Ok(*n),
                _ => input(format!("{name} takes one integer parameter >= {min}")),
            }
        };
        let spec = match name {
            "sphere" => CatalogSpec::Sphere(one(2)?),
            "euclidean" => CatalogSpec::Euclidean(one(1)?),
            "cp" => CatalogSpec::Cp(one(1)?),
            "hyperbolic" => CatalogSpec::Hyperbolic(one(2)?),
            "grassmannian_su" => match ints()?.as_slice() {
                [n] if *n >= 1 => CatalogSpec::GrassmannianSu(*n, *n),
                [p, q] if *p >= 1 && *q >= 1 => CatalogSpec::GrassmannianSu(*p, *q),
                _ => return input("grassmannian_su takes [n] or [p, q] with entries >= 1"),
            },
            "dual" => match params {
                [Param::Model(m)] => CatalogSpec::Dual(Box::new(m.clone())),
                _ => return input("dual takes exactly one model"),
            },
            "product" => {
                if params.len() < 2 {
                    return input("product takes at least two models");
                }
                CatalogSpec::Product(
                    params
                        .iter()
                        .map(|p| match p {
                            Param::Model(m) => Ok(m.clone()),
                            Param::Int(_) => input("product parameters must be models"),
                        })
                        .collect::<Result<_>>()?,
                )
            }
            other => return input(format!("unknown catalog family '{other}'")),
        };
        Ok(spec)
    }

    pub fn family(&self) -> &'static str {
        match self {
            CatalogSpec::Sphere(_) => "sphere",
            CatalogSpec::Euclidean(_) => "euclidean",
            CatalogSpec::Cp(_) => "cp",
            CatalogSpec::GrassmannianSu(..) => "grassmannian_su",
            CatalogSpec::Hyperbolic(_) => "hyperbolic",
            CatalogSpec::Dual(_) => "dual",
            CatalogSpec::Product(_) => "product",
        }
    }

    pub fn params_json(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            CatalogSpec::Sphere(n)
            | CatalogSpec::Euclidean(n)
            | CatalogSpec::Cp(n)
            | CatalogSpec::Hyperbolic(n) => json!([n]),
            CatalogSpec::GrassmannianSu(p, q) => json!([p, q]),
            CatalogSpec::Dual(m) => json!([m.to_string()]),
            CatalogSpec::Product(ms) => {
                serde_json::Value::Array(ms.iter().map(|m| json!(m.to_string())).collect())
            }
        }
    }

    pub fn build(&self, tol: &Tolerances) -> Result<SymmetricSpaceModel> {
        self.build_scaled(1.0, tol)
    }

    /// Builds the model with its metric multiplied by `scale`.
    pub fn build_scaled(&self, scale: f64, tol: &Tolerances) -> Result<SymmetricSpaceModel> {
        if !(scale.is_finite() && scale > 0.0) {
            return input("scale must be finite and positive");
        }
        let raw = self.raw()?;
        let s = 1.0 / scale.sqrt();
        let p = raw
            .p
            .into_iter()
            .map(|m| if scale == 1.0 { m } else { m * s })
            .collect();
        let mut params = self.params_json();
        if scale != 1.0 {
            params = serde_json::json!({ "params": params, "scale": scale });
        }
        SymmetricSpaceModel::from_parts(
            self.to_string(),
            params,
            raw.tag,
            raw.factors,
            p,
            raw.k,
            tol,
        )
    }

    fn raw(&self) -> Result<Raw> {
        let raw = match self {
            CatalogSpec::Sphere(n) => single(self, TypeTag::Compact, sphere(*n)),
            CatalogSpec::Euclidean(n) => single(self, TypeTag::Euclidean, euclidean(*n)),
            CatalogSpec::Cp(n) => single(self, TypeTag::Compact, grassmannian_su(1, *n)),
            CatalogSpec::GrassmannianSu(p, q) => {
                single(self, TypeTag::Compact, grassmannian_su(*p, *q))
            }
            CatalogSpec::Hyperbolic(n) => dual(CatalogSpec::Sphere(*n).raw()?, &self.to_string())?,
            CatalogSpec::Dual(m) => dual(m.raw()?, &self.to_string())?,
            CatalogSpec::Product(ms) => {
                let parts = ms.iter().map(|m| m.raw()).collect::<Result<Vec<_>>>()?;
                product(parts)
            }
        };
        Ok(raw)
    }
}

impl fmt::Display for CatalogSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogSpec::Sphere(n)
            | CatalogSpec::Euclidean(n)
            | CatalogSpec::Cp(n)
            | CatalogSpec::Hyperbolic(n) => write!(f, "{}({n})", self.family()),
            CatalogSpec::GrassmannianSu(p, q) => write!(f, "grassmannian_su({p},{q})"),
            CatalogSpec::Dual(m) => write!(f, "dual({m})"),
            CatalogSpec::Product(ms) => {
                write!(f, "product(")?;
                for (i, m) in ms.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{m}")?;
                }
                write!(f, ")")
            }
        }
    }
}

impl FromStr for CatalogSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser {
            src: s.as_bytes(),
            pos: 0,
        };
        let spec = p.spec()?;
        p.skip_ws();
        if p.pos != p.src.len() {
            return input(format!("trailing input at column {} in '{s}'", p.pos + 1));
        }
        Ok(spec)
    }
}

impl Serialize for CatalogSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for CatalogSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn err<T>(&self, what: &str) -> Result<T> {
        input(format!("{what} at column {}", self.pos + 1))
    }

    fn spec(&mut self) -> Result<CatalogSpec> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if start == self.pos {
            return self.err("expected a family name");
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii").to_string();
        self.skip_ws();
        if self.src.get(self.pos) != Some(&b'(') {
            return self.err("expected '('");
        }
        self.pos += 1;
        let mut params = Vec::new();
        loop {
            self.skip_ws();
            match self.src.get(self.pos) {
                Some(b')') => {
                    self.pos += 1;
                    break;
                }
                Some(c) if c.is_ascii_digit() => {
                    let s = self.pos;
                    while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                        self.pos += 1;
                    }
                    let v: i64 = std::str::from_utf8(&self.src[s..self.pos])
                        .expect("ascii")
                        .parse()
                        .map_err(|_| Error::Input("integer out of range".into()))?;
                    params.push(Param::Int(v));
                }
                Some(_) => params.push(Param::Model(self.spec()?)),
                None => return self.err("unterminated parameter list"),
            }
            self.skip_ws();
            match self.src.get(self.pos) {
                Some(b',') => self.pos += 1,
                Some(b')') => {}
                _ => return self.err("expected ',' or ')'"),
            }
        }
        CatalogSpec::from_name(&name, &params)
    }
}

/// `catalog(name, params)` with default scale.
pub fn catalog(name: &str, params: &[Param], tol: &Tolerances) -> Result<SymmetricSpaceModel> {
    CatalogSpec::from_name(name, params)?.build(tol)
}

struct Raw {
    size: usize,
    p: Vec<DMatrix<f64>>,
    k: Vec<DMatrix<f64>>,
    tag: TypeTag,
    factors: Vec<Factor>,
}

fn single(spec: &CatalogSpec, tag: TypeTag, (size, p, k): Mats) -> Raw {
    let factors = vec![Factor {
        name: spec.to_string(),
        kind: tag,
        p_start: 0,
        p_len: p.len(),
        k_start: 0,
        k_len: k.len(),
    }];
    Raw {
        size,
        p,
        k,
        tag,
        factors,
    }
}

type Mats = (usize, Vec<DMatrix<f64>>, Vec<DMatrix<f64>>);

fn unit(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    m[(i, j)] = 1.0;
    m
}

fn skew(n: usize, i: usize, j: usize) -> DMatrix<f64> {
    unit(n, i, j) - unit(n, j, i)
}

/// so(n+1) with p spanned by E_{i,n} - E_{n,i}.
fn sphere(n: usize) -> Mats {
    let size = n + 1;
    let p = (0..n).map(|i| skew(size, i, n)).collect();
    let mut k = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            k.push(skew(size, i, j));
        }
    }
    (size, p, k)
}

/// so(n) + R^n as affine matrices of size n+1; translations sit in the last column.
fn euclidean(n: usize) -> Mats {
    let size = n + 1;
    let p = (0..n).map(|i| unit(size, i, n)).collect();
    let mut k = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            k.push(skew(size, i, j));
        }
    }
    (size, p, k)
}

/// Realification of a complex matrix A + iB as [[A, -B], [B, A]].
fn realify(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let n = re.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    m.view_mut((0, 0), (n, n)).copy_from(re);
    m.view_mut((n, n), (n, n)).copy_from(re);
    m.view_mut((0, n), (n, n)).copy_from(&(-im));
    m.view_mut((n, 0), (n, n)).copy_from(im);
    m
}

/// su(p+q) realified; p spanned by the off-diagonal block generators, which are
/// orthonormal for -½ Re tr.
fn grassmannian_su(p: usize, q: usize) -> Mats {
    let n = p + q;
    let zero = DMatrix::zeros(n, n);
    let sym = |i: usize, j: usize| unit(n, i, j) + unit(n, j, i);
    let mut pm = Vec::new();
    for a in 0..p {
        for b in p..n {
            pm.push(realify(&skew(n, a, b), &zero));
            pm.push(realify(&zero, &sym(a, b)));
        }
    }
    let mut km = Vec::new();
    for block in [0..p, p..n] {
        let idx: Vec<usize> = block.collect();
        for (x, &a) in idx.iter().enumerate() {
            for &b in &idx[x + 1..] {
                km.push(realify(&skew(n, a, b), &zero));
                km.push(realify(&zero, &sym(a, b)));
            }
        }
    }
    for a in 0..n - 1 {
        km.push(realify(&zero, &(unit(n, a, a) - unit(n, a + 1, a + 1))));
    }
    (2 * n, pm, km)
}

/// Noncompact dual: k ↦ k ⊗ I₂, p ↦ p ⊗ J, which flips the sign of [p, p].
fn dual(raw: Raw, name: &str) -> Result<Raw> {
    let flip = |t: TypeTag| match t {
        TypeTag::Compact => Ok(TypeTag::Noncompact),
        TypeTag::Noncompact => Ok(TypeTag::Compact),
        TypeTag::Euclidean => Ok(TypeTag::Euclidean),
        TypeTag::Product => Ok(TypeTag::Product),
    };
    let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
    let i2 = DMatrix::<f64>::identity(2, 2);
    let mut factors = Vec::new();
    for f in raw.factors {
        let kind = flip(f.kind)?;
        let fname = if raw.tag == TypeTag::Product {
            format!("dual({})", f.name)
        } else {
            name.to_string()
        };
        factors.push(Factor {
            name: fname,
            kind,
            ..f
        });
    }
    Ok(Raw {
        size: raw.size * 2,
        p: raw.p.iter().map(|m| m.kronecker(&j)).collect(),
        k: raw.k.iter().map(|m| m.kronecker(&i2)).collect(),
        tag: flip(raw.tag)?,
        factors,
    })
}

/// Block-diagonal product; p-coordinates of all factors first, then k-coordinates.
fn product(parts: Vec<Raw>) -> Raw {
    let size: usize = parts.iter().map(|r| r.size).sum();
    let mut p = Vec::new();
    let mut k = Vec::new();
    let mut factors = Vec::new();
    let (mut off, mut p_off, mut k_off) = (0, 0, 0);
    for part in &parts {
        let embed = |m: &DMatrix<f64>| {
            let mut big = DMatrix::zeros(size, size);
            big.view_mut((off, off), (part.size, part.size)).copy_from(m);
            big
        };
        p.extend(part.p.iter().map(embed));
        for f in &part.factors {
            factors.push(Factor {
                p_start: f.p_start + p_off,
                k_start: f.k_start + k_off,
                ..f.clone()
            });
        }
        p_off += part.p.len();
        k_off += part.k.len();
        off += part.size;
    }
    off = 0;
    for part in &parts {
        let embed = |m: &DMatrix<f64>| {
            let mut big = DMatrix::zeros(size, size);
            big.view_mut((off, off), (part.size, part.size)).copy_from(m);
            big
        };
        k.extend(part.k.iter().map(embed));
        off += part.size;
    }
    Raw {
        size,
        p,
        k,
        tag: TypeTag::Product,
        factors,
    }
}
