//! Scene descriptions, the built-in metric catalog and deterministic sample
//! points.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::expr::{default_coords, parse_with_r2, Expr};
use crate::jets::{int, rat, Rational};
use crate::riemann::{inertia, ChartMetric, Geometry, Signature};

/// A chart metric together with declared Einstein scales and sample points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SceneSpec {
    pub name: String,
    pub metric: ChartMetric,
    /// Scales `σ` claimed to make `σ^-2 g` Einstein near the sample points.
    pub einstein_scales: Vec<Expr>,
    /// Expressions that must be strictly positive at every sample point
    /// (chart domains, horizons).
    pub require_positive: Vec<Expr>,
    /// Explicit sample points; used before any generated ones.
    pub sample_points: Vec<Vec<Rational>>,
    pub sample_seed: Option<u64>,
    pub sample_count: Option<usize>,
    pub notes: String,
}

impl SceneSpec {
    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn coords(&self) -> &[String] {
        self.metric.coords()
    }

    /// Checks that a point lies in the chart domain, the metric is
    /// nondegenerate there with the declared signature, and every declared
    /// Einstein scale is nonzero.
    pub fn check_point(&self, point: &[Rational]) -> Result<()> {
        if point.len() != self.dim() {
            return Err(Error::InvalidScene(format!(
                "sample point has {} coordinates, scene has {}",
                point.len(),
                self.dim()
            )));
        }
        for e in &self.require_positive {
            match e.eval(point) {
                Some(v) if v.is_positive() => {}
                _ => {
                    return Err(Error::InvalidScene(format!(
                        "`{}` is not positive at the sample point",
                        e.display(self.coords())
                    )))
                }
            }
        }
        let m = self.metric.value_at(point)?;
        let found = inertia(&m).ok_or(Error::DegenerateMetric)?;
        if found != self.metric.signature() {
            return Err(Error::InvalidScene(format!(
                "metric has signature ({},{}) at the sample point, declared ({},{})",
                found.positive,
                found.negative,
                self.metric.signature().positive,
                self.metric.signature().negative
            )));
        }
        for s in &self.einstein_scales {
            match s.eval(point) {
                Some(v) if !v.is_zero() => {}
                _ => return Err(Error::VanishingScale(s.display(self.coords()).to_string())),
            }
        }
        Ok(())
    }

    /// Validates every explicit sample point.
    pub fn validate(&self) -> Result<()> {
        for p in &self.sample_points {
            self.check_point(p)?;
        }
        Ok(())
    }
}

/// Facts a catalog entry promises; each is re-derived by [`verify_expectations`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Expectations {
    /// The chart metric itself is Einstein.
    pub einstein: bool,
    /// Constant scalar curvature of the chart metric, when known.
    pub scalar_curvature: Option<Rational>,
    /// Weyl tensor vanishes.
    pub conformally_flat: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub spec: SceneSpec,
    pub expect: Expectations,
}

/// Canonical catalog names.
pub const BUILTIN_NAMES: &[&str] = &[
    "flat4",
    "flat5",
    "flat6",
    "sphere4",
    "sphere5",
    "sphere6",
    "hyperbolic4",
    "hyperbolic5",
    "hyperbolic6",
    "flatclass4",
    "flatclass5",
    "flatclass6",
    "perturbed_flat_4",
    "perturbed_flat_5",
    "perturbed_flat_6",
    "schwarzschild",
    "fubini_study",
    "s2xs2",
    "s2xs3",
];

fn canonical_name(name: &str) -> Option<&'static str> {
    let squashed: String = name.chars().filter(|&c| c != '_').collect();
    BUILTIN_NAMES
        .iter()
        .copied()
        .find(|c| *c == name || c.chars().filter(|&ch| ch != '_').collect::<String>() == squashed)
}

fn parse_all(texts: &[&str], coords: &[String]) -> Result<Vec<Expr>> {
    texts.iter().map(|t| parse_with_r2(t, coords)).collect()
}

fn diagonal(coords: &[String], entries: &[String]) -> Result<Vec<Vec<Expr>>> {
    let n = coords.len();
    let mut g = vec![vec![Expr::int(0); n]; n];
    for i in 0..n {
        g[i][i] = parse_with_r2(&entries[i], coords)?;
    }
    Ok(g)
}

fn conformally_flat_chart(n: usize, factor: Option<&str>) -> Result<Vec<Vec<Expr>>> {
    let coords = default_coords(n);
    let entry = factor.unwrap_or("1").to_string();
    diagonal(&coords, &vec![entry; n])
}

fn points(rows: &[&[(i64, i64)]]) -> Vec<Vec<Rational>> {
    rows.iter()
        .map(|r| r.iter().map(|&(p, q)| rat(p, q)).collect())
        .collect()
}

/// Points in dimension 5 where `(1 ± r²)/2` and the sphere and hyperbolic
/// conformal factors are all squares of rationals, so half-integer weights
/// stay exact.
fn square_friendly_points5() -> Vec<Vec<Rational>> {
    points(&[
        &[(1, 5), (1, 5), (1, 5), (2, 5), (0, 1)],
        &[(9, 13), (5, 13), (3, 13), (2, 13), (0, 1)],
        &[(0, 1), (2, 5), (-1, 5), (1, 5), (1, 5)],
    ])
}

fn base_spec(
    name: &str,
    coords: Vec<String>,
    g: Vec<Vec<Expr>>,
    signature: Signature,
) -> Result<SceneSpec> {
    Ok(SceneSpec {
        name: name.to_string(),
        metric: ChartMetric::new(coords, g, signature)?,
        einstein_scales: Vec::new(),
        require_positive: Vec::new(),
        sample_points: Vec::new(),
        sample_seed: None,
        sample_count: None,
        notes: String::new(),
    })
}

/// Looks up a built-in scene. Underscore variants such as `sphere_4` are
/// accepted.
pub fn builtin(name: &str) -> Result<CatalogEntry> {
    let canon = canonical_name(name).ok_or_else(|| Error::UnknownScene(name.to_string()))?;
    let dim_suffix = |prefix: &str| -> usize {
        canon
            .trim_start_matches(prefix)
            .trim_start_matches('_')
            .parse()
            .expect("catalog names end in the dimension")
    };
    let entry = match canon {
        c if c.starts_with("flatclass") => {
            let n = dim_suffix("flatclass");
            let coords = default_coords(n);
            let mut spec = base_spec(
                c,
                coords.clone(),
                conformally_flat_chart(n, None)?,
                Signature::riemannian(n),
            )?;
            spec.einstein_scales = parse_all(&["1", "(1+r2)/2", "(1-r2)/2"], &coords)?;
            spec.notes = "flat chart with the flat, round and hyperbolic Einstein scales".into();
            if n % 2 == 1 {
                spec.sample_points = square_friendly_points5();
            }
            CatalogEntry {
                spec,
                expect: Expectations {
                    einstein: true,
                    scalar_curvature: Some(int(0)),
                    conformally_flat: true,
                },
            }
        }
        c if c.starts_with("flat") => {
            let n = dim_suffix("flat");
            let coords = default_coords(n);
            let mut spec = base_spec(
                c,
                coords.clone(),
                conformally_flat_chart(n, None)?,
                Signature::riemannian(n),
            )?;
            spec.einstein_scales = parse_all(&["1"], &coords)?;
            spec.notes = "Euclidean space".into();
            CatalogEntry {
                spec,
                expect: Expectations {
                    einstein: true,
                    scalar_curvature: Some(int(0)),
                    conformally_flat: true,
                },
            }
        }
        c if c.starts_with("sphere") => {
            let n = dim_suffix("sphere");
            let coords = default_coords(n);
            let mut spec = base_spec(
                c,
                coords.clone(),
                conformally_flat_chart(n, Some("4/(1+r2)^2"))?,
                Signature::riemannian(n),
            )?;
            spec.einstein_scales = parse_all(&["1", "2/(1+r2)", "(1-r2)/(1+r2)"], &coords)?;
            spec.notes = "unit round sphere in stereographic coordinates".into();
            if n % 2 == 1 {
                spec.sample_points = square_friendly_points5();
            }
            let nn = n as i64;
            CatalogEntry {
                spec,
                expect: Expectations {
                    einstein: true,
                    scalar_curvature: Some(int(nn * (nn - 1))),
                    conformally_flat: true,
                },
            }
        }
        c if c.starts_with("hyperbolic") => {
            let n = dim_suffix("hyperbolic");
            let coords = default_coords(n);
            let mut spec = base_spec(
                c,
                coords.clone(),
                conformally_flat_chart(n, Some("4/(1-r2)^2"))?,
                Signature::riemannian(n),
            )?;
            spec.einstein_scales = parse_all(&["1", "2/(1-r2)", "(1+r2)/(1-r2)"], &coords)?;
            spec.require_positive = parse_all(&["1-r2"], &coords)?;
            spec.notes = "unit hyperbolic space in the Poincare ball".into();
            if n % 2 == 1 {
                spec.sample_points = square_friendly_points5();
            }
            let nn = n as i64;
            CatalogEntry {
                spec,
                expect: Expectations {
                    einstein: true,
                    scalar_curvature: Some(int(-nn * (nn - 1))),
                    conformally_flat: true,
                },
            }
        }
        c if c.starts_with("perturbed_flat") => {
            let n = dim_suffix("perturbed_flat");
            let coords = default_coords(n);
            let mut g = conformally_flat_chart(n, None)?;
            for i in 0..n {
                let next = &coords[(i + 1) % n];
                g[i][i] = parse_with_r2(&format!("1+{next}^2/10"), &coords)?;
            }
            let off = parse_with_r2("x3*x4/10", &coords)?;
            g[0][1] = off.clone();
            g[1][0] = off;
            let mut spec = base_spec(c, coords, g, Signature::riemannian(n))?;
            spec.notes = "identity plus a fixed polynomial bump, generic and not Einstein".into();
            CatalogEntry {
                spec,
                expect: Expectations {
                    einstein: false,
                    scalar_curvature: None,
                    conformally_flat: false,
                },
            }
        }
        "schwarzschild" => {
            let coords: Vec<String> = ["t", "r", "u", "v"].iter().map(|s| s.to_string()).collect();
            let entries: Vec<String> = [
                "-(r-2)/r",
                "r/(r-2)",
                "4*r^2/(1+u^2+v^2)^2",
                "4*r^2/(1+u^2+v^2)^2",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let g = diagonal(&coords, &entries)?;
            let mut spec = base_spec(
                "schwarzschild",
                coords.clone(),
                g,
                Signature {
                    positive: 3,
                    negative: 1,
                },
            )?;
            spec.einstein_scales = parse_all(&["1"], &coords)?;
            spec.require_positive = parse_all(&["r-2"], &coords)?;
            spec.notes = "Schwarzschild exterior, mass 1, stereographic angular chart".into();
            CatalogEntry {
                spec,
                expect: Expectations {
                    einstein: true,
                    scalar_curvature: Some(int(0)),
                    conformally_flat: false,
                },
            }
        }
        "fubini_study" => {
            // Real coordinates (x1, y1, x2, y2) = (x1, x2, x3, x4).
            let coords = default_coords(4);
            let d = "(1+x1^2+x2^2+x3^2+x4^2)^2";
            let a11 = format!("(1+x3^2+x4^2)/{d}");
            let a22 = format!("(1+x1^2+x2^2)/{d}");
            let a12 = format!("-(x1*x3+x2*x4)/{d}");
            // B_jk = -(x_j y_k - y_j x_k)/D
            let b12 = format!("-(x1*x4-x2*x3)/{d}");
            let b21 = format!("-(x3*x2-x4*x1)/{d}");
            let p = |s: &str| parse_with_r2(s, &coords);
            let zero = Expr::int(0);
            // index order: x1 (a1), x2 (b1), x3 (a2), x4 (b2)
            let g = vec![
                vec![p(&a11)?, zero.clone(), p(&a12)?, p(&b12)?],
                vec![zero.clone(), p(&a11)?, p(&b21)?, p(&a12)?],
                vec![p(&a12)?, p(&b21)?, p(&a22)?, zero.clone()],
                vec![p(&b12)?, p(&a12)?, zero, p(&a22)?],
            ];
            let mut spec = base_spec("fubini_study", coords.clone(), g, Signature::riemannian(4))?;
            spec.einstein_scales = parse_all(&["1"], &coords)?;
            spec.notes = "complex projective plane in an affine chart".into();
            CatalogEntry {
                spec,
                expect: Expectations {
                    einstein: true,
                    scalar_curvature: Some(int(24)),
                    conformally_flat: false,
                },
            }
        }
        "s2xs2" => {
            let coords = default_coords(4);
            let entries: Vec<String> = [
                "4/(1+x1^2+x2^2)^2",
                "4/(1+x1^2+x2^2)^2",
                "4/(1+x3^2+x4^2)^2",
                "4/(1+x3^2+x4^2)^2",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let g = diagonal(&coords, &entries)?;
            let mut spec = base_spec("s2xs2", coords.clone(), g, Signature::riemannian(4))?;
            spec.einstein_scales = parse_all(&["1"], &coords)?;
            spec.notes = "product of two unit spheres".into();
            CatalogEntry {
                spec,
                expect: Expectations {
                    einstein: true,
                    scalar_curvature: Some(int(4)),
                    conformally_flat: false,
                },
            }
        }
        "s2xs3" => {
            // S^2 of radius 1 times S^3 of radius sqrt(2): both factors have Ric = g.
            let coords = default_coords(5);
            let mut entries: Vec<String> = vec!["4/(1+x1^2+x2^2)^2".into(); 2];
            entries.extend(core::iter::repeat_n(
                "8/(1+x3^2+x4^2+x5^2)^2".to_string(),
                3,
            ));
            let g = diagonal(&coords, &entries)?;
            let mut spec = base_spec("s2xs3", coords.clone(), g, Signature::riemannian(5))?;
            spec.einstein_scales = parse_all(&["1"], &coords)?;
            spec.notes = "product of a unit 2-sphere and a 3-sphere of radius sqrt 2".into();
            CatalogEntry {
                spec,
                expect: Expectations {
                    einstein: true,
                    scalar_curvature: Some(int(5)),
                    conformally_flat: false,
                },
            }
        }
        _ => return Err(Error::UnknownScene(name.to_string())),
    };
    Ok(entry)
}

fn name_hash(name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

const MAX_ATTEMPTS: usize = 4000;

/// Deterministic sample points: the scene's explicit points first, then
/// seeded small-denominator rationals that pass [`SceneSpec::check_point`].
/// Successive attempts cycle through boxes of radius 3, 3/2, 3/4 and 3/8 so
/// that bounded chart domains are reached quickly.
pub fn sample_points(spec: &SceneSpec, count: usize, seed: u64) -> Result<Vec<Vec<Rational>>> {
    if count == 0 {
        return Err(Error::InvalidScene(
            "sample count must be at least 1".into(),
        ));
    }
    let mut out: Vec<Vec<Rational>> = Vec::with_capacity(count);
    for p in spec.sample_points.iter().take(count) {
        spec.check_point(p)?;
        out.push(p.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ name_hash(&spec.name));
    let n = spec.dim();
    let mut attempts = 0;
    while out.len() < count {
        if attempts == MAX_ATTEMPTS {
            return Err(Error::SamplingExhausted {
                wanted: count,
                attempts,
            });
        }
        let shrink = 1i64 << (attempts % 4);
        attempts += 1;
        let p: Vec<Rational> = (0..n)
            .map(|_| {
                let q = i64::from(rng.next_u32() % 4) + 1;
                let span = (6 * q + 1) as u32;
                let num = i64::from(rng.next_u32() % span) - 3 * q;
                Rational::new(BigInt::from(num), BigInt::from(q * shrink))
            })
            .collect();
        if out.contains(&p) {
            continue;
        }
        if spec.check_point(&p).is_ok() {
            out.push(p);
        }
    }
    Ok(out)
}

/// Outcome of re-deriving one catalog expectation at one point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExpectationCheck {
    pub fact: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Re-derives the promised facts of a catalog entry at a point.
pub fn verify_expectations(
    entry: &CatalogEntry,
    point: &[Rational],
) -> Result<Vec<ExpectationCheck>> {
    let geom = Geometry::new(&entry.spec.metric, point, 3)?;
    let mut out = Vec::new();
    if let Some(sc) = &entry.expect.scalar_curvature {
        let s = geom.scalar_curvature();
        let exact = s.is_constant() && s.constant_term() == *sc;
        out.push(ExpectationCheck {
            fact: "scalar curvature",
            passed: exact,
            detail: format!("Sc = {s}, expected {sc}"),
        });
    }
    let tf = geom.tracefree_schouten();
    out.push(ExpectationCheck {
        fact: "einstein",
        passed: tf.is_zero() == entry.expect.einstein,
        detail: format!(
            "trace-free Schouten {}",
            if tf.is_zero() {
                "vanishes"
            } else {
                "is nonzero"
            }
        ),
    });
    let weyl_zero = geom.weyl().iter().all(|c| c.is_zero());
    out.push(ExpectationCheck {
        fact: "conformally flat",
        passed: weyl_zero == entry.expect.conformally_flat,
        detail: format!("Weyl {}", if weyl_zero { "vanishes" } else { "is nonzero" }),
    });
    Ok(out)
}

fn rotation(n: usize, i: usize, j: usize) -> Vec<Expr> {
    let mut k = vec![Expr::int(0); n];
    k[j] = Expr::var(i);
    k[i] = Expr::neg(Expr::var(j));
    k
}

fn flat_conformal_killing_fields(n: usize) -> Vec<Vec<Expr>> {
    let mut out = Vec::new();
    for i in 0..n {
        let mut k = vec![Expr::int(0); n];
        k[i] = Expr::int(1);
        out.push(k);
    }
    for i in 0..n {
        for j in i + 1..n {
            out.push(rotation(n, i, j));
        }
    }
    out.push((0..n).map(Expr::var).collect());
    // 2 x_1 x - |x|^2 e_1
    let r2 = (0..n)
        .map(|i| Expr::pow(Expr::var(i), 2))
        .reduce(Expr::add)
        .unwrap_or_else(|| Expr::int(0));
    let mut k: Vec<Expr> = (0..n)
        .map(|i| Expr::mul(Expr::mul(Expr::int(2), Expr::var(0)), Expr::var(i)))
        .collect();
    k[0] = Expr::sub(k[0].clone(), r2);
    out.push(k);
    out
}

/// Known conformal Killing fields `k^a` of a catalog scene, as component
/// expressions. Empty for the generic scenes.
pub fn known_conformal_killing_fields(entry: &CatalogEntry) -> Vec<Vec<Expr>> {
    let n = entry.spec.dim();
    let name = entry.spec.name.as_str();
    if ["flat", "sphere", "hyperbolic", "flatclass"]
        .iter()
        .any(|p| name.starts_with(p))
    {
        return flat_conformal_killing_fields(n);
    }
    match name {
        "schwarzschild" => {
            let mut t = vec![Expr::int(0); 4];
            t[0] = Expr::int(1);
            vec![t, rotation(4, 2, 3)]
        }
        "fubini_study" | "s2xs2" => vec![rotation(4, 0, 1), rotation(4, 2, 3)],
        "s2xs3" => vec![
            rotation(5, 0, 1),
            rotation(5, 2, 3),
            rotation(5, 2, 4),
            rotation(5, 3, 4),
        ],
        _ => Vec::new(),
    }
}
