//! End-to-end acceptance run. Every residual must be an exact zero and every
//! computed value must equal its expected rational exactly. Prints one line
//! per criterion and exits nonzero if any criterion fails.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use tractor_core::einstein::{ckv_from_pair, einstein_tractor, recover_vector, wedge};
use tractor_core::expr::parse_with_r2;
use tractor_core::jets::{int, Rational};
use tractor_core::operators::{q_closed_form, q_einstein};
use tractor_core::riemann::{Geometry, Slot};
use tractor_core::scenes::sample_points;
use tractor_core::Expr;
use tractor_verify::report::{CheckRecord, Status, SuiteReport};
use tractor_verify::suites::{run_suite, RunOptions, Scene, Suite};

const POINTS: usize = 3;
const SCENE_BUDGET: Duration = Duration::from_secs(120);

type Outcome = Result<String, String>;
type RunKey = (String, &'static str, Option<usize>, Option<usize>);
type Criterion = (&'static str, fn(&mut Runs) -> Outcome);

#[derive(Default)]
struct Runs {
    cache: HashMap<RunKey, (SuiteReport, Duration)>,
}

impl Runs {
    fn get(
        &mut self,
        scene: &str,
        suite: Suite,
        k: Option<usize>,
        order: Option<usize>,
    ) -> Result<&SuiteReport, String> {
        Ok(&self.timed(scene, suite, k, order)?.0)
    }

    fn timed(
        &mut self,
        scene: &str,
        suite: Suite,
        k: Option<usize>,
        order: Option<usize>,
    ) -> Result<&(SuiteReport, Duration), String> {
        let key = (scene.to_string(), suite.name(), k, order);
        if !self.cache.contains_key(&key) {
            let sc = Scene::builtin(scene).map_err(|e| e.to_string())?;
            let mut opts = RunOptions::new(suite);
            opts.k = k;
            opts.order = order;
            opts.points = Some(POINTS);
            let start = Instant::now();
            let report =
                run_suite(&sc, &opts).map_err(|e| format!("{scene} {}: {e}", suite.name()))?;
            self.cache.insert(key.clone(), (report, start.elapsed()));
        }
        Ok(&self.cache[&key])
    }
}

fn select<'a>(r: &'a SuiteReport, prefix: &str) -> Vec<&'a CheckRecord> {
    r.checks
        .iter()
        .filter(|c| c.check.starts_with(prefix))
        .collect()
}

/// Every selected record is an exact zero, and there is at least one per point.
fn all_zero(r: &SuiteReport, prefix: &str) -> Result<usize, String> {
    let recs = select(r, prefix);
    for p in 0..POINTS {
        if !recs.iter().any(|c| c.point_index == p) {
            return Err(format!(
                "{} {}: no `{prefix}` record at point {p}",
                r.scene, r.suite
            ));
        }
    }
    match recs.iter().find(|c| c.status != Status::ExactZero) {
        Some(c) => Err(format!(
            "{} {} point {}: {:?}",
            r.scene, c.check, c.point_index, c.status
        )),
        None => Ok(recs.len()),
    }
}

/// Every selected record carries exactly `value`, at every point.
fn all_value(r: &SuiteReport, check: &str, value: &str) -> Result<usize, String> {
    let recs: Vec<_> = r.checks.iter().filter(|c| c.check == check).collect();
    if recs.len() != POINTS {
        return Err(format!(
            "{} {check}: {} records, expected {POINTS}",
            r.scene,
            recs.len()
        ));
    }
    let want = Status::Value {
        value: value.into(),
    };
    match recs.iter().find(|c| c.status != want) {
        Some(c) => Err(format!(
            "{} {check} point {}: {:?}, expected {value}",
            r.scene, c.point_index, c.status
        )),
        None => Ok(recs.len()),
    }
}

fn gjms_product_on_einstein_scenes(runs: &mut Runs) -> Outcome {
    let scenes = [
        "sphere4",
        "sphere5",
        "sphere6",
        "hyperbolic4",
        "fubini_study",
        "s2xs2",
        "schwarzschild",
        "flatclass4",
        "flatclass5",
        "flatclass6",
    ];
    let mut total = 0;
    let mut slowest = Duration::ZERO;
    for s in scenes {
        let (r, took) = runs.timed(s, Suite::Pk, None, Some(6))?;
        if *took > SCENE_BUDGET {
            return Err(format!("{s} took {took:?}"));
        }
        slowest = slowest.max(*took);
        for k in 1..=3 {
            for p in 0..POINTS {
                let fields = select(r, &format!("pk.product.k{k}."))
                    .into_iter()
                    .filter(|c| c.point_index == p)
                    .count();
                if fields < 3 {
                    return Err(format!("{s}: {fields} densities for k = {k} at point {p}"));
                }
            }
        }
        total += all_zero(r, "pk.product.")?;
    }
    Ok(format!(
        "{total} exact zeros over {} scenes, slowest {slowest:.1?}",
        scenes.len()
    ))
}

fn critical_q_curvature(runs: &mut Runs) -> Outcome {
    let mut n_checks = 0;
    for (scene, q) in [
        ("sphere4", "6"),
        ("sphere6", "-120"),
        ("schwarzschild", "0"),
    ] {
        let r = runs.get(scene, Suite::Q, None, None)?;
        n_checks += all_value(r, "q.s0.product", q)?;
        let neg = -q.parse::<Rational>().map_err(|e| e.to_string())?;
        n_checks += all_value(r, "q.s0.tractor_route", &neg.to_string())?;
    }
    // closed form against the Einstein value for several scalar curvatures
    for n in [4usize, 6, 8] {
        let nn = (n * (n - 1)) as i64;
        for sc in [int(nn), int(-nn), Rational::new(7.into(), 3.into()), int(0)] {
            let j = &sc / &int(2 * (n as i64 - 1));
            let a = q_closed_form(n, &j).map_err(|e| e.to_string())?;
            let b = q_einstein(n, &sc).map_err(|e| e.to_string())?;
            if a != b {
                return Err(format!("n = {n}, Sc = {sc}: closed form {a} vs {b}"));
            }
            n_checks += 1;
        }
    }
    Ok(format!(
        "{n_checks} exact values (S^4: 6, S^6: -120, Ricci-flat: 0)"
    ))
}

fn scale_independence_on_flat_class(runs: &mut Runs) -> Outcome {
    let spec = Scene::builtin("flatclass4")
        .map_err(|e| e.to_string())?
        .spec;
    let want: Vec<String> = ["1", "(1+r2)/2", "(1-r2)/2"]
        .into_iter()
        .map(String::from)
        .collect();
    let coords = spec.coords().to_vec();
    for w in &want {
        let e = parse_with_r2(w, &coords).map_err(|e| e.to_string())?;
        if !spec.einstein_scales.contains(&e) {
            return Err(format!("flatclass4 does not declare σ = {w}"));
        }
    }
    let mut total = 0;
    for k in [2, 3] {
        let r = runs.get("flatclass4", Suite::Pk, Some(k), None)?;
        for pair in ["s0s1", "s0s2", "s1s2"] {
            total += all_zero(r, &format!("pk.scale_independence.k{k}.{pair}"))?;
        }
    }
    Ok(format!("{total} exact zeros, k = 2, 3, three scales"))
}

fn tractor_calculus_on_a_curved_metric(runs: &mut Runs) -> Outcome {
    let r = runs.get("perturbed_flat_5", Suite::Tractor, None, Some(5))?;
    let mut total = 0;
    for prefix in [
        "tractor.metric",
        "tractor.d_invariance.density",
        "tractor.d_invariance.upper",
        "tractor.d_invariance.lower",
        "tractor.w_routes",
        "tractor.d_commutator",
    ] {
        total += all_zero(r, prefix)?;
    }
    Ok(format!("{total} exact zeros on perturbed_flat_5"))
}

fn conformal_killing_equivalence(runs: &mut Runs) -> Outcome {
    let mut total = 0;
    for scene in [
        "flat4",
        "sphere4",
        "hyperbolic4",
        "schwarzschild",
        "fubini_study",
        "s2xs3",
    ] {
        let r = runs.get(scene, Suite::Killing, None, None)?;
        for p in 0..POINTS {
            let recs: Vec<_> = select(r, "killing.equivalence.")
                .into_iter()
                .filter(|c| c.point_index == p)
                .collect();
            if recs.len() < 5 {
                return Err(format!("{scene}: {} fields at point {p}", recs.len()));
            }
            let ok = Status::Value {
                value: "true".into(),
            };
            if let Some(c) = recs.iter().find(|c| c.status != ok) {
                return Err(format!("{scene} {}: {:?}", c.check, c.status));
            }
            total += recs.len();
        }
    }
    for scene in ["flat4", "schwarzschild"] {
        total += all_zero(
            runs.get(scene, Suite::Killing, None, None)?,
            "killing.adjoint.",
        )?;
    }
    Ok(format!("{total} fields and adjoint residuals"))
}

fn dilation_from_round_scales() -> Result<usize, String> {
    let entry = Scene::builtin("flatclass4")
        .map_err(|e| e.to_string())?
        .spec;
    let mut count = 0;
    for p in sample_points(&entry, POINTS, 1).map_err(|e| e.to_string())? {
        let g = Geometry::new(&entry.metric, &p, 5).map_err(|e| e.to_string())?;
        let coords = g.metric().coords().to_vec();
        let x: Vec<Expr> = (0..g.dim()).map(Expr::var).collect();
        let x = g
            .field_from_exprs(&[Slot::Tangent], 0, &x, 5)
            .map_err(|e| e.to_string())?;
        let s1 = einstein_tractor(&g, &Expr::int(1)).map_err(|e| e.to_string())?;
        let s2 = einstein_tractor(&g, &parse_with_r2("(1+r2)/2", &coords).unwrap())
            .map_err(|e| e.to_string())?;
        let k = ckv_from_pair(&g, &s1, &s2).map_err(|e| e.to_string())?;
        let kk = wedge(&s1.tractor, &s2.tractor).map_err(|e| e.to_string())?;
        let lowered = g
            .flip_slot(&g.flip_slot(&kk, 0).map_err(|e| e.to_string())?, 1)
            .map_err(|e| e.to_string())?;
        let rec = recover_vector(&lowered).map_err(|e| e.to_string())?;
        for (what, f) in [("k", &k), ("X Z 𝕂", &rec)] {
            if !f.sub_aligned(&x).map_err(|e| e.to_string())?.is_zero() {
                return Err(format!("{what} ≠ x at {p:?}"));
            }
        }
        count += 2;
    }
    Ok(count)
}

fn parallel_tractors(runs: &mut Runs) -> Outcome {
    let mut total = all_zero(
        runs.get("flatclass4", Suite::Killing, None, None)?,
        "killing.wedge.",
    )?;
    total += dilation_from_round_scales()?;
    for scene in ["schwarzschild", "fubini_study"] {
        let r = runs.get(scene, Suite::Einstein, None, None)?;
        total += all_zero(r, "einstein.0.omega_i")?;
        total += all_zero(r, "einstein.0.w_i")?;
    }
    Ok(format!("{total} exact zeros"))
}

fn sixth_order_and_dimension_four(runs: &mut Runs) -> Outcome {
    let mut total = all_zero(
        runs.get("perturbed_flat_6", Suite::Pk, Some(3), Some(6))?,
        "pk.order_six.projectors",
    )?;
    total += all_zero(
        runs.get("sphere6", Suite::Pk, Some(3), Some(6))?,
        "pk.order_six.extract.",
    )?;
    for scene in ["fubini_study", "flatclass4"] {
        let r = runs.get(scene, Suite::Dim4, None, None)?;
        total += all_zero(r, "dim4.rescaled.cotton_route.")?;
        total += all_zero(r, "dim4.rescaled.tilde_projectors.")?;
        total += all_zero(r, "dim4.rescaled.tilde_yy.")?;
        total += all_zero(r, "dim4.einstein.cotton_route.")?;
    }
    for scene in ["s2xs3", "sphere5", "flatclass5"] {
        let r = runs.get(scene, Suite::Einstein, None, None)?;
        let bc: Vec<_> = select(r, "einstein.")
            .into_iter()
            .filter(|c| c.check.ends_with(".bach_cotton"))
            .collect();
        if bc.len() < POINTS {
            return Err(format!("{scene}: {} Bach-Cotton records", bc.len()));
        }
        if let Some(c) = bc.iter().find(|c| c.status != Status::ExactZero) {
            return Err(format!("{scene} {}: {:?}", c.check, c.status));
        }
        total += bc.len();
    }
    let r = runs.get("flatclass4", Suite::Dim4, None, None)?;
    let cross: Vec<_> = select(r, "dim4.")
        .into_iter()
        .filter(|c| c.check.contains(".a_term.") && !c.check.ends_with("s0s0"))
        .collect();
    if cross.is_empty() {
        return Err("no pair of distinct scales for the A term".into());
    }
    if let Some(c) = cross.iter().find(|c| c.status != Status::ExactZero) {
        return Err(format!("flatclass4 {}: {:?}", c.check, c.status));
    }
    total += cross.len();
    Ok(format!("{total} exact zeros"))
}

fn sphere_spectrum(runs: &mut Runs) -> Outcome {
    let r = runs.get("sphere4", Suite::Spectrum, None, None)?;
    let n = all_value(r, "spectrum.j1.k1", "-6")? + all_value(r, "spectrum.j1.k2", "24")?;
    Ok(format!("{n} exact eigenvalues (Yamabe -6, Paneitz 24)"))
}

fn main() {
    let mut runs = Runs::default();
    let criteria: [Criterion; 8] = [
        (
            "GJMS product formula on Einstein scales",
            gjms_product_on_einstein_scenes,
        ),
        (
            "critical Q-curvature values and closed form",
            critical_q_curvature,
        ),
        (
            "scale independence on the flat class",
            scale_independence_on_flat_class,
        ),
        (
            "tractor calculus on a curved metric",
            tractor_calculus_on_a_curved_metric,
        ),
        (
            "conformal Killing equivalence and adjoint equation",
            conformal_killing_equivalence,
        ),
        ("parallel tractors and their curvature", parallel_tractors),
        (
            "sixth-order and dimension-four formulae",
            sixth_order_and_dimension_four,
        ),
        ("GJMS spectrum on the round 4-sphere", sphere_spectrum),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f(&mut runs);
        let took = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {name}: {detail} ({took:.1?})", i + 1),
            Err(e) => {
                failed += 1;
                println!("FAIL criterion {}: {name}: {e} ({took:.1?})", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
