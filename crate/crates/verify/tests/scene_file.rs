use tractor_core::scenes::{builtin, BUILTIN_NAMES};
use tractor_verify::scene_file::{load_scene, parse_scene, write_scene, SceneFileError};

const SPHERE: &str = r#"
[scene]
name = "sphere4"
dimension = 4
signature = "riemannian"
coordinates = "x1, x2, x3, x4"

[metric]
g_11 = "4/(1+r2)^2"
g_22 = "4/(1+r2)^2"
g_33 = "4/(1+r2)^2"
g_44 = "4/(1+r2)^2"

[einstein_scales]
scale_1 = "1"
scale_2 = "(1 - r2)/(1 + r2)"

[samples]
point_1 = "0, 1/2, 0, 0"
point_2 = ["1/3", "0", "-1/4", "0"]
seed = 7
count = 4
"#;

#[test]
fn builtin_scenes_survive_a_round_trip() {
    for name in BUILTIN_NAMES {
        let spec = builtin(name).unwrap().spec;
        let text = write_scene(&spec);
        let back = parse_scene(&text).unwrap_or_else(|e| panic!("{name}: {e}\n{text}"));
        assert_eq!(back, spec, "{name}");
    }
}

#[test]
fn hand_written_scene_parses() {
    let spec = parse_scene(SPHERE).unwrap();
    assert_eq!(spec.name, "sphere4");
    assert_eq!(spec.dim(), 4);
    assert_eq!(spec.einstein_scales.len(), 2);
    assert_eq!(spec.sample_points.len(), 2);
    assert_eq!(spec.sample_points[1][2], "-1/4".parse().unwrap());
    assert_eq!(spec.sample_seed, Some(7));
    assert_eq!(spec.sample_count, Some(4));
}

#[test]
fn scene_files_load_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sphere.toml");
    std::fs::write(&path, SPHERE).unwrap();
    assert_eq!(load_scene(&path).unwrap(), parse_scene(SPHERE).unwrap());
    assert!(matches!(
        load_scene(&dir.path().join("missing.toml")),
        Err(SceneFileError::Io { .. })
    ));
}

fn err(text: &str) -> String {
    parse_scene(text).unwrap_err().to_string()
}

#[test]
fn malformed_scenes_are_rejected() {
    assert!(err("[metric]\ng_11 = \"1\"").contains("missing section [scene]"));
    assert!(err("[scene\n").contains("TOML"));
    let swapped = SPHERE.replace("g_44", "g_43");
    assert!(err(&swapped).contains("g_43"));
    let inexact = SPHERE.replace("0, 1/2, 0, 0", "0, 0.5, 0, 0");
    assert!(err(&inexact).contains("not an exact rational"));
    let short = SPHERE.replace("0, 1/2, 0, 0", "0, 1/2, 0");
    assert!(parse_scene(&short).is_err());
    let sig = SPHERE.replace("\"riemannian\"", "\"3,2\"");
    assert!(err(&sig).contains("does not match dimension"));
    let low = SPHERE.replace("dimension = 4", "dimension = 2");
    assert!(parse_scene(&low).is_err());
    let bad_expr = SPHERE.replace("(1 - r2)/(1 + r2)", "(1 - r2");
    assert!(err(&bad_expr).contains("scale_2"));
}

#[test]
fn points_outside_the_domain_are_rejected() {
    let text = SPHERE.replace("[samples]", "[samples]\npositive_1 = \"1/10 - r2\"");
    assert!(parse_scene(&text).is_err());
}
