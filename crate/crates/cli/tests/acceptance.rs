//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p imu-dse-cli --test acceptance -- --nocapture` to see the report.

#[path = "../../core/tests/common/reference_tables.rs"]
mod reference_tables;

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use imu_dse::body_model::{forward_kinematics, Pose, Skeleton};
use imu_dse::config_space::{
    enumerate_configurations, validate_configuration, Constraints, SensorConfiguration, SensorTable,
};
use imu_dse::dse::analysis::{occurrence_counts, rank};
use imu_dse::dse::results::load_results;
use imu_dse::dse::EvaluationRecord;
use imu_dse::imu::synthesize_accelerations;
use imu_dse::metrics::{evaluate, jitter, Metric, PoseErrorReport};
use imu_dse::rotation::{axis_angle_to_matrix, orthonormality_error, rotation_about};
use reference_tables::{BEST_MESH_CONFIGS, BEST_MESH_PER_COUNT};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

struct Outcome {
    id: u8,
    pass: bool,
    line: String,
}

fn run(id: u8, name: &str, limit: Duration, f: impl FnOnce() -> Check) -> Outcome {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (pass, detail) = match result {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; too slow")),
        Err(e) => (false, e),
    };
    let line = format!(
        "{} criterion {id} {name}: {detail} ({:.2} s, limit {} s)",
        if pass { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    Outcome { id, pass, line }
}

fn mesh_record(id: usize, ids: &[usize], mesh: f64) -> EvaluationRecord {
    EvaluationRecord {
        config_id: id,
        configuration: SensorConfiguration::new(ids.iter().copied()),
        report: Some(PoseErrorReport {
            mesh_cm: mesh,
            ..Default::default()
        }),
        runtime_s: None,
    }
}

fn combined_metric_argmin() -> Check {
    let records: Vec<_> = BEST_MESH_PER_COUNT
        .iter()
        .enumerate()
        .map(|(i, (_, e, ids))| mesh_record(i, ids, *e))
        .collect();
    let ranking = rank(&records, Metric::Mesh, 0.5).map_err(|e| e.to_string())?;
    let first = &ranking[0];
    let count = first.record.configuration.count();
    ensure!(count == 4, "first configuration has {count} sensors");
    // 6.03 is not a binary fraction, so 5.015 is reached to within one ulp
    ensure!((first.score - 5.015).abs() <= 1e-12, "score {}", first.score);
    Ok(format!("count {count} first, score {}", first.score))
}

fn occurrence_reproduction() -> Check {
    let best: Vec<_> = BEST_MESH_CONFIGS
        .iter()
        .map(|ids| SensorConfiguration::new(ids.iter().copied()))
        .collect();
    let table = occurrence_counts(&SensorTable::basic(), &best, &[]);
    let mut parts = Vec::new();
    for (label, expected) in [("0", 44), ("2", 18), ("21, 22", 24), ("16, 17", 13)] {
        let got = table.row(label).map(|r| r.best_count);
        ensure!(got == Some(expected), "row {label}: {got:?}, expected {expected}");
        parts.push(format!("{label} = {expected}"));
    }
    Ok(parts.join(", "))
}

fn configuration_validity() -> Check {
    let table = SensorTable::basic();
    let constraints = Constraints::default();
    for ids in BEST_MESH_CONFIGS {
        let c = SensorConfiguration::new(ids.iter().copied());
        let v = validate_configuration(&c, &table, &constraints).map_err(|e| e.to_string())?;
        ensure!(v.is_valid(), "{c} rejected: {:?}", v.violations);
    }
    let bad = validate_configuration(&SensorConfiguration::new([0, 2, 7]), &table, &constraints)
        .map_err(|e| e.to_string())?;
    ensure!(
        bad.violations.iter().any(|v| v.constraint() == "one_per_segment"),
        "[0, 2, 7] violations: {:?}",
        bad.violations
    );
    Ok("44/44 valid, [0, 2, 7] fails one_per_segment".into())
}

fn enumeration_oracle() -> Check {
    let table = SensorTable::basic();
    let constraints = Constraints::default();
    let enumerated = enumerate_configurations(&table, &constraints);
    let mut ids = Vec::with_capacity(25);
    let mut oracle = Vec::new();
    for mask in 0u32..1 << 24 {
        ids.clear();
        ids.push(0);
        ids.extend((1..25).filter(|i| mask & (1 << (i - 1)) != 0));
        let c = SensorConfiguration::new(ids.iter().copied());
        if validate_configuration(&c, &table, &constraints).map_err(|e| e.to_string())?.is_valid() {
            oracle.push(c);
        }
    }
    oracle.sort_by(|a, b| a.canonical_cmp(b));
    ensure!(enumerated == oracle, "enumeration {} vs oracle {}", enumerated.len(), oracle.len());
    Ok(format!(
        "{} configurations, identical to the brute-force scan",
        enumerated.len()
    ))
}

fn synthesis_analytics() -> Check {
    let (fps, n, frames) = (60.0, 4, 120);
    let a = Vector3::new(1.2, -3.4, 0.7);
    let v = Vector3::new(0.3, 0.1, -0.2);
    let quad: Vec<_> = (0..frames)
        .map(|t| {
            let s = t as f64 / fps;
            a * (0.5 * s * s) + v * s + Vector3::new(0.1, 0.9, 0.0)
        })
        .collect();
    let acc = synthesize_accelerations(&quad, fps, n).map_err(|e| e.to_string())?;
    ensure!(acc.len() == frames - 2 * n, "length {}", acc.len());
    let worst = acc.iter().map(|x| (x - a).norm() / a.norm()).fold(0.0, f64::max);
    ensure!(worst <= 1e-9, "quadratic relative error {worst:e}");

    // binary-exact affine samples
    let affine: Vec<_> = (0..frames)
        .map(|t| Vector3::new(1.5 + 0.25 * t as f64, -2.0 + 0.5 * t as f64, 3.0))
        .collect();
    let zero = synthesize_accelerations(&affine, fps, n).map_err(|e| e.to_string())?;
    ensure!(zero.iter().all(|x| *x == Vector3::zeros()), "affine trajectory gave nonzero acceleration");
    Ok(format!("quadratic max rel err {worst:.1e}, affine exactly 0, length {}", acc.len()))
}

/// Rodrigues' formula written out, independent of the library's conversion.
fn rodrigues(v: &Vector3<f64>) -> Matrix3<f64> {
    let theta = v.norm();
    if theta == 0.0 {
        return Matrix3::identity();
    }
    let k = v / theta;
    let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
    Matrix3::identity() + kx * theta.sin() + kx * kx * (1.0 - theta.cos())
}

fn random_rotvec(rng: &mut ChaCha8Rng) -> Vector3<f64> {
    let v = Vector3::new(
        rng.random_range(-1.0f64..1.0),
        rng.random_range(-1.0f64..1.0),
        rng.random_range(-1.0f64..1.0),
    );
    v / v.norm().max(1e-9) * rng.random_range(0.0..std::f64::consts::PI)
}

fn kinematics_suite() -> Check {
    let skel = Skeleton::smpl_default();
    let fk = forward_kinematics(&skel, &Pose::rest(24)).map_err(|e| e.to_string())?;
    let mut rest = vec![Vector3::zeros(); 24];
    for j in 1..24 {
        rest[j] = rest[skel.parents[j].unwrap()] + skel.rest_offsets[j];
    }
    ensure!(fk.global_positions == rest, "identity pose positions differ from accumulated rest offsets");
    ensure!(fk.global_rotations.iter().all(|r| *r == Matrix3::identity()), "identity pose rotations");

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let mut pose = Pose::rest(24);
        for r in pose.local_rotations.iter_mut() {
            *r = random_rotvec(&mut rng);
        }
        let fk = forward_kinematics(&skel, &pose).map_err(|e| e.to_string())?;
        worst = fk.global_rotations.iter().map(orthonormality_error).fold(worst, f64::max);
    }
    ensure!(worst < 1e-9, "orthonormality error {worst:e}");

    let chain = Skeleton::new(vec![None, Some(0)], vec![Vector3::zeros(), Vector3::new(0.1, 0.4, -0.2)], vec![])
        .map_err(|e| e.to_string())?;
    let mut chain_err: f64 = 0.0;
    for _ in 0..1000 {
        let pose = Pose {
            local_rotations: vec![random_rotvec(&mut rng), random_rotvec(&mut rng)],
            root_translation: Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.5),
        };
        let fk = forward_kinematics(&chain, &pose).map_err(|e| e.to_string())?;
        let r0 = rodrigues(&pose.local_rotations[0]);
        let r1 = r0 * rodrigues(&pose.local_rotations[1]);
        let p1 = pose.root_translation + r0 * chain.rest_offsets[1];
        chain_err = chain_err
            .max((fk.global_rotations[0] - r0).amax())
            .max((fk.global_rotations[1] - r1).amax())
            .max((fk.global_positions[0] - pose.root_translation).amax())
            .max((fk.global_positions[1] - p1).amax());
    }
    ensure!(chain_err <= 1e-12, "2-joint chain deviates by {chain_err:e}");
    Ok(format!(
        "rest positions exact, orthonormality {worst:.1e} over 10000 poses, chain oracle {chain_err:.1e}"
    ))
}

fn metric_suite() -> Check {
    let skel = Skeleton::smpl_default();
    let fps = 60.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x: Vec<Pose> = (0..12)
        .map(|_| {
            let mut p = Pose::rest(24);
            for r in p.local_rotations.iter_mut() {
                *r = random_rotvec(&mut rng) * 0.5;
            }
            p
        })
        .collect();
    let r = evaluate(&x, &x, &skel, fps).map_err(|e| e.to_string())?;
    ensure!(
        (r.sip_deg, r.angular_deg, r.positional_cm, r.mesh_cm) == (0.0, 0.0, 0.0, 0.0),
        "self comparison {r:?}"
    );

    let moving = |f: &dyn Fn(f64) -> Vector3<f64>| -> Vec<Pose> {
        (0..12)
            .map(|t| Pose {
                local_rotations: vec![Vector3::zeros(); 24],
                root_translation: f(t as f64 / fps),
            })
            .collect()
    };
    let constant_velocity = jitter(&moving(&|s| Vector3::new(1.5, -0.5, 0.25) * s), &skel, fps).map_err(|e| e.to_string())?;
    ensure!(constant_velocity.abs() < 1e-9, "constant velocity jitter {constant_velocity}");
    let cubic = jitter(&moving(&|s| Vector3::new(2000.0, 0.0, 0.0) * (s * s * s)), &skel, fps).map_err(|e| e.to_string())?;
    ensure!((cubic - 12.0).abs() <= 12.0 * 1e-9, "cubic jitter {cubic}");

    let q = rotation_about(&Vector3::new(0.3, -1.0, 0.4), 30f64.to_radians());
    let rotated: Vec<Pose> = x
        .iter()
        .map(|p| {
            let mut p = p.clone();
            let root = q * axis_angle_to_matrix(&p.local_rotations[0]);
            p.local_rotations[0] = imu_dse::rotation::matrix_to_axis_angle(&root);
            p
        })
        .collect();
    let r = evaluate(&rotated, &x, &skel, fps).map_err(|e| e.to_string())?;
    ensure!((r.sip_deg - 30.0).abs() < 1e-9, "sip {}", r.sip_deg);
    ensure!((r.angular_deg - 30.0).abs() < 1e-9, "angular {}", r.angular_deg);
    Ok(format!(
        "self-comparison zero, constant-velocity jitter {constant_velocity:.1e}, cubic jitter {cubic}, sip {:.12} / angular {:.12}",
        r.sip_deg, r.angular_deg
    ))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_imu-dse"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!(
            "`imu-dse {}` failed: {}",
            args.join(" "),
            String::from_utf8_lossy(&out.stderr)
        ));
    }
    Ok(())
}

/// Generates the desk corpus and runs the seven-sensor exploration with 1 and 8 workers.
fn end_to_end_determinism(work: &Path) -> Check {
    let corpus = configs_dir().join("desk_corpus.toml");
    let config = work.join("desk_run.toml");
    std::fs::copy(configs_dir().join("desk_run.toml"), &config).map_err(|e| e.to_string())?;
    let motions = work.join("motions");
    cli(&["motions", "gen", "--spec", corpus.to_str().unwrap(), "--out", motions.to_str().unwrap()])?;
    for (workers, out) in [("1", "w1"), ("8", "w8")] {
        let out = work.join(out);
        cli(&["dse", "run", "--config", config.to_str().unwrap(), "--workers", workers, "--out", out.to_str().unwrap()])?;
    }
    let a = std::fs::read(work.join("w1/results.csv")).map_err(|e| e.to_string())?;
    let b = std::fs::read(work.join("w8/results.csv")).map_err(|e| e.to_string())?;
    let sequences = std::fs::read_dir(&motions).map_err(|e| e.to_string())?.count();
    ensure!(sequences == 20, "{sequences} sequences generated");
    ensure!(a == b, "results differ between 1 and 8 workers");
    let records = a.iter().filter(|&&c| c == b'\n').count() - 1;
    ensure!(records <= 40, "{records} configurations");
    Ok(format!("{sequences} sequences, {records} configurations, 1- and 8-worker results byte-identical"))
}

/// Mesh errors (cm) observed on the desk corpus with seed 7.
const PINNED_MESH: [(&[usize], f64); 3] = [
    (&[0, 2, 16, 17, 18, 19, 20], 8.131350176259117),
    (&[0, 2], 14.61804678737029),
    (&[0, 20], 14.617304805282755),
];

fn pinned_regression(work: &Path) -> Check {
    let records = load_results(work.join("w1/results.csv")).map_err(|e| e.to_string())?;
    let mesh = |ids: &[usize]| {
        records
            .iter()
            .find(|r| r.configuration.ids() == ids)
            .and_then(|r| r.report.map(|x| x.mesh_cm))
    };
    let full = mesh(PINNED_MESH[0].0).ok_or("full configuration missing")?;
    for r in records.iter().filter(|r| r.configuration.count() == 2) {
        let e = r.report.ok_or("invalid 2-sensor record")?.mesh_cm;
        ensure!(full <= e, "full {full} > {} {e}", r.configuration);
    }
    for (ids, pinned) in PINNED_MESH {
        let got = mesh(ids).ok_or("pinned configuration missing")?;
        ensure!((got - pinned).abs() <= 1e-9 * pinned, "{ids:?}: {got} vs pinned {pinned}");
    }
    Ok(format!(
        "full 7-sensor mesh {full:.4} cm <= 2-sensor {:.4} / {:.4} cm, matches pinned values",
        PINNED_MESH[1].1, PINNED_MESH[2].1
    ))
}

fn main() -> std::process::ExitCode {
    let work = tempfile::tempdir().unwrap();
    let secs = Duration::from_secs;
    let outcomes = vec![
        run(1, "combined-metric argmin", secs(1), combined_metric_argmin),
        run(2, "occurrence reproduction", secs(1), occurrence_reproduction),
        run(3, "configuration validity", secs(1), configuration_validity),
        run(4, "enumeration oracle equivalence", secs(60), enumeration_oracle),
        run(5, "synthesis analytics", secs(1), synthesis_analytics),
        run(6, "kinematics suite", secs(10), kinematics_suite),
        run(7, "metric suite", secs(5), metric_suite),
        run(8, "end-to-end determinism", secs(600), || end_to_end_determinism(work.path())),
        run(9, "pinned regression", secs(1), || pinned_regression(work.path())),
    ];
    for o in &outcomes {
        println!("{}", o.line);
    }
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.pass).map(|o| o.id).collect();
    if failed.is_empty() {
        println!("acceptance: {} of {} criteria passed", outcomes.len(), outcomes.len());
        std::process::ExitCode::SUCCESS
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::ExitCode::FAILURE
    }
}
