//! Snapshot, time-series and checkpoint files end to end.

use std::path::PathBuf;

use mpflow::config::ScenarioConfig;
use mpflow::io::{write_checkpoint, write_vtk, Checkpoint, CsvWriter, CSV_HEADER};
use mpflow::lattice::{face_to_cell, Axis};
use mpflow::scenario::{laplace_cylinder, meniscus};
use mpflow::solver::{run, DiagRow, SimState, TimeStep};
use mpflow::IoError;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// 2×2×2 periodic box with hand-set fields.
fn trivial_state() -> SimState {
    let mut cfg = laplace_cylinder(0.5, 1.0, 1.0, 2);
    cfg.grid.dims = [2, 2, 2];
    let mut s = cfg.build_state().unwrap();
    s.f.values = vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.0 / 3.0, 2.0 / 3.0, 0.125];
    s.refresh_derived();
    s.p.values = (0..8).map(|i| 100.0 + 0.1 * i as f64).collect();
    for axis in Axis::ALL {
        for (i, v) in s.u.get_mut(axis).iter_mut().enumerate() {
            *v = 0.01 * (i as f64 + 1.0) * (axis.index() as f64 + 1.0);
        }
    }
    s.time = 0.5;
    s.step = 7;
    s
}

#[test]
fn trivial_vtk_matches_golden_file() {
    let mut out = Vec::new();
    write_vtk(&trivial_state(), &mut out).unwrap();
    let path = golden_path("trivial_2x2x2.vtk");
    if std::env::var_os("MPFLOW_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &out).unwrap();
    }
    let golden = std::fs::read(&path).expect("golden file present");
    assert_eq!(
        String::from_utf8(out).unwrap(),
        String::from_utf8(golden).unwrap()
    );
}

/// Parse the named cell scalars and the velocity vectors back out of a
/// legacy VTK file.
fn read_vtk(text: &str) -> (Vec<(String, Vec<f64>)>, Vec<[f64; 3]>) {
    let mut scalars = Vec::new();
    let mut vectors = Vec::new();
    let mut lines = text.lines().peekable();
    while let Some(line) = lines.next() {
        if let Some(rest) = line.strip_prefix("SCALARS ") {
            let name = rest.split_whitespace().next().unwrap().to_string();
            assert_eq!(lines.next(), Some("LOOKUP_TABLE default"));
            let mut vals = Vec::new();
            while let Some(l) = lines.peek() {
                match l.parse::<f64>() {
                    Ok(v) => {
                        vals.push(v);
                        lines.next();
                    }
                    Err(_) => break,
                }
            }
            scalars.push((name, vals));
        } else if line.starts_with("VECTORS ") {
            for l in lines.by_ref() {
                let v: Vec<f64> = l.split_whitespace().map(|x| x.parse().unwrap()).collect();
                vectors.push([v[0], v[1], v[2]]);
            }
        }
    }
    (scalars, vectors)
}

fn close9(a: f64, b: f64) -> bool {
    (a - b).abs() <= 5e-9 * a.abs().max(b.abs()) || (a - b).abs() < 1e-300
}

#[test]
fn mid_run_snapshot_rereads_to_nine_digits() {
    let mut cfg = meniscus(0.5);
    cfg.numerics.end_time_us = 0.05;
    cfg.output.cadence_us = 0.05;
    let mut state = cfg.build_state().unwrap();
    run(&mut state, &cfg.run_config(), |_, _| Ok(())).unwrap();
    assert!(state.max_velocity() > 0.0);

    let mut out = Vec::new();
    write_vtk(&state, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    assert!(text
        .lines()
        .nth(1)
        .unwrap()
        .contains(&format!("step={}", state.step)));
    let (scalars, vectors) = read_vtk(&text);
    let expected = [
        ("f", &state.f.values),
        ("V", &state.wall.volume.values),
        ("p", &state.p.values),
        ("rho", &state.rho.values),
        ("xi0", &state.wall.xi0.values),
    ];
    assert_eq!(scalars.len(), expected.len());
    for ((name, vals), (want_name, want)) in scalars.iter().zip(expected) {
        assert_eq!(name, want_name);
        assert_eq!(vals.len(), want.len());
        for (i, (a, b)) in vals.iter().zip(want.iter()).enumerate() {
            assert!(close9(*a, *b), "{name}[{i}]: {a} vs {b}");
        }
    }
    let cells = face_to_cell(&state.u, &state.grid);
    assert_eq!(vectors.len(), state.grid.n_cells());
    for (i, v) in vectors.iter().enumerate() {
        for d in 0..3 {
            assert!(close9(v[d], cells[d].values[i]), "velocity[{i}][{d}]");
        }
    }
}

fn small_meniscus() -> ScenarioConfig {
    let mut cfg = meniscus(0.5);
    cfg.numerics.time_step = TimeStep::Fixed { dt_us: 0.004 };
    cfg.numerics.end_time_us = 0.4;
    cfg.output.cadence_us = 0.04;
    cfg.output.reproducible = true;
    cfg
}

fn series(rows: &[DiagRow]) -> Vec<u8> {
    let mut w = CsvWriter::new(Vec::new()).unwrap();
    for r in rows {
        w.write(r).unwrap();
    }
    w.into_inner()
}

#[test]
fn csv_has_header_and_one_row_per_cadence() {
    let cfg = small_meniscus();
    let mut state = cfg.build_state().unwrap();
    let summary = run(&mut state, &cfg.run_config(), |_, _| Ok(())).unwrap();
    let text = String::from_utf8(series(&summary.rows)).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(CSV_HEADER));
    let expected = (cfg.numerics.end_time_us / cfg.output.cadence_us + 1e-9).floor() as usize + 1;
    assert_eq!(lines.count(), expected);
}

#[test]
fn resume_at_half_time_reproduces_the_series() {
    let cfg = small_meniscus();
    let mut whole = cfg.build_state().unwrap();
    let full = run(&mut whole, &cfg.run_config(), |_, _| Ok(())).unwrap();

    let mut half_cfg = cfg.clone();
    half_cfg.numerics.end_time_us = 0.5 * cfg.numerics.end_time_us;
    let mut first = half_cfg.build_state().unwrap();
    let head = run(&mut first, &half_cfg.run_config(), |_, _| Ok(())).unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&first, &cfg, &mut bytes).unwrap();

    let ck = Checkpoint::read(&mut bytes.as_slice()).unwrap();
    ck.check_config(&cfg).unwrap();
    let mut resumed = ck.restore().unwrap();
    let tail = run(&mut resumed, &ck.config.run_config(), |_, _| Ok(())).unwrap();

    // the resumed run repeats the checkpoint row first
    let mut rows = head.rows.clone();
    rows.extend_from_slice(&tail.rows[1..]);
    assert_eq!(series(&rows), series(&full.rows));
    assert_eq!(resumed.u, whole.u);
    assert_eq!(resumed.f.values, whole.f.values);
    assert_eq!(resumed.p.values, whole.p.values);
}

#[test]
fn checkpoint_rejects_other_config_and_damage() {
    let cfg = small_meniscus();
    let state = cfg.build_state().unwrap();
    let mut bytes = Vec::new();
    write_checkpoint(&state, &cfg, &mut bytes).unwrap();

    let mut other = cfg.clone();
    other.fluids.phase2.density_pg_per_um3 = 0.5;
    let ck = Checkpoint::read(&mut bytes.as_slice()).unwrap();
    assert!(matches!(
        ck.check_config(&other),
        Err(IoError::HashMismatch)
    ));

    let cut = &bytes[..bytes.len() - 100];
    let err = Checkpoint::read(&mut &cut[..])
        .and_then(|c| c.restore())
        .err();
    assert!(matches!(err, Some(IoError::Truncated)), "{err:?}");
}
