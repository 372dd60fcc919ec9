//! Trajectory CSV and DMP JSON files.
//!
//! Trajectory CSV: header `t,q1,...,qd`, one row per sample, `t` strictly
//! increasing with uniform spacing. Numbers are written in the shortest form
//! that parses back to the same double.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::dmp::DmpParams;
use crate::error::{Error, Result};
use crate::trajectory::{Trajectory, DT_REL_TOL};

pub fn write_trajectory<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    write!(out, "t")?;
    for j in 1..=traj.dims() {
        write!(out, ",q{j}")?;
    }
    writeln!(out)?;
    for (k, s) in traj.samples().enumerate() {
        write!(out, "{:?}", k as f64 * traj.dt())?;
        for v in s {
            write!(out, ",{v:?}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn save_trajectory(traj: &Trajectory, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_trajectory(traj, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_trajectory(path: impl AsRef<Path>) -> Result<Trajectory> {
    let path = path.as_ref();
    read_trajectory(File::open(path)?, path)
}

/// Parses trajectory CSV; `origin` only labels error messages.
pub fn read_trajectory<R: Read>(input: R, origin: &Path) -> Result<Trajectory> {
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    let dims = header.len().saturating_sub(1);
    let expected: Vec<String> = std::iter::once("t".to_string())
        .chain((1..=dims).map(|j| format!("q{j}")))
        .collect();
    if dims == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(parse_err(
            1,
            format!(
                "expected header `t,q1,...,qd`, found `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut times = Vec::new();
    let mut lines = Vec::new();
    let mut data = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != dims + 1 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", dims + 1, record.len()),
            ));
        }
        let mut values = record.iter().map(|f| {
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(line, format!("`{f}` is not a finite number")))
        });
        let t = values.next().expect("non-empty record")?;
        if let Some(&prev) = times.last() {
            if t <= prev {
                return Err(parse_err(
                    line,
                    format!("time {t} does not increase (previous {prev})"),
                ));
            }
        }
        times.push(t);
        lines.push(line);
        for v in values {
            data.push(v?);
        }
    }
    if times.len() < 2 {
        return Err(parse_err(
            lines.last().copied().unwrap_or(1),
            format!("need at least 2 samples, found {}", times.len()),
        ));
    }
    let first_step = times[1] - times[0];
    for k in 2..times.len() {
        let step = times[k] - times[k - 1];
        // Allow for the rounding of printed time stamps on top of the
        // relative spacing tolerance.
        let slack =
            DT_REL_TOL * first_step + 4.0 * f64::EPSILON * times[k].abs().max(times[k - 1].abs());
        if (step - first_step).abs() > slack {
            return Err(parse_err(
                lines[k],
                format!("non-uniform sampling: step {step} differs from first step {first_step}"),
            ));
        }
    }
    let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
    Trajectory::from_flat(dt, dims, data).map_err(|e| parse_err(1, e.to_string()))
}

pub fn dmp_to_json(params: &DmpParams) -> Result<String> {
    serde_json::to_string_pretty(params).map_err(|e| Error::Schema(e.to_string()))
}

pub fn dmp_from_json(text: &str) -> Result<DmpParams> {
    let params: DmpParams = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    params
        .validate()
        .map_err(|e| Error::Schema(e.to_string()))?;
    Ok(params)
}

pub fn save_dmp(params: &DmpParams, path: impl AsRef<Path>) -> Result<()> {
    let mut text = dmp_to_json(params)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_dmp(path: impl AsRef<Path>) -> Result<DmpParams> {
    dmp_from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dmp::{BasisLayout, Gains};
    use proptest::prelude::*;

    fn parse(text: &str) -> Result<Trajectory> {
        read_trajectory(text.as_bytes(), Path::new("test.csv"))
    }

    #[test]
    fn hand_written_fixture() {
        let t = parse("t,q1,q2\n0,1.5,-2\n0.004,1.25,-2.5\n0.008,1,-3\n").unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.dims(), 2);
        assert!((t.dt() - 0.004).abs() < 1e-15);
        assert_eq!(t.as_flat(), &[1.5, -2.0, 1.25, -2.5, 1.0, -3.0]);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = parse("t,q1\n0,0\n0.1,1\n0.05,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse("t,q1\n0,0\n0.1,1,3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = parse("time,x\n0,0\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
        let err = parse("t,q1\n0,0\n0.1,1\n0.3,2\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
        let err = parse("t,q1\n0,0\n0.1,abc\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        assert!(matches!(parse("t,q1\n0,0\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("traj.csv");
        let t = Trajectory::new(
            0.004,
            &[vec![0.1, 1e-300], vec![-3.0, 7.0 / 3.0], vec![1e9, 0.0]],
        )
        .unwrap();
        save_trajectory(&t, &path).unwrap();
        let back = load_trajectory(&path).unwrap();
        assert_eq!(back.as_flat(), t.as_flat());
        assert!((back.dt() - t.dt()).abs() <= 1e-15);
    }

    fn sample_params() -> DmpParams {
        let mut p = DmpParams::zero_weights(
            vec![0.25, -1.0],
            vec![1.0 / 3.0, 2.0],
            1.7,
            Gains::default(),
            BasisLayout::uniform_in_time(4, 1.7, 1.7, 1.0).unwrap(),
        )
        .unwrap();
        p.weights[0] = vec![1.0, -2.5, 1e-17, 123.456];
        p.metadata.context = "test".into();
        p
    }

    #[test]
    fn dmp_json_round_trip_and_schema() {
        let p = sample_params();
        let text = dmp_to_json(&p).unwrap();
        assert_eq!(dmp_from_json(&text).unwrap(), p);

        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v.as_object_mut().unwrap().remove("weights");
        assert!(matches!(
            dmp_from_json(&v.to_string()),
            Err(Error::Schema(_))
        ));

        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["extra"] = serde_json::json!(1);
        assert!(matches!(
            dmp_from_json(&v.to_string()),
            Err(Error::Schema(_))
        ));

        let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
        v["n_basis"] = serde_json::json!(3);
        assert!(matches!(
            dmp_from_json(&v.to_string()),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn dmp_fixture() {
        let text = r#"{
            "dims": 1, "tau": 2.0, "alpha_z": 25.0, "beta_z": 6.25, "alpha_x": 1.0,
            "n_basis": 2, "centers": [1.0, 0.5], "widths": [0.25, 0.25],
            "weights": [[3.5, -1.0]], "goal": [1.0], "start": [0.0],
            "metadata": {"created_at": "2024-01-01T00:00:00Z", "context": "fixture"}
        }"#;
        let p = dmp_from_json(text).unwrap();
        assert_eq!((p.dims, p.n_basis, p.tau), (1, 2, 2.0));
        assert_eq!(p.centers, vec![1.0, 0.5]);
        assert_eq!(p.weights, vec![vec![3.5, -1.0]]);
        assert_eq!(p.metadata.context, "fixture");
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_lossless(
            dims in 1usize..4,
            rows in 2usize..40,
            dt in 1e-4f64..1.0,
            seed in proptest::collection::vec(-1e6f64..1e6, 160),
        ) {
            let data: Vec<f64> = seed.iter().cycle().take(dims * rows).copied().collect();
            let t = Trajectory::from_flat(dt, dims, data).unwrap();
            let mut buf = Vec::new();
            write_trajectory(&t, &mut buf).unwrap();
            let back = read_trajectory(buf.as_slice(), Path::new("mem")).unwrap();
            prop_assert_eq!(back.as_flat(), t.as_flat());
            prop_assert!((back.dt() - dt).abs() <= 1e-15 * dt.max(1.0));
        }

        #[test]
        fn dmp_json_round_trip_is_bitwise(ws in proptest::collection::vec(-1e4f64..1e4, 8), tau in 0.01f64..10.0) {
            let mut p = sample_params();
            p.tau = tau;
            p.weights = vec![ws[..4].to_vec(), ws[4..].to_vec()];
            let back = dmp_from_json(&dmp_to_json(&p).unwrap()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
