//! Text file formats: profile and sweep CSV, OBJ meshes, SVG plots, plus
//! atomic file writes.

use std::fmt::Write as _;
use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use fmin_core::geometry::{ClosedProfile, TorusMesh};
use fmin_core::profile_ode::l_curve_solve;
use fmin_core::shooting::SweepRow;
use fmin_core::{ProblemParams, ProfileState};

pub const PROFILE_HEADER: &str = "t,x,r,theta";
pub const SWEEP_HEADER: &str =
    "R,classification,t1,x_t1,r_t1,theta_t1,theta_at_Rm1overR,g_at_Rm1overR,r_max_loc,g_max";

/// `printf("%.*g")`: `digits` significant digits, trailing zeros removed,
/// scientific notation outside `1e-4 <= |v| < 10^digits`.
pub fn fmt_g(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    // the exponent after rounding decides the style
    let sci = format!("{:.*e}", digits - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Lossless decimal for CSV cells.
pub fn fmt_f64(v: f64) -> String {
    fmt_g(v, 17)
}

pub fn profile_csv(points: &[ProfileState]) -> String {
    let mut out = String::with_capacity(80 * (points.len() + 1));
    out.push_str(PROFILE_HEADER);
    out.push('\n');
    for s in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(s.t),
            fmt_f64(s.x),
            fmt_f64(s.r),
            fmt_f64(s.theta)
        );
    }
    out
}

pub fn parse_profile_csv(text: &str) -> Result<Vec<ProfileState>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(PROFILE_HEADER) => {}
        other => bail!("expected header {PROFILE_HEADER:?}, found {other:?}"),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let fields: Vec<f64> = line
                .split(',')
                .map(str::parse)
                .collect::<Result<_, _>>()
                .with_context(|| format!("line {}", i + 2))?;
            match fields[..] {
                [t, x, r, theta] => Ok(ProfileState::new(t, x, r, theta)),
                _ => bail!("line {}: expected 4 fields, found {}", i + 2, fields.len()),
            }
        })
        .collect()
}

/// One sweep line; failed rows keep the radius and the error text.
pub type SweepRecord = std::result::Result<SweepRow, String>;

pub fn sweep_csv(radii: &[f64], rows: &[SweepRecord]) -> String {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for (radius, row) in radii.iter().zip(rows) {
        match row {
            Ok(row) => {
                let s = row.event_state;
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{},{}",
                    fmt_f64(row.radius),
                    row.classification.name(),
                    fmt_f64(s.t),
                    fmt_f64(s.x),
                    fmt_f64(s.r),
                    fmt_f64(s.theta),
                    opt(row.theta_at_level),
                    opt(row.g_at_level),
                    opt(row.r_max_loc),
                    opt(row.g_max),
                );
            }
            Err(_) => {
                let _ = writeln!(out, "{},Error,,,,,,,,", fmt_f64(*radius));
            }
        }
    }
    out
}

/// Wavefront OBJ with 9 significant digits and 1-based face indices.
pub fn obj(mesh: &TorusMesh) -> String {
    let mut out = String::with_capacity(40 * mesh.vertices.len() + 30 * mesh.faces.len());
    for v in &mesh.vertices {
        let _ = writeln!(
            out,
            "v {} {} {}",
            fmt_g(v[0], 9),
            fmt_g(v[1], 9),
            fmt_g(v[2], 9)
        );
    }
    for f in &mesh.faces {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

/// Closed profile, the comparison curve mirrored to both sides and, for a
/// constant weight, the sphere profile. `r` points up.
pub fn svg(cp: &ClosedProfile, p: &ProblemParams) -> String {
    let profile: Vec<(f64, f64)> = cp.points.iter().map(|s| (s.x, s.r)).collect();
    let x_extent = profile.iter().map(|q| q.0.abs()).fold(0.0, f64::max);
    let sphere = p.weight().constant_value().map(|_| p.sphere_radius());
    let l_extent = 1.1 * x_extent.max(sphere.unwrap_or(0.0));
    let l_curve: Vec<(f64, f64)> = (0..=200)
        .filter_map(|i| {
            let x = -l_extent + 2.0 * l_extent * i as f64 / 200.0;
            l_curve_solve(x, p).ok().map(|pt| (x, pt.l))
        })
        .collect();
    let circle: Vec<(f64, f64)> = sphere
        .map(|rad| {
            (0..=256)
                .map(|i| {
                    let a = std::f64::consts::TAU * i as f64 / 256.0;
                    (rad * a.cos(), rad * a.sin())
                })
                .collect()
        })
        .unwrap_or_default();

    let all = profile.iter().chain(&l_curve).chain(&circle);
    let (mut x0, mut x1, mut r0, mut r1) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for &(x, r) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        r0 = r0.min(r);
        r1 = r1.max(r);
    }
    let (mx, mr) = (0.05 * (x1 - x0).max(1e-12), 0.05 * (r1 - r0).max(1e-12));
    let (vx, vy, vw, vh) = (x0 - mx, -(r1 + mr), x1 - x0 + 2.0 * mx, r1 - r0 + 2.0 * mr);
    let stroke = 0.002 * vw.max(vh);

    let path = |pts: &[(f64, f64)], close: bool| {
        let mut d = String::new();
        for (i, (x, r)) in pts.iter().enumerate() {
            let _ = write!(d, "{}{:.6},{:.6}", if i == 0 { "M" } else { " L" }, x, -r);
        }
        if close {
            d.push_str(" Z");
        }
        d
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vx:.6} {vy:.6} {vw:.6} {vh:.6}">"#
    );
    let _ = writeln!(
        out,
        r#"<line x1="{:.6}" y1="0" x2="{:.6}" y2="0" stroke="gray" stroke-width="{stroke:.6}"/>"#,
        vx,
        vx + vw
    );
    if !circle.is_empty() {
        let _ = writeln!(
            out,
            r#"<path d="{}" fill="none" stroke="gray" stroke-dasharray="{:.6}" stroke-width="{stroke:.6}"/>"#,
            path(&circle, true),
            4.0 * stroke
        );
    }
    let _ = writeln!(
        out,
        r#"<path d="{}" fill="none" stroke="orange" stroke-width="{stroke:.6}"/>"#,
        path(&l_curve, false)
    );
    let _ = writeln!(
        out,
        r#"<path d="{}" fill="none" stroke="black" stroke-width="{:.6}"/>"#,
        path(&profile, true),
        1.5 * stroke
    );
    out.push_str("</svg>\n");
    out
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(
        ".{}.tmp-{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

pub fn append_line(path: &Path, line: &str) -> io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    f.write_all(line.as_bytes())?;
    f.write_all(b"\n")
}
