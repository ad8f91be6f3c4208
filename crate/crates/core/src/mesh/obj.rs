//! ASCII OBJ subset (`v` and `f` records, 1-based indices) and CSV export
//! of slice segments.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::{CrossSectionCycle, MeshError, TriMesh};
use crate::Vec3;

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid mesh")]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn parse_err(line: usize, message: impl Into<String>) -> ObjError {
    ObjError::Parse {
        line,
        message: message.into(),
    }
}

/// Reads `v x y z` and triangular `f a b c` records. Face tokens may carry
/// `/vt/vn` suffixes, which are ignored; other record types are skipped.
pub fn read_obj<R: BufRead>(reader: R) -> Result<TriMesh, ObjError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for slot in &mut c {
                    let tok = tokens
                        .next()
                        .ok_or_else(|| parse_err(lineno, "vertex needs 3 coordinates"))?;
                    *slot = tok
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(Vec3::new(c[0], c[1], c[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = tokens
                    .map(|tok| {
                        let head = tok.split('/').next().unwrap_or("");
                        match head.parse::<usize>() {
                            Ok(i) if i >= 1 => Ok(i - 1),
                            _ => Err(parse_err(lineno, format!("bad face index {tok:?}"))),
                        }
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(
                        lineno,
                        format!("expected a triangle, got {} indices", idx.len()),
                    ));
                }
                if let Some(&bad) = idx.iter().find(|&&i| i >= vertices.len()) {
                    return Err(parse_err(
                        lineno,
                        format!("face index {} precedes its vertex", bad + 1),
                    ));
                }
                triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    Ok(TriMesh::new(vertices, triangles)?)
}

/// Writes vertices with 17 significant digits so positions round-trip.
pub fn write_obj<W: Write>(mesh: &TriMesh, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "# mintube mesh: {} vertices, {} triangles",
        mesh.vertex_count(),
        mesh.triangles().len()
    )?;
    for v in mesh.vertices() {
        writeln!(out, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z)?;
    }
    for t in mesh.triangles() {
        writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
    }
    out.flush()
}

/// One row per segment: level, cycle index, segment index, midpoint,
/// tangent, normal, conormal, length.
pub fn write_slice_csv<W: Write>(cycles: &[CrossSectionCycle], out: W) -> Result<(), ObjError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t", "cycle", "segment", "mid_x", "mid_y", "mid_z", "tan_x", "tan_y", "tan_z", "gamma_x",
        "gamma_y", "gamma_z", "nu_x", "nu_y", "nu_z", "ds",
    ])?;
    for (c, cycle) in cycles.iter().enumerate() {
        for (k, s) in cycle.segments().iter().enumerate() {
            let mut rec = vec![
                format!("{:.17e}", cycle.level()),
                c.to_string(),
                k.to_string(),
            ];
            for v in [s.midpoint, s.tangent, s.normal, s.conormal] {
                rec.extend(v.iter().map(|x| format!("{x:.17e}")));
            }
            rec.push(format!("{:.17e}", s.length));
            w.write_record(&rec)?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn round_trip_is_exact() {
        let m = TriMesh::from_tube_grid(12, 3, |i, j| {
            let u = i as f64 / 12.0 * TAU + 0.1;
            Vec3::new(1.3 * u.cos(), u.sin() / 3.0, (j as f64).sqrt())
        })
        .unwrap();
        let mut buf = Vec::new();
        write_obj(&m, &mut buf).unwrap();
        let back = read_obj(buf.as_slice()).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parse_error_carries_line() {
        let src = "# c\nv 0 0 0\nv 1 abc 0\n";
        match read_obj(src.as_bytes()) {
            Err(ObjError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        let quad = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(
            read_obj(quad.as_bytes()),
            Err(ObjError::Parse { line: 5, .. })
        ));
    }

    #[test]
    fn non_manifold_named() {
        let src = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nf 1 2 3\nf 2 1 4\nf 1 2 5\n";
        match read_obj(src.as_bytes()) {
            Err(ObjError::Mesh(MeshError::NonManifoldEdge {
                a: 0,
                b: 1,
                count: 3,
            })) => {}
            other => panic!("unexpected {other:?}"),
        }
    }
}
